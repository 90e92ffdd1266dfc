#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
settings.py
Environment-driven defaults for the CLI. Library functions never read these
directly; they take explicit arguments.
"""

from __future__ import annotations
import os
from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)))
    except (TypeError, ValueError):
        return default


def _env_float(name: str, default: float) -> float:
    try:
        return float(os.getenv(name, str(default)))
    except (TypeError, ValueError):
        return default


DEFAULT_MODE  = (os.getenv("EXTERNALITY_MODE") or "paper").strip().lower()
if DEFAULT_MODE not in ("paper", "standard"):
    DEFAULT_MODE = "paper"

LOG_LEVEL     = (os.getenv("EXTERNALITY_LOG_LEVEL") or "WARNING").strip().upper()
PLOT_SAMPLES  = _env_int("EXTERNALITY_PLOT_SAMPLES", 50)
DEFAULT_SEED  = _env_int("EXTERNALITY_SEED", 42)
SWEEP_SPREAD  = _env_float("EXTERNALITY_SWEEP_SPREAD", 0.25)
