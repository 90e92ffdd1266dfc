#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
sweep.py
Parameter-space tooling: seeded rejection sampling of valid scenarios,
vectorized one-parameter sweeps, and closed-form vs central-difference
sensitivities of the reference tax/deadweight formulas.
"""

from __future__ import annotations
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from model_core import (
    PARAMETERS, ConstraintViolation, ExternalityError, ExternalityScenario, Mode,
    closed_forms, find_violation, paper_closed_forms, validate, violation_labels,
)

TARGETS = ("tau1", "tau2", "alpha1", "alpha2")
SERIES_COLUMNS = ["value", "tau1", "tau2", "alpha1", "alpha2", "x_social1", "x_social2"]

# give up once this many draws in a row are rejected with nothing accepted
SEED_MASK = 0xFFFF_FFFF_FFFF_FFFF
REJECTION_FACTOR = 10
# absolute ceiling on draws, whatever has been accepted
DRAW_CEILING_FACTOR = 1000


class RegionInfeasible(ExternalityError):
    pass


class UnknownParameter(ExternalityError):
    pass


class PerturbationInvalid(ExternalityError):
    pass


def _check_name(name: str, allowed) -> str:
    if name not in allowed:
        raise UnknownParameter(f"unknown name {name!r}; expected one of {', '.join(allowed)}")
    return name


# ---------- region & sampling ----------

Interval = Tuple[float, float]


@dataclass(frozen=True)
class ParameterRegion:
    a: Interval
    b: Interval
    c: Interval
    y1: Interval

    def __post_init__(self):
        for name in PARAMETERS:
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{name}: bounds must be finite, got {(lo, hi)}")
            if lo <= 0:
                raise ValueError(f"{name}: lower bound must be > 0, got {lo}")
            if lo > hi:
                raise ValueError(f"{name}: empty interval {(lo, hi)}")

    @classmethod
    def around(cls, scenario: ExternalityScenario, spread: float) -> "ParameterRegion":
        """[p(1 - spread), p(1 + spread)] for every parameter."""
        if not 0 < spread < 1:
            raise ValueError(f"spread must lie in (0, 1), got {spread}")
        return cls(**{p: (v * (1 - spread), v * (1 + spread))
                      for p, v in scenario.parameters().items()})

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lows = np.array([getattr(self, p)[0] for p in PARAMETERS], dtype=float)
        highs = np.array([getattr(self, p)[1] for p in PARAMETERS], dtype=float)
        return lows, highs


def sample(region: ParameterRegion, n: int, seed: int) -> List[ExternalityScenario]:
    """
    n valid scenarios by uniform rejection sampling. Same (region, n, seed),
    same list.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")

    # any 64-bit integer, negative included, names a stream
    rng = np.random.default_rng(int(seed) & SEED_MASK)
    lows, highs = region.bounds()
    out: List[ExternalityScenario] = []
    streak = draws = 0
    while len(out) < n:
        a, b, c, y1 = (float(v) for v in rng.uniform(lows, highs))
        draws += 1
        if find_violation(a, b, c, y1) is None:
            out.append(validate(a, b, c, y1))
            streak = 0
            continue
        streak += 1
        if (streak >= REJECTION_FACTOR * n and not out) or draws >= DRAW_CEILING_FACTOR * n:
            raise RegionInfeasible(
                f"{draws} draws, {len(out)} accepted: region {region} cannot satisfy c > b > a")
    logger.debug("[sweep] sampled {} scenario(s) in {} draws (seed={})", n, draws, seed)
    return out


# ---------- grid sweep ----------

@dataclass(frozen=True)
class SweepSeries:
    base: ExternalityScenario
    parameter: str
    mode: Mode
    grid: np.ndarray = field(repr=False)
    points: pd.DataFrame = field(repr=False)    # SERIES_COLUMNS, evaluated points in grid order
    skipped: pd.DataFrame = field(repr=False)   # value, violation

    @property
    def evaluated(self) -> int:
        return len(self.points)

    def violations(self) -> Iterator[ConstraintViolation]:
        params = self.base.parameters()
        for value, label in zip(self.skipped["value"], self.skipped["violation"]):
            yield ConstraintViolation(label, {**params, self.parameter: float(value)})


def sweep_grid(base: ExternalityScenario, parameter: str, start: float, stop: float,
               steps: int, mode=Mode.PAPER) -> SweepSeries:
    """
    Uniform grid over one parameter, endpoints included. Invalid points are
    kept in `skipped` with the predicate validate() would have raised.
    """
    _check_name(parameter, PARAMETERS)
    mode = Mode(mode)
    if not start < stop:
        raise ValueError(f"start ({start}) must be below stop ({stop})")
    if isinstance(steps, bool) or not isinstance(steps, (int, np.integer)) or steps < 2:
        raise ValueError(f"steps must be an integer >= 2, got {steps!r}")

    grid = np.linspace(start, stop, int(steps))
    if not np.all(np.diff(grid) > 0):
        raise ValueError(f"grid [{start}, {stop}] with {steps} steps is not strictly increasing")

    cols = {p: np.full(grid.shape, v, dtype=float) for p, v in base.parameters().items()}
    cols[parameter] = grid
    labels = violation_labels(cols["a"], cols["b"], cols["c"], cols["y1"])
    ok = labels == ""

    f = closed_forms(*(cols[p][ok] for p in PARAMETERS), mode)
    points = pd.DataFrame({
        "value": grid[ok],
        "tau1": f.tau1, "tau2": f.tau2,
        "alpha1": f.alpha1, "alpha2": f.alpha2,
        "x_social1": f.x_social1, "x_social2": f.x_social2,
    }, columns=SERIES_COLUMNS)
    skipped = pd.DataFrame({"value": grid[~ok], "violation": labels[~ok].astype(object)},
                           columns=["value", "violation"])

    logger.info("[sweep] {} over {} point(s): {} evaluated, {} skipped",
                parameter, len(grid), len(points), len(skipped))
    return SweepSeries(base, parameter, mode, grid, points, skipped)


# ---------- sensitivity ----------

@dataclass(frozen=True)
class SensitivityResult:
    target: str
    parameter: str
    closed_form: float
    finite_difference: float
    relative_gap: float
    h: float


def paper_partials(a: float, b: float, c: float, y1: float) -> dict:
    """Analytic partials of the reference formulas, keyed (target, parameter)."""
    gap = b - a
    t1 = gap * y1 / (a + b)
    t2 = gap * y1 / (a + c)
    d_tau1 = {"a": -2 * b * y1 / (a + b) ** 2, "b": 2 * a * y1 / (a + b) ** 2,
              "c": 0.0, "y1": gap / (a + b)}
    d_tau2 = {"a": -(b + c) * y1 / (a + c) ** 2, "b": y1 / (a + c),
              "c": -gap * y1 / (a + c) ** 2, "y1": gap / (a + c)}

    # alpha1 = tau1^2 / 4a, alpha2 = tau2^2 / 2(b + c)
    d_alpha1 = {p: t1 * d_tau1[p] / (2 * a) for p in PARAMETERS}
    d_alpha1["a"] -= t1 ** 2 / (4 * a ** 2)
    d_alpha2 = {p: t2 * d_tau2[p] / (b + c) for p in PARAMETERS}
    for p in ("b", "c"):
        d_alpha2[p] -= t2 ** 2 / (2 * (b + c) ** 2)

    out = {}
    for target, partials in (("tau1", d_tau1), ("tau2", d_tau2),
                             ("alpha1", d_alpha1), ("alpha2", d_alpha2)):
        for p in PARAMETERS:
            out[(target, p)] = partials[p]
    return out


def default_step(value: float) -> float:
    return 1e-6 * max(1.0, abs(value))


def sensitivity(scenario: ExternalityScenario, target: str, parameter: str,
                mode=Mode.PAPER, h: Optional[float] = None) -> SensitivityResult:
    _check_name(target, TARGETS)
    _check_name(parameter, PARAMETERS)
    if Mode(mode) is not Mode.PAPER:
        raise ValueError("sensitivities are defined on the paper-mode closed forms")

    value = scenario.parameters()[parameter]
    h = default_step(value) if h is None else h
    if not (math.isfinite(h) and h > 0):
        raise ValueError(f"h must be positive, got {h!r}")

    try:
        plus = scenario.replace(**{parameter: value + h})
        minus = scenario.replace(**{parameter: value - h})
    except ConstraintViolation as e:
        raise PerturbationInvalid(
            f"{parameter} +/- {h} leaves the valid region ({e.predicate}); shrink h") from e

    f_plus = getattr(paper_closed_forms(plus.a, plus.b, plus.c, plus.y1), target)
    f_minus = getattr(paper_closed_forms(minus.a, minus.b, minus.c, minus.y1), target)
    fd = (f_plus - f_minus) / (2 * h)
    cf = paper_partials(scenario.a, scenario.b, scenario.c, scenario.y1)[(target, parameter)]
    return SensitivityResult(
        target=target,
        parameter=parameter,
        closed_form=cf,
        finite_difference=fd,
        relative_gap=abs(cf - fd) / max(1.0, abs(cf)),
        h=h,
    )


def sensitivity_matrix(scenario: ExternalityScenario, h: Optional[float] = None) -> pd.DataFrame:
    """All target x parameter pairs, one row each."""
    rows = [asdict(sensitivity(scenario, t, p, Mode.PAPER, h))
            for t in TARGETS for p in PARAMETERS]
    return pd.DataFrame(rows, columns=["target", "parameter", "closed_form",
                                       "finite_difference", "relative_gap", "h"])
