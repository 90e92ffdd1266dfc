from pathlib import Path

import numpy as np
import pytest

from model_core import Industry, ScenarioMeta, validate
from sweep import ParameterRegion, sample

ROOT = Path(__file__).resolve().parent.parent
PRESETS = ROOT / "presets"

# b - a >= 0.5 and c - b >= 0.5 everywhere, so +/- 1e-6 perturbations stay valid
WIDE_REGION = ParameterRegion(a=(0.5, 1.5), b=(2.0, 3.0), c=(3.5, 5.0), y1=(1.0, 100.0))

WORKED_META = ScenarioMeta(name="worked", industry=Industry.POLLUTION,
                           activity_unit="tonnes PM2.5", currency_unit="USD")


def random_scenarios(n: int, seed: int):
    """Valid scenarios built by construction (no rejection)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a = rng.uniform(0.5, 2.0)
        b = a + rng.uniform(0.5, 3.0)
        c = b + rng.uniform(0.5, 3.0)
        y1 = rng.uniform(1.0, 100.0)
        out.append(validate(a, b, c, y1))
    return out


@pytest.fixture
def worked():
    return validate(1, 2, 3, 12, WORKED_META)


@pytest.fixture
def second():
    return validate(1, 3, 5, 8)


@pytest.fixture
def presets_dir():
    return PRESETS


@pytest.fixture(scope="session")
def scenarios_10k():
    return sample(WIDE_REGION, 10_000, seed=2024)


def near_equal_cost_scenarios(n: int, seed: int):
    """Valid scenarios with b within a relative 1e-9 .. 1e-2 of a."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a = rng.uniform(0.5, 2.0)
        b = a * (1 + 10 ** rng.uniform(-9, -2))
        c = b + rng.uniform(0.5, 3.0)
        y1 = rng.uniform(1.0, 100.0)
        out.append(validate(a, b, c, y1))
    return out
