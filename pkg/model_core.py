#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
model_core.py
Linear marginal-curve externality market: curve and scenario types,
intersection geometry, equilibria, and welfare in two modes.

  MPC       = a x
  MSC       = b x
  MSB (non) = -a x + y1
  MSB (co)  = -c x + y1        with c > b > a > 0 and b + c > 2a

Paper mode reproduces the reference tax/deadweight table verbatim; standard
mode applies textbook definitions (gap at the social optimum, triangle
between the two equilibria) and is cross-checked by trapezoid quadrature.
"""

from __future__ import annotations
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

PARALLEL_TOL = 1e-12

# predicate labels, in the order validate() checks them
NON_FINITE     = "non-finite parameter"
A_NOT_POSITIVE = "a <= 0"
B_NOT_ABOVE_A  = "b <= a"
C_NOT_ABOVE_B  = "c <= b"
Y1_NOT_POSITIVE = "y1 <= 0"
SUM_TOO_SMALL  = "b + c <= 2a"
DEGENERATE_EQUILIBRIA = "equilibria not representable (0 < x_social < x_private)"
PREDICATES = (NON_FINITE, A_NOT_POSITIVE, B_NOT_ABOVE_A, C_NOT_ABOVE_B,
              Y1_NOT_POSITIVE, SUM_TOO_SMALL, DEGENERATE_EQUILIBRIA)

PARAMETERS = ("a", "b", "c", "y1")


# ---------- errors ----------

class ExternalityError(Exception):
    """Base class for every domain error raised by this project."""


class ParallelCurves(ExternalityError):
    pass


class InvalidMeta(ExternalityError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"meta.{field}: {message}")


class ConstraintViolation(ExternalityError):
    """A scenario parameter set failed one of the ordering predicates."""

    def __init__(self, predicate: str, values: dict):
        self.predicate = predicate
        self.values = dict(values)
        shown = ", ".join(f"{k}={v!r}" for k, v in self.values.items())
        super().__init__(f"constraint violated: {predicate} ({shown})")

    def __reduce__(self):
        return (type(self), (self.predicate, self.values))


# ---------- enums ----------

class Regime(str, Enum):
    NONCOOPERATIVE = "noncooperative"
    COOPERATIVE = "cooperative"


class Mode(str, Enum):
    PAPER = "paper"
    STANDARD = "standard"


class Industry(str, Enum):
    POLLUTION = "pollution"
    AGRICULTURE = "agriculture"
    ENERGY = "energy"
    CUSTOM = "custom"


class CurveLabel(str, Enum):
    MPC = "MPC"
    MSC = "MSC"
    MSB_NONCOOP = "MSB_noncoop"
    MSB_COOP = "MSB_coop"


# ---------- curves ----------

@dataclass(frozen=True)
class AffineCurve:
    slope: float
    intercept: float
    label: Optional[CurveLabel] = None

    def value(self, x):
        """slope * x + intercept; x may be a float or a numpy array."""
        return self.slope * x + self.intercept

    def minus(self, other: "AffineCurve") -> "AffineCurve":
        return AffineCurve(self.slope - other.slope, self.intercept - other.intercept)


def intersect(first: AffineCurve, second: AffineCurve) -> Tuple[float, float]:
    """
    Crossing point of two lines. x may be negative; callers check the domain.
    Raises ParallelCurves when the slopes agree within PARALLEL_TOL.
    """
    ds = first.slope - second.slope
    if abs(ds) <= PARALLEL_TOL:
        raise ParallelCurves(f"slopes {first.slope!r} and {second.slope!r} are parallel")
    x = (second.intercept - first.intercept) / ds
    return x, first.value(x)


# ---------- scenario ----------

class ScenarioMeta(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    industry: Industry = Industry.CUSTOM
    activity_unit: str = Field(min_length=1)
    currency_unit: str = Field(min_length=1)
    notes: str = ""


DEFAULT_META = ScenarioMeta(name="unnamed scenario", industry=Industry.CUSTOM,
                            activity_unit="units", currency_unit="$")


class ExternalityScenario(BaseModel):
    """Validated (a, b, c, y1). Build through validate(), never directly."""
    model_config = ConfigDict(frozen=True)

    a: float
    b: float
    c: float
    y1: float
    meta: ScenarioMeta = DEFAULT_META

    def parameters(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "y1": self.y1}

    def replace(self, **params) -> "ExternalityScenario":
        """Copy with some parameters changed, re-validated."""
        unknown = set(params) - set(PARAMETERS)
        if unknown:
            raise KeyError(f"unknown parameter(s): {sorted(unknown)}")
        return validate(**{**self.parameters(), **params}, meta=self.meta)


def _representable(a, b, c, y1):
    # same slope gaps and quotients as intersect() inside equilibria();
    # works elementwise on numpy arrays
    return ((2 * a > PARALLEL_TOL) & np.isfinite(y1 / (2 * a))
            & (0 < y1 / (a + b)) & (y1 / (a + b) < y1 / (2 * a))
            & (0 < y1 / (b + c)) & (y1 / (b + c) < y1 / (a + c)))


def find_violation(a, b, c, y1) -> Optional[ConstraintViolation]:
    """The first failed predicate as an error object, or None when valid."""
    values = {"a": a, "b": b, "c": c, "y1": y1}
    try:
        a, b, c, y1 = (float(v) for v in (a, b, c, y1))
    except (TypeError, ValueError):
        return ConstraintViolation(NON_FINITE, values)
    if not all(math.isfinite(v) for v in (a, b, c, y1)):
        return ConstraintViolation(NON_FINITE, values)
    if a <= 0:
        return ConstraintViolation(A_NOT_POSITIVE, values)
    if b <= a:
        return ConstraintViolation(B_NOT_ABOVE_A, values)
    if c <= b:
        return ConstraintViolation(C_NOT_ABOVE_B, values)
    if y1 <= 0:
        return ConstraintViolation(Y1_NOT_POSITIVE, values)
    # implied by c > b > a > 0, still checked on its own
    if b + c <= 2 * a:
        return ConstraintViolation(SUM_TOO_SMALL, values)
    if not _representable(a, b, c, y1):
        return ConstraintViolation(DEGENERATE_EQUILIBRIA, values)
    return None


def violation_labels(a, b, c, y1) -> np.ndarray:
    """Vectorized find_violation: predicate label per element, '' when valid."""
    a, b, c, y1 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, y1)))
    finite = np.isfinite(a) & np.isfinite(b) & np.isfinite(c) & np.isfinite(y1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        conditions = [~finite, a <= 0, b <= a, c <= b, y1 <= 0, b + c <= 2 * a,
                      ~_representable(a, b, c, y1)]
    return np.select(conditions, list(PREDICATES), default="")


def _coerce_meta(meta) -> ScenarioMeta:
    if meta is None:
        return DEFAULT_META
    if isinstance(meta, ScenarioMeta):
        return meta
    try:
        return ScenarioMeta.model_validate(meta)
    except ValidationError as e:
        first = e.errors()[0]
        raise InvalidMeta(".".join(str(p) for p in first["loc"]) or "<root>", first["msg"]) from e


def validate(a, b, c, y1, meta=None) -> ExternalityScenario:
    """meta may be a ScenarioMeta or a mapping of its fields."""
    violation = find_violation(a, b, c, y1)
    if violation is not None:
        raise violation
    meta = _coerce_meta(meta)
    return ExternalityScenario(a=float(a), b=float(b), c=float(c), y1=float(y1),
                               meta=meta)


# ---------- equilibria ----------

@dataclass(frozen=True)
class EquilibriumSet:
    regime: Regime
    x_private: float
    x_social: float
    y_private: float
    y_social: float


def curves(scenario: ExternalityScenario, regime) -> Tuple[AffineCurve, AffineCurve, AffineCurve]:
    """(MPC, MSC, MSB) for the regime. MPB coincides with MSB, so there is no MPB curve."""
    regime = Regime(regime)
    mpc = AffineCurve(scenario.a, 0.0, CurveLabel.MPC)
    msc = AffineCurve(scenario.b, 0.0, CurveLabel.MSC)
    if regime is Regime.NONCOOPERATIVE:
        msb = AffineCurve(-scenario.a, scenario.y1, CurveLabel.MSB_NONCOOP)
    else:
        # c is a slope magnitude: the cooperative MSB declines faster
        msb = AffineCurve(-scenario.c, scenario.y1, CurveLabel.MSB_COOP)
    return mpc, msc, msb


def equilibria(scenario: ExternalityScenario, regime) -> EquilibriumSet:
    regime = Regime(regime)
    mpc, msc, msb = curves(scenario, regime)
    x_private, y_private = intersect(mpc, msb)
    x_social, y_social = intersect(msc, msb)
    if not 0 < x_social < x_private:
        raise ConstraintViolation("0 < x_social < x_private",
                                  {"x_social": x_social, "x_private": x_private})
    return EquilibriumSet(regime, x_private, x_social, y_private, y_social)


# ---------- welfare ----------

class ClosedForms(NamedTuple):
    tau1: object
    tau2: object
    alpha1: object
    alpha2: object
    x_social1: object
    x_social2: object
    x_private1: object
    x_private2: object


def paper_closed_forms(a, b, c, y1) -> ClosedForms:
    """Reference-table formulas; scalars or numpy arrays."""
    gap = b - a
    tau1 = gap * y1 / (a + b)
    tau2 = gap * y1 / (a + c)
    return ClosedForms(
        tau1=tau1,
        tau2=tau2,
        alpha1=(1 / (4 * a)) * tau1 ** 2,
        alpha2=(1 / (2 * (b + c))) * tau2 ** 2,
        x_social1=y1 / (a + b),
        x_social2=y1 / (b + c),
        x_private1=y1 / (2 * a),
        x_private2=y1 / (a + c),
    )


def standard_closed_forms(a, b, c, y1) -> ClosedForms:
    """Textbook tax and triangle, solved symbolically; scalars or numpy arrays."""
    gap = b - a
    return ClosedForms(
        tau1=gap * y1 / (a + b),
        tau2=gap * y1 / (b + c),
        alpha1=gap ** 2 * y1 ** 2 / (8 * a ** 2 * (a + b)),
        alpha2=gap ** 2 * y1 ** 2 / (2 * (b + c) * (a + c) ** 2),
        x_social1=y1 / (a + b),
        x_social2=y1 / (b + c),
        x_private1=y1 / (2 * a),
        x_private2=y1 / (a + c),
    )


def closed_forms(a, b, c, y1, mode) -> ClosedForms:
    if Mode(mode) is Mode.PAPER:
        return paper_closed_forms(a, b, c, y1)
    return standard_closed_forms(a, b, c, y1)


@dataclass(frozen=True)
class WelfareResult:
    regime: Regime
    mode: Mode
    tau: float
    alpha: float
    evaluation_x: float


def welfare_paper(scenario: ExternalityScenario, regime) -> WelfareResult:
    """
    Table values verbatim. The two rows take the tax at different points:
    non-cooperative at MSC x MSB (y1/(a+b)), cooperative at MPC x MSB (y1/(a+c)).
    evaluation_x records which.
    """
    regime = Regime(regime)
    s = scenario
    forms = paper_closed_forms(s.a, s.b, s.c, s.y1)
    if regime is Regime.NONCOOPERATIVE:
        return WelfareResult(regime, Mode.PAPER, forms.tau1, forms.alpha1, s.y1 / (s.a + s.b))
    return WelfareResult(regime, Mode.PAPER, forms.tau2, forms.alpha2, s.y1 / (s.a + s.c))


def _triangle_base(scenario: ExternalityScenario, regime: Regime) -> float:
    """x_private - x_social with (b - a) factored out, so nothing cancels as b -> a."""
    s = scenario
    gap = s.b - s.a
    if regime is Regime.NONCOOPERATIVE:
        return s.y1 * gap / (2 * s.a * (s.a + s.b))
    return s.y1 * gap / ((s.a + s.c) * (s.b + s.c))


def welfare_standard(scenario: ExternalityScenario, regime) -> WelfareResult:
    regime = Regime(regime)
    eq = equilibria(scenario, regime)
    mpc, msc, _ = curves(scenario, regime)
    gap = msc.minus(mpc)
    tau = gap.value(eq.x_social)
    # MPC == MSB at x_private, so MSC - MSB there is the MSC - MPC gap
    height = gap.value(eq.x_private)
    alpha = 0.5 * _triangle_base(scenario, regime) * height
    return WelfareResult(regime, Mode.STANDARD, tau, alpha, eq.x_social)


def welfare(scenario: ExternalityScenario, regime, mode) -> WelfareResult:
    if Mode(mode) is Mode.PAPER:
        return welfare_paper(scenario, regime)
    return welfare_standard(scenario, regime)


def dwl_quadrature(scenario: ExternalityScenario, regime, panels: int) -> float:
    """Composite trapezoid of (MSC - MSB) from x_social to x_private."""
    if isinstance(panels, bool) or not isinstance(panels, (int, np.integer)) or panels < 1:
        raise ValueError(f"panels must be a positive integer, got {panels!r}")
    eq = equilibria(scenario, regime)
    _, msc, msb = curves(scenario, regime)
    integrand = msc.minus(msb)
    xs = np.linspace(eq.x_social, eq.x_private, int(panels) + 1)
    fx = integrand.value(xs)
    h = (eq.x_private - eq.x_social) / panels
    area = float(h * (fx.sum() - 0.5 * (fx[0] + fx[-1])))
    logger.debug("[model] quadrature {} panels={} area={:.12g}", Regime(regime).value, panels, area)
    return area
