#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
cooperation.py
Cooperative vs non-cooperative comparison: calibration of the cooperative
MSB slope, paired analyses with inequality verdicts, the action-plan
recommendation, and distributional statistics of the gains.
"""

from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import pandas as pd
from loguru import logger

from model_core import (
    PARAMETERS, EquilibriumSet, ExternalityError, ExternalityScenario, Industry,
    Mode, Regime, WelfareResult, closed_forms, equilibria, welfare,
)


class NoImprovement(ExternalityError):
    pass


class VerdictFailure(ExternalityError):
    pass


def slope_from_efficiency(a: float, energy_before: float, energy_after: float) -> float:
    """
    Candidate cooperative slope c = a * before / after: the MSB falls faster by
    the per-unit efficiency factor (6500 -> 4200 Btu gives c ~ 1.5476 a).
    """
    values = (a, energy_before, energy_after)
    if not all(math.isfinite(v) and v > 0 for v in values):
        raise NoImprovement(f"a and energy values must be finite and positive, got {values}")
    if energy_after >= energy_before:
        raise NoImprovement(
            f"energy_after ({energy_after}) must be below energy_before ({energy_before})")
    return a * (energy_before / energy_after)


# ---------- comparison ----------

@dataclass(frozen=True)
class RegimeOutcome:
    equilibria: EquilibriumSet
    welfare: WelfareResult


@dataclass(frozen=True)
class InequalityVerdicts:
    tau_reduced: bool
    alpha_reduced: bool
    equilibrium_lowered: bool

    @property
    def all_hold(self) -> bool:
        return self.tau_reduced and self.alpha_reduced and self.equilibrium_lowered


@dataclass(frozen=True)
class ComparisonReport:
    scenario: ExternalityScenario
    mode: Mode
    noncoop: RegimeOutcome
    coop: RegimeOutcome
    delta_tau: float
    delta_alpha: float
    delta_x_social: float
    verdicts: InequalityVerdicts


def _outcome(scenario: ExternalityScenario, regime: Regime, mode: Mode) -> RegimeOutcome:
    return RegimeOutcome(equilibria(scenario, regime), welfare(scenario, regime, mode))


def compare(scenario: ExternalityScenario, mode=Mode.PAPER) -> ComparisonReport:
    mode = Mode(mode)
    non = _outcome(scenario, Regime.NONCOOPERATIVE, mode)
    co = _outcome(scenario, Regime.COOPERATIVE, mode)
    verdicts = InequalityVerdicts(
        tau_reduced=non.welfare.tau > co.welfare.tau,
        alpha_reduced=non.welfare.alpha > co.welfare.alpha,
        equilibrium_lowered=co.equilibria.x_social < non.equilibria.x_social,
    )
    if not verdicts.all_hold:
        logger.warning("[coop] verdict failed for {}: {}", scenario.meta.name, verdicts)
    return ComparisonReport(
        scenario=scenario,
        mode=mode,
        noncoop=non,
        coop=co,
        delta_tau=non.welfare.tau - co.welfare.tau,
        delta_alpha=non.welfare.alpha - co.welfare.alpha,
        delta_x_social=non.equilibria.x_social - co.equilibria.x_social,
        verdicts=verdicts,
    )


def compare_regimes(scenario: ExternalityScenario) -> dict:
    """Both modes side by side, keyed by mode value."""
    return {m.value: compare(scenario, m) for m in Mode}


# ---------- recommendation ----------

_EXTERNALITY = {
    Industry.POLLUTION:   "fine particulate (PM2.5) and CO2 emissions",
    Industry.AGRICULTURE: "nitrate water contamination and lost natural aesthetics",
    Industry.ENERGY:      "emissions from unclean sources (coal, oil, natural gas)",
    Industry.CUSTOM:      "an unpriced external cost",
}

_PARTNERSHIP = {
    Industry.POLLUTION:
        "partner with an emission-reducing technology provider "
        "(hybrid transport, air purification, regulatory controls)",
    Industry.AGRICULTURE:
        "partner with a water-purification technology business so less "
        "contaminated water leaves production",
    Industry.ENERGY:
        "substitute clean sources (hydro, biofuels) through a supply partnership",
    Industry.CUSTOM:
        "form a technology partnership that lowers the benefit of each extra unit",
}


@dataclass(frozen=True)
class RecommendationReport:
    scenario_name: str
    industry: Industry
    externality: str
    cooperative_slope: float
    residual_tax: float
    avoided_dwl: float
    actions: Tuple[str, str, str]
    narrative: str


def recommend(report: ComparisonReport) -> RecommendationReport:
    if not report.verdicts.all_hold:
        raise VerdictFailure(f"comparison verdicts do not all hold: {report.verdicts}")

    s = report.scenario
    meta = s.meta
    industry = meta.industry
    unit = f"{meta.currency_unit}/{meta.activity_unit}"
    residual = report.coop.welfare.tau
    avoided = report.delta_alpha

    actions = (
        f"Identify: the {industry.value} market carries {_EXTERNALITY[industry]}.",
        f"Cooperate: {_PARTNERSHIP[industry]}, steepening the MSB slope "
        f"from {s.a:.12g} to {s.c:.12g}.",
        f"Correct: levy the residual Pigouvian tax of {residual:.12g} {unit}.",
    )
    narrative = "\n".join([
        f"Plan of action for {meta.name} ({report.mode.value} mode)",
        *(f"{i}. {step}" for i, step in enumerate(actions, start=1)),
        f"Outcome: cooperation avoids {avoided:.12g} {meta.currency_unit} of deadweight loss "
        f"and lowers the social optimum by {report.delta_x_social:.12g} {meta.activity_unit}.",
    ])
    return RecommendationReport(
        scenario_name=meta.name,
        industry=industry,
        externality=_EXTERNALITY[industry],
        cooperative_slope=s.c,
        residual_tax=residual,
        avoided_dwl=avoided,
        actions=actions,
        narrative=narrative,
    )


# ---------- distribution of gains ----------

GAIN_COLUMNS = ["delta_tau", "delta_alpha", "delta_x_social", "tau_reduction", "alpha_reduction"]


def cooperation_gains(scenarios: Iterable[ExternalityScenario], mode=Mode.PAPER) -> pd.DataFrame:
    """Per-scenario cooperation gains, one row per scenario in input order."""
    params = pd.DataFrame([s.parameters() for s in scenarios], columns=list(PARAMETERS), dtype=float)
    f = closed_forms(params["a"].to_numpy(), params["b"].to_numpy(),
                     params["c"].to_numpy(), params["y1"].to_numpy(), mode)
    return pd.DataFrame({
        "delta_tau": f.tau1 - f.tau2,
        "delta_alpha": f.alpha1 - f.alpha2,
        "delta_x_social": f.x_social1 - f.x_social2,
        "tau_reduction": (f.tau1 - f.tau2) / f.tau1,
        "alpha_reduction": (f.alpha1 - f.alpha2) / f.alpha1,
    }, columns=GAIN_COLUMNS)


def summarize_gains(gains: pd.DataFrame) -> pd.DataFrame:
    """count/mean/std/min/5%/50%/95%/max per gain column."""
    return gains.describe(percentiles=[0.05, 0.5, 0.95])
