#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
scenario_io.py
Scenario file format (strict JSON schema), results/solution documents,
points CSV, sweep/summary CSV, and the two-panel SVG of the marginal curves.

Every emitter is a pure text generator: same input, same bytes. Computed
numbers are rounded to SIG_DIGITS significant digits; the scenario echo keeps
shortest round-trip floats so it reloads to an equal scenario.
"""

from __future__ import annotations
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Annotated, Dict, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from cooperation import ComparisonReport, RecommendationReport, RegimeOutcome, slope_from_efficiency
from model_core import (
    ExternalityError, ExternalityScenario, Industry, Mode, Regime, ScenarioMeta,
    curves, equilibria, validate, welfare,
)
from sweep import SERIES_COLUMNS, SweepSeries

SIG_DIGITS = 12
FLOAT_FORMAT = f"%.{SIG_DIGITS}g"

CANVAS_WIDTH = 800
CANVAS_HEIGHT = 400
MARGIN = 0.10


class ParseError(ExternalityError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class SchemaError(ExternalityError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class CalibrationConflict(ExternalityError):
    pass


# ---------- scenario file schema ----------

FiniteNumber = Annotated[float, Field(allow_inf_nan=False)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class UnitsBlock(_Strict):
    activity: str = Field(min_length=1)
    currency: str = Field(min_length=1)


class ParametersBlock(_Strict):
    a: FiniteNumber
    b: FiniteNumber
    c: Optional[FiniteNumber] = None
    y1: FiniteNumber


class CalibrationBlock(_Strict):
    energy_before: FiniteNumber
    energy_after: FiniteNumber


class ScenarioFile(_Strict):
    name: str = Field(min_length=1)
    industry: Literal["pollution", "agriculture", "energy", "custom"]
    units: UnitsBlock
    parameters: ParametersBlock
    calibration: Optional[CalibrationBlock] = None
    notes: str = ""


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise SchemaError(key, "duplicate key")
        out[key] = value
    return out


def _parse(document: str) -> dict:
    try:
        data = json.loads(document, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from e
    if not isinstance(data, dict):
        raise SchemaError("<root>", "document must be an object")
    return data


def load_scenario(document: str) -> ExternalityScenario:
    """
    Parse, resolve calibration (when present) into c, then validate.
    Raises ParseError, SchemaError, CalibrationConflict, NoImprovement or
    ConstraintViolation.
    """
    data = _parse(document)
    try:
        parsed = ScenarioFile.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise SchemaError(field, first["msg"]) from e

    p = parsed.parameters
    if parsed.calibration is not None:
        if p.c is not None:
            raise CalibrationConflict("parameters.c and calibration are mutually exclusive")
        c = slope_from_efficiency(p.a, parsed.calibration.energy_before,
                                  parsed.calibration.energy_after)
        logger.debug("[io] calibrated c={:.12g} from {} -> {}", c,
                     parsed.calibration.energy_before, parsed.calibration.energy_after)
    elif p.c is None:
        raise SchemaError("parameters.c", "required unless a calibration block is given")
    else:
        c = p.c

    meta = ScenarioMeta(
        name=parsed.name,
        industry=Industry(parsed.industry),
        activity_unit=parsed.units.activity,
        currency_unit=parsed.units.currency,
        notes=parsed.notes,
    )
    scenario = validate(p.a, p.b, c, p.y1, meta)
    logger.debug("[io] loaded scenario {!r}", scenario.meta.name)
    return scenario


def scenario_echo(scenario: ExternalityScenario) -> dict:
    """Scenario in file-schema form; calibration is already folded into c."""
    meta = scenario.meta
    return {
        "name": meta.name,
        "industry": meta.industry.value,
        "units": {"activity": meta.activity_unit, "currency": meta.currency_unit},
        "parameters": scenario.parameters(),
        "notes": meta.notes,
    }


# ---------- results documents ----------

def _num(value: float) -> float:
    return float(f"{value:.{SIG_DIGITS}g}")


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _regime_block(outcome: RegimeOutcome) -> dict:
    eq, w = outcome.equilibria, outcome.welfare
    return {
        "x_private": _num(eq.x_private),
        "x_social": _num(eq.x_social),
        "tau": _num(w.tau),
        "alpha": _num(w.alpha),
        "evaluation_x": _num(w.evaluation_x),
    }


def write_recommendation(rec: RecommendationReport) -> dict:
    return {
        "industry": rec.industry.value,
        "externality": rec.externality,
        "cooperative_slope": _num(rec.cooperative_slope),
        "residual_tax": _num(rec.residual_tax),
        "avoided_dwl": _num(rec.avoided_dwl),
        "actions": list(rec.actions),
        "narrative": rec.narrative,
    }


def write_results(report: ComparisonReport,
                  recommendation: Optional[RecommendationReport] = None) -> str:
    """
    Key order: scenario, mode, regimes{noncooperative, cooperative}, deltas,
    verdicts[, recommendation].
    """
    doc = {
        "scenario": scenario_echo(report.scenario),
        "mode": report.mode.value,
        "regimes": {
            Regime.NONCOOPERATIVE.value: _regime_block(report.noncoop),
            Regime.COOPERATIVE.value: _regime_block(report.coop),
        },
        "deltas": {
            "tau": _num(report.delta_tau),
            "alpha": _num(report.delta_alpha),
            "x_social": _num(report.delta_x_social),
        },
        "verdicts": {
            "tau_reduced": report.verdicts.tau_reduced,
            "alpha_reduced": report.verdicts.alpha_reduced,
            "equilibrium_lowered": report.verdicts.equilibrium_lowered,
        },
    }
    if recommendation is not None:
        doc["recommendation"] = write_recommendation(recommendation)
    return _dump(doc)


def write_solution(scenario: ExternalityScenario, mode, regimes) -> str:
    """Equilibria and welfare for the requested regimes, in the order given."""
    mode = Mode(mode)
    blocks = {}
    for regime in regimes:
        regime = Regime(regime)
        eq = equilibria(scenario, regime)
        block = _regime_block(RegimeOutcome(eq, welfare(scenario, regime, mode)))
        block["y_private"] = _num(eq.y_private)
        block["y_social"] = _num(eq.y_social)
        blocks[regime.value] = block
    return _dump({"scenario": scenario_echo(scenario), "mode": mode.value, "regimes": blocks})


# ---------- CSV ----------

POINT_COLUMNS = ["x", "MPC", "MSC", "MSB_noncoop", "MSB_coop"]


def emit_points(report: ComparisonReport, samples: int) -> str:
    """Curve values on a uniform grid over [0, 1.1 * non-cooperative x_private]."""
    if isinstance(samples, bool) or not isinstance(samples, (int, np.integer)) or samples < 2:
        raise ValueError(f"samples must be an integer >= 2, got {samples!r}")
    s = report.scenario
    mpc, msc, msb_non = curves(s, Regime.NONCOOPERATIVE)
    _, _, msb_co = curves(s, Regime.COOPERATIVE)
    xs = np.linspace(0.0, 1.1 * report.noncoop.equilibria.x_private, int(samples))
    frame = pd.DataFrame({
        "x": xs,
        "MPC": mpc.value(xs),
        "MSC": msc.value(xs),
        "MSB_noncoop": msb_non.value(xs),
        "MSB_coop": msb_co.value(xs),
    }, columns=POINT_COLUMNS)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


SWEEP_CSV_COLUMNS = ["value", "status", "violation", *SERIES_COLUMNS[1:]]


def write_sweep(series: SweepSeries) -> str:
    """Evaluated and skipped points together, in grid order."""
    parts = []
    if len(series.points):
        parts.append(series.points.assign(status="evaluated", violation=""))
    if len(series.skipped):
        parts.append(series.skipped.assign(status="skipped"))
    frame = pd.concat(parts, ignore_index=True).sort_values("value", kind="mergesort")
    frame = frame.reindex(columns=SWEEP_CSV_COLUMNS)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_table(frame: pd.DataFrame) -> str:
    return frame.to_csv(float_format=FLOAT_FORMAT, lineterminator="\n")


# ---------- plot ----------

Point = Tuple[float, float]


@dataclass(frozen=True)
class PanelSpec:
    regime: Regime
    title: str
    polylines: Dict[str, Tuple[Point, ...]]
    point_label: str
    point: Point
    triangle: Tuple[Point, Point, Point]


@dataclass(frozen=True)
class PlotSpec:
    x_label: str
    y_label: str
    x_max: float
    y_max: float
    panels: Tuple[PanelSpec, PanelSpec]
    width: int = CANVAS_WIDTH
    height: int = CANVAS_HEIGHT


def _clipped_polyline(curve, x_max: float, y_max: float) -> Tuple[Point, ...]:
    # stop where the line leaves [0, y_max]
    if curve.slope > 0:
        x_end = min(x_max, (y_max - curve.intercept) / curve.slope)
    elif curve.slope < 0:
        x_end = min(x_max, -curve.intercept / curve.slope)
    else:
        x_end = x_max
    return ((0.0, curve.value(0.0)), (x_end, curve.value(x_end)))


def plot_spec(report: ComparisonReport) -> PlotSpec:
    s = report.scenario
    x_max = 1.1 * report.noncoop.equilibria.x_private
    y_max = 1.1 * s.y1
    panels = []
    for regime, outcome, title, label in (
        (Regime.NONCOOPERATIVE, report.noncoop, "Non-cooperative", "O1"),
        (Regime.COOPERATIVE, report.coop, "Cooperative", "O2"),
    ):
        mpc, msc, msb = curves(s, regime)
        eq = outcome.equilibria
        social = (eq.x_social, eq.y_social)
        private = (eq.x_private, eq.y_private)
        panels.append(PanelSpec(
            regime=regime,
            title=title,
            polylines={c.label.value: _clipped_polyline(c, x_max, y_max) for c in (mpc, msc, msb)},
            point_label=label,
            point=social,
            triangle=(social, private, (eq.x_private, msc.value(eq.x_private))),
        ))
    return PlotSpec(
        x_label=s.meta.activity_unit,
        y_label=f"{s.meta.currency_unit}/{s.meta.activity_unit}",
        x_max=x_max,
        y_max=y_max,
        panels=(panels[0], panels[1]),
    )


_STROKES = {"MPC": "#1f77b4", "MSC": "#d62728", "MSB_noncoop": "#2ca02c", "MSB_coop": "#2ca02c"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _model(v: float) -> str:
    return f"{v:.{SIG_DIGITS}g}"


def emit_plot(report: ComparisonReport) -> str:
    """Two panels (non-cooperative left, cooperative right) as an SVG document."""
    spec = plot_spec(report)
    panel_w = spec.width / 2
    mx, my = MARGIN * panel_w, MARGIN * spec.height
    inner_w, inner_h = panel_w - 2 * mx, spec.height - 2 * my

    root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                      width=str(spec.width), height=str(spec.height),
                      viewBox=f"0 0 {spec.width} {spec.height}")

    for i, panel in enumerate(spec.panels):
        ox = i * panel_w

        def sx(x: float) -> float:
            return ox + mx + x / spec.x_max * inner_w

        def sy(y: float) -> float:
            return spec.height - my - y / spec.y_max * inner_h

        def pts(points) -> str:
            return " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in points)

        g = ET.SubElement(root, "g", id=panel.regime.value)
        ET.SubElement(g, "text", x=_fmt(ox + panel_w / 2), y=_fmt(my / 2),
                      **{"text-anchor": "middle"}).text = panel.title

        # axes
        ET.SubElement(g, "line", x1=_fmt(sx(0)), y1=_fmt(sy(0)), x2=_fmt(sx(spec.x_max)),
                      y2=_fmt(sy(0)), stroke="#000000")
        ET.SubElement(g, "line", x1=_fmt(sx(0)), y1=_fmt(sy(0)), x2=_fmt(sx(0)),
                      y2=_fmt(sy(spec.y_max)), stroke="#000000")
        ET.SubElement(g, "text", x=_fmt(sx(spec.x_max)), y=_fmt(sy(0) + my / 2),
                      **{"text-anchor": "end"}).text = spec.x_label
        ET.SubElement(g, "text", x=_fmt(sx(0)), y=_fmt(sy(spec.y_max) - my / 4),
                      **{"text-anchor": "start"}).text = spec.y_label

        ET.SubElement(g, "polygon", points=pts(panel.triangle),
                      fill="#ff7f0e", **{"fill-opacity": "0.35", "stroke": "none",
                                         "data-role": "deadweight",
                                         "data-model": " ".join(f"{_model(x)},{_model(y)}"
                                                                for x, y in panel.triangle)})
        for name, line in panel.polylines.items():
            ET.SubElement(g, "polyline", points=pts(line), fill="none",
                          stroke=_STROKES[name], **{"stroke-width": "2", "data-curve": name})

        px, py = panel.point
        ET.SubElement(g, "circle", cx=_fmt(sx(px)), cy=_fmt(sy(py)), r="4", fill="#000000",
                      **{"data-label": panel.point_label, "data-x": _model(px), "data-y": _model(py)})
        ET.SubElement(g, "text", x=_fmt(sx(px) + 6), y=_fmt(sy(py) - 6)).text = panel.point_label

    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"
