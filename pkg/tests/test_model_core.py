import pickle

import numpy as np
import pytest
from pydantic import ValidationError

from model_core import (
    A_NOT_POSITIVE, B_NOT_ABOVE_A, C_NOT_ABOVE_B, DEGENERATE_EQUILIBRIA, NON_FINITE,
    Y1_NOT_POSITIVE, AffineCurve, ConstraintViolation, CurveLabel, InvalidMeta, Mode,
    ParallelCurves, Regime,
    curves, dwl_quadrature, equilibria, find_violation, intersect, paper_closed_forms,
    standard_closed_forms, validate, violation_labels, welfare, welfare_paper, welfare_standard,
)
from tests.conftest import near_equal_cost_scenarios, random_scenarios


# ---------- intersect ----------

@pytest.mark.parametrize("first, second, expected", [
    ((1, 0), (-1, 12), (6, 6)),
    ((2, 0), (-1, 12), (4, 8)),
    ((1, 0), (-3, 12), (3, 3)),
    ((2, 0), (-3, 12), (2.4, 4.8)),
])
def test_intersect_examples(first, second, expected):
    x, y = intersect(AffineCurve(*first), AffineCurve(*second))
    assert x == pytest.approx(expected[0], rel=1e-12)
    assert y == pytest.approx(expected[1], rel=1e-12)


def test_intersect_parallel():
    with pytest.raises(ParallelCurves):
        intersect(AffineCurve(2, 0), AffineCurve(2, 5))
    with pytest.raises(ParallelCurves):
        intersect(AffineCurve(2, 0), AffineCurve(2 + 1e-13, 5))


def test_intersect_may_return_negative_x():
    x, _ = intersect(AffineCurve(1, 5), AffineCurve(-1, 1))
    assert x == pytest.approx(-2)


def test_intersect_point_lies_on_both_lines():
    rng = np.random.default_rng(11)
    for _ in range(500):
        s1 = rng.uniform(0.1, 5)
        s2 = -rng.uniform(0.1, 5)
        i1, i2 = rng.uniform(-20, 20, size=2)
        first, second = AffineCurve(s1, i1), AffineCurve(s2, i2)
        x, y = intersect(first, second)
        scale = max(1.0, abs(y))
        assert abs(first.value(x) - y) <= 1e-12 * scale
        assert abs(second.value(x) - y) <= 1e-12 * scale


def test_curve_minus():
    gap = AffineCurve(2, 0).minus(AffineCurve(-1, 12))
    assert (gap.slope, gap.intercept) == (3, -12)
    assert gap.label is None


# ---------- validate ----------

def test_validate_accepts_worked_instance():
    s = validate(1, 2, 3, 12)
    assert s.parameters() == {"a": 1.0, "b": 2.0, "c": 3.0, "y1": 12.0}


@pytest.mark.parametrize("params, predicate", [
    ((1, 1, 3, 12), B_NOT_ABOVE_A),
    ((1, 2, 2, 12), C_NOT_ABOVE_B),
    ((1, 2, 3, 0), Y1_NOT_POSITIVE),
    ((1, 2, 3, -4), Y1_NOT_POSITIVE),
    ((0, 2, 3, 12), A_NOT_POSITIVE),
    ((-1, 2, 3, 12), A_NOT_POSITIVE),
    ((float("nan"), 2, 3, 12), NON_FINITE),
    ((1, float("inf"), 3, 12), NON_FINITE),
    # several failures: the first in check order wins
    ((1, 1, 0.5, 0), B_NOT_ABOVE_A),
])
def test_validate_rejects(params, predicate):
    with pytest.raises(ConstraintViolation) as err:
        validate(*params)
    assert err.value.predicate == predicate
    assert list(err.value.values) == ["a", "b", "c", "y1"]


@pytest.mark.parametrize("params", [
    # slopes closer than the parallel tolerance; x_private overflows
    (1e-300, 2e-300, 3e-300, 1e300),
    # every intersection underflows to zero
    (1, 2, 3, 5e-324),
    # a + b rounds to 2a, so x_social == x_private
    (1, float(np.nextafter(1.0, 2.0)), 3, 12),
])
def test_validate_rejects_unrepresentable_equilibria(params):
    with pytest.raises(ConstraintViolation) as err:
        validate(*params)
    assert err.value.predicate == DEGENERATE_EQUILIBRIA
    labels = violation_labels(*(np.array([p], dtype=float) for p in params))
    assert list(labels) == [DEGENERATE_EQUILIBRIA]


def test_validate_meta_mapping():
    s = validate(1, 2, 3, 12, {"name": "x", "activity_unit": "t", "currency_unit": "$"})
    assert s.meta.name == "x"
    with pytest.raises(InvalidMeta) as err:
        validate(1, 2, 3, 12, {"name": "x", "activity_unit": "", "currency_unit": "$"})
    assert err.value.field == "activity_unit"


def test_violation_carries_values():
    with pytest.raises(ConstraintViolation, match="b <= a") as err:
        validate(1, 1, 3, 12)
    assert err.value.values == {"a": 1, "b": 1, "c": 3, "y1": 12}


def test_violation_pickles():
    e = find_violation(1, 1, 3, 12)
    back = pickle.loads(pickle.dumps(e))
    assert back.predicate == e.predicate
    assert back.values == e.values


def test_violation_labels_match_scalar_checks():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1, 4, size=(2000, 4))
    pts[::97, 2] = np.nan
    labels = violation_labels(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3])
    for row, label in zip(pts, labels):
        found = find_violation(*row)
        assert label == ("" if found is None else found.predicate)


def test_scenario_is_frozen(worked):
    with pytest.raises(ValidationError):
        worked.a = 5.0


def test_replace_revalidates(worked):
    moved = worked.replace(c=4)
    assert moved.c == 4.0 and moved.meta == worked.meta
    with pytest.raises(ConstraintViolation):
        worked.replace(b=0.5)
    with pytest.raises(KeyError):
        worked.replace(d=1)


# ---------- curves & equilibria ----------

def test_curves(worked):
    mpc, msc, msb = curves(worked, Regime.NONCOOPERATIVE)
    assert (mpc.slope, mpc.intercept, mpc.label) == (1, 0, CurveLabel.MPC)
    assert (msc.slope, msc.intercept, msc.label) == (2, 0, CurveLabel.MSC)
    assert (msb.slope, msb.intercept, msb.label) == (-1, 12, CurveLabel.MSB_NONCOOP)
    _, _, msb_co = curves(worked, "cooperative")
    assert (msb_co.slope, msb_co.intercept, msb_co.label) == (-3, 12, CurveLabel.MSB_COOP)


@pytest.mark.parametrize("params, regime, x_private, x_social", [
    ((1, 2, 3, 12), Regime.NONCOOPERATIVE, 6, 4),
    ((1, 2, 3, 12), Regime.COOPERATIVE, 3, 2.4),
    ((1, 3, 5, 8), Regime.NONCOOPERATIVE, 4, 2),
    ((1, 3, 5, 8), Regime.COOPERATIVE, 4 / 3, 1),
])
def test_equilibria_examples(params, regime, x_private, x_social):
    eq = equilibria(validate(*params), regime)
    assert eq.regime is regime
    assert eq.x_private == pytest.approx(x_private, rel=1e-12)
    assert eq.x_social == pytest.approx(x_social, rel=1e-12)


def test_equilibria_ordering_and_contraction():
    for s in random_scenarios(1000, seed=1):
        non = equilibria(s, Regime.NONCOOPERATIVE)
        co = equilibria(s, Regime.COOPERATIVE)
        for eq in (non, co):
            assert 0 < eq.x_social < eq.x_private
            assert eq.y_private > 0 and eq.y_social > 0
        assert co.x_social < non.x_social
        assert co.x_private < non.x_private
        assert non.x_private == pytest.approx(s.y1 / (2 * s.a), rel=1e-12)
        assert co.x_social == pytest.approx(s.y1 / (s.b + s.c), rel=1e-12)


# ---------- welfare ----------

@pytest.mark.parametrize("params, regime, tau, alpha, evaluation_x", [
    ((1, 2, 3, 12), Regime.NONCOOPERATIVE, 4, 4, 4),
    ((1, 2, 3, 12), Regime.COOPERATIVE, 3, 0.9, 3),
    ((1, 3, 5, 8), Regime.COOPERATIVE, 8 / 3, 4 / 9, 4 / 3),
])
def test_welfare_paper_examples(params, regime, tau, alpha, evaluation_x):
    w = welfare_paper(validate(*params), regime)
    assert w.mode is Mode.PAPER
    assert w.tau == pytest.approx(tau, rel=1e-12)
    assert w.alpha == pytest.approx(alpha, rel=1e-12)
    assert w.evaluation_x == pytest.approx(evaluation_x, rel=1e-12)


@pytest.mark.parametrize("params, regime, tau, alpha", [
    ((1, 2, 3, 12), Regime.NONCOOPERATIVE, 4, 6),
    ((1, 2, 3, 12), Regime.COOPERATIVE, 2.4, 0.9),
    ((1, 3, 5, 8), Regime.NONCOOPERATIVE, 4, 8),
    ((1, 3, 5, 8), Regime.COOPERATIVE, 2, 4 / 9),
])
def test_welfare_standard_examples(params, regime, tau, alpha):
    w = welfare_standard(validate(*params), regime)
    assert w.mode is Mode.STANDARD
    assert w.tau == pytest.approx(tau, rel=1e-12)
    assert w.alpha == pytest.approx(alpha, rel=1e-12)


def test_welfare_dispatches_on_mode(worked):
    assert welfare(worked, "cooperative", "paper").tau == pytest.approx(3)
    assert welfare(worked, "cooperative", "standard").tau == pytest.approx(2.4)
    with pytest.raises(ValueError):
        welfare(worked, "cooperative", "textbook")


def test_standard_geometry_matches_closed_forms():
    for s in random_scenarios(500, seed=2):
        f = standard_closed_forms(s.a, s.b, s.c, s.y1)
        non = welfare_standard(s, Regime.NONCOOPERATIVE)
        co = welfare_standard(s, Regime.COOPERATIVE)
        assert non.tau == pytest.approx(f.tau1, rel=1e-9)
        assert co.tau == pytest.approx(f.tau2, rel=1e-9)
        assert non.alpha == pytest.approx(f.alpha1, rel=1e-9)
        assert co.alpha == pytest.approx(f.alpha2, rel=1e-9)


def test_closed_forms_accept_arrays():
    a = np.array([1.0, 1.0])
    f = paper_closed_forms(a, np.array([2.0, 3.0]), np.array([3.0, 5.0]), np.array([12.0, 8.0]))
    np.testing.assert_allclose(f.tau1, [4, 4], rtol=1e-12)
    np.testing.assert_allclose(f.alpha2, [0.9, 4 / 9], rtol=1e-12)


# ---------- quadrature ----------

def test_quadrature_single_panel_is_exact(worked):
    assert dwl_quadrature(worked, Regime.NONCOOPERATIVE, 1) == pytest.approx(6, rel=1e-12)
    assert dwl_quadrature(worked, Regime.COOPERATIVE, 1) == pytest.approx(0.9, rel=1e-12)


def test_quadrature_many_panels(second):
    assert dwl_quadrature(second, Regime.COOPERATIVE, 100_000) == pytest.approx(4 / 9, rel=1e-9)


@pytest.mark.parametrize("panels", [0, -3, 2.5, True])
def test_quadrature_rejects_bad_panels(worked, panels):
    with pytest.raises(ValueError):
        dwl_quadrature(worked, Regime.NONCOOPERATIVE, panels)


def test_standard_alpha_stable_when_costs_nearly_equal():
    for s in near_equal_cost_scenarios(2000, seed=12):
        f = standard_closed_forms(s.a, s.b, s.c, s.y1)
        non = welfare_standard(s, Regime.NONCOOPERATIVE)
        co = welfare_standard(s, Regime.COOPERATIVE)
        assert non.alpha == pytest.approx(f.alpha1, rel=1e-12)
        assert co.alpha == pytest.approx(f.alpha2, rel=1e-12)
