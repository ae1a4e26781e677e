import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdbell.dependence import dependence_report
from mdbell.inequalities import (
    MERMIN, NS2_99, SVETLICHNY, Kind, RelaxationScenario, Shape, check_model_against_bound, evaluate,
    get_spec, relaxed_bound,
)
from mdbell.paper_models import SIGN_LETTERS, paper_model
from mdbell.scenario import FULL_CONTEXTS, Pairing, PartialModelError, ResponseTable, build_model
from oracles import mermin_test_models

H = Fraction(1, 2)
SHAPES = {
    Kind.MERMIN: ["one-sided:A", "one-sided:B", "one-sided:C", "bipartite:AB", "bipartite:BC", "bipartite:AC"],
    Kind.SVETLICHNY: ["one-sided:A", "one-sided:B", "one-sided:C", "bipartite:AB", "bipartite:BC", "bipartite:AC"],
    Kind.NS2: ["one-sided:A", "one-sided:B", "one-sided:C"],
}
budget_values = st.fractions(min_value=0, max_value=2, max_denominator=8)


def test_spec_shapes():
    assert len(MERMIN.terms) == 4 and all(c.is_full for c in MERMIN.contexts)
    assert (MERMIN.classical_bound, MERMIN.algebraic_max) == (2, 4)
    assert len(SVETLICHNY.terms) == 8 and (SVETLICHNY.classical_bound, SVETLICHNY.algebraic_max) == (4, 8)
    assert sum(not c.is_full for c in NS2_99.contexts) == 3 and sum(c.is_full for c in NS2_99.contexts) == 2
    assert (NS2_99.classical_bound, NS2_99.algebraic_max) == (3, 5)


def test_svetlichny_sign_pattern():
    assert [s for _, s in SVETLICHNY.terms] == [1, 1, 1, -1, 1, -1, -1, -1]


def test_trivial_classical_point():
    rt = ResponseTable(Pairing.FULLY_LOCAL, ((1,) * 6,))
    m = build_model(rt, {c: (1,) for c in FULL_CONTEXTS})
    assert evaluate(m, "mermin") == 2


def test_evaluate_names_missing_context():
    with pytest.raises(PartialModelError, match="xyz"):
        evaluate(paper_model("I", 0, 0), "svetlichny")


@pytest.mark.parametrize("p", [Fraction(k, 8) for k in range(9)])
def test_model_S_formulas(p):
    assert evaluate(paper_model("II", p), "svetlichny") == 4 + 4 * p
    assert evaluate(paper_model("III", p), "ns2") == 3 + 2 * p
    assert evaluate(paper_model("IV", p), "mermin") == 2 + 2 * p
    assert evaluate(paper_model("V", p), "svetlichny") == 4 + 4 * p


def test_relaxed_bound_examples():
    sc = RelaxationScenario("one-sided:A", {"M1": 1})
    assert relaxed_bound("mermin", sc) == 4
    # with M2 = 0 the term 2*M2 + M1 = 1 binds
    assert relaxed_bound("mermin", RelaxationScenario("one-sided:A", {"M1": 1, "M2": 0})) == 3
    assert relaxed_bound("mermin", RelaxationScenario("one-sided:A", {"M1": H, "M2": 1})) == 4
    assert relaxed_bound("mermin", RelaxationScenario("one-sided:A", {"M1": H, "M2": 0})) == Fraction(5, 2)
    m1 = 2 * (math.sqrt(2) - 1)
    assert relaxed_bound("svetlichny", RelaxationScenario("one-sided:A", {"M1": m1})) == pytest.approx(4 * math.sqrt(2))
    assert relaxed_bound("ns2", RelaxationScenario("one-sided:C", {"M3": 2})) == 5
    assert relaxed_bound("ns2", RelaxationScenario("one-sided:A", {"M1": H, "M3": 0})) == 4
    assert relaxed_bound("ns2", RelaxationScenario("one-sided:B", {"M2": Fraction(1, 4), "M3": 1})) == Fraction(9, 2)
    assert relaxed_bound("mermin", RelaxationScenario("bipartite:AB", {"M12": 1, "M23": H, "M13": 2})) == Fraction(5, 2)
    assert relaxed_bound("svetlichny", RelaxationScenario("bipartite:AB", {"M12": H})) == 5


def test_overall_budget_caps_others():
    assert relaxed_bound("svetlichny", RelaxationScenario("one-sided:A", {"M": H})) == 5


def test_ns2_has_no_bipartite_bound():
    with pytest.raises(ValueError):
        relaxed_bound("ns2", RelaxationScenario("bipartite:AB", {}))


@pytest.mark.parametrize("kind", list(Kind))
def test_extreme_budgets(kind):
    spec = get_spec(kind)
    for shape in SHAPES[kind]:
        sh = Shape.parse(shape)
        zero = RelaxationScenario(sh, {k: 0 for k in ("M",) + sh.family})
        two = RelaxationScenario(sh, {k: 2 for k in sh.family})
        assert relaxed_bound(kind, zero) == spec.classical_bound
        assert relaxed_bound(kind, two) == spec.algebraic_max


def test_scenario_validation():
    with pytest.raises(ValueError):
        RelaxationScenario("one-sided:A", {"M1": 3})
    with pytest.raises(ValueError):
        RelaxationScenario("one-sided:A", {"M9": 1})
    with pytest.raises(ValueError):
        Shape.parse("tripartite:ABC")
    assert Shape.parse("bipartite:ba").target == "AB"


def test_model_against_bound_examples():
    r = check_model_against_bound(paper_model("II", math.sqrt(2) - 1), "svetlichny",
                                  RelaxationScenario("one-sided:A"))
    assert r.S == pytest.approx(4 * math.sqrt(2), abs=1e-9) and r.verdict and r.tight
    r = check_model_against_bound(paper_model("IV", 1), "mermin", RelaxationScenario("bipartite:AB"))
    assert (r.S, r.bound, r.verdict, r.tight) == (4, 4, True, True)
    assert any("partial model" in n for n in r.notes)
    r = check_model_against_bound(paper_model("V", 1), "svetlichny", RelaxationScenario("bipartite:AB"))
    assert (r.S, r.bound, r.tight) == (8, 8, True)
    r = check_model_against_bound(paper_model("III", 1), "ns2", RelaxationScenario("one-sided:C"))
    assert (r.S, r.bound, r.tight) == (5, 5, True)
    assert r.to_json()["bound"] == "5"


def test_ns2_compares_signed_value():
    # local deterministic row reaching S = -5; the facet only bounds S from above
    rt = ResponseTable(Pairing.FULLY_LOCAL, ((-1, -1, 1, -1, 1, -1),))
    dist = {c: (1,) for c in NS2_99.contexts}
    m = build_model(rt, dist)
    assert evaluate(m, "ns2") == -5
    r = check_model_against_bound(m, "ns2", RelaxationScenario("one-sided:C", {"M3": 0}))
    assert r.verdict and r.bound == 3


SIGN_GRID = [Fraction(0), H, Fraction(1)]


@pytest.mark.parametrize("mid", ["I", "II", "III", "IV", "V"])
def test_sign_parameter_invariance(mid):
    kind = {"I": "mermin", "II": "svetlichny", "III": "ns2", "IV": "mermin", "V": "svetlichny"}[mid]
    letters = SIGN_LETTERS[mid]
    for p in SIGN_GRID:
        params = (p, 0) if mid == "I" else (p,)
        if mid == "I":
            params = (p / 2, p / 2)
        ref = abs(evaluate(paper_model(mid, *params), kind))
        for signs in itertools.product((1, -1), repeat=len(letters)):
            m = paper_model(mid, *params, **dict(zip(letters, signs)))
            assert abs(evaluate(m, kind)) == ref, (mid, p, signs)


@st.composite
def scenario_pairs(draw):
    kind = draw(st.sampled_from(list(Kind)))
    shape = Shape.parse(draw(st.sampled_from(SHAPES[kind])))
    keys = ("M",) + shape.family
    lo = {k: draw(budget_values) for k in keys if draw(st.booleans())}
    # raise each budget; dropping a key means raising it to 2
    hi = {k: min(Fraction(2), v + draw(budget_values)) for k, v in lo.items() if draw(st.booleans())}
    return kind, RelaxationScenario(shape, lo), RelaxationScenario(shape, hi)


@settings(max_examples=1000)
@given(scenario_pairs())
def test_relaxed_bound_monotone(case):
    kind, lo, hi = case
    spec = get_spec(kind)
    a, b = relaxed_bound(kind, lo), relaxed_bound(kind, hi)
    assert spec.classical_bound <= a <= b <= spec.algebraic_max


def _mermin_measured_check(model, shape):
    sh = Shape.parse(shape)
    vals = dependence_report(model).values
    sc = RelaxationScenario(sh, {k: vals[k] for k in ("M",) + sh.family})
    S = abs(evaluate(model, "mermin"))
    assert S <= relaxed_bound("mermin", sc), (model.responses.rows, {k: str(v) for k, v in sc.budgets.items()})


@settings(max_examples=1000)
@given(mermin_test_models)
def test_mermin_within_one_sided_bound_at_measured_budgets(model):
    _mermin_measured_check(model, "one-sided:A")


@settings(max_examples=1000)
@given(mermin_test_models)
def test_mermin_within_bipartite_bound_at_measured_budgets(model):
    _mermin_measured_check(model, "bipartite:AB")
