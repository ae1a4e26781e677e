import itertools
import json
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from mdbell.bound_search import (
    ALPHABET, BoundViolation, build_program, canonical_form, enumerate_strategies, flip_group, lp_max_S,
    make_scenario, strategy_upper_bound, verify_bound_soundness,
)
from mdbell.inequalities import Kind, RelaxationScenario, Shape, get_spec
from mdbell.lp import dual_program, simplex_solve
from mdbell.paper_models import paper_model
from mdbell.scenario import FULL_CONTEXTS, Context, Pairing, ResponseTable
from oracles import flip_oracle, scipy_max, sign_rows

H = Fraction(1, 2)
FLIPS = {"M": ["A", "B", "C", "AB", "BC", "AC", "ABC"], "M1": ["A"], "M2": ["B"], "M3": ["C"],
         "M12": ["AB"], "M23": ["BC"], "M13": ["AC"]}


def oracle_max(rows, pairing, kind, budgets, direction=1):
    """Dense scipy LP built from scratch: rho over full contexts, pair
    contexts of NS2 tied to their extensions, L1 budgets by brute-force flips."""
    spec = get_spec(kind)
    rt = ResponseTable(pairing, tuple(rows))
    L = rt.L
    idx = {c: i for i, c in enumerate(FULL_CONTEXTS)}
    pairs = set()
    for mid, m in budgets.items():
        if m >= 2:
            continue
        for s in FULL_CONTEXTS:
            for f in FLIPS[mid]:
                t = flip_oracle(s, f)
                pairs.add((mid, frozenset((s, t))))
    budget_pairs = sorted(pairs, key=lambda p: (p[0], sorted(c.sort_key() for c in p[1])))
    nrho = 8 * L
    n = nrho + len(budget_pairs) * L
    c = np.zeros(n)
    for ctx, sg in spec.terms:
        ext = ctx if ctx.is_full else next(f for f in FULL_CONTEXTS if f.extends(ctx))
        for l in range(L):
            c[idx[ext] * L + l] -= direction * sg * rt.sign(l, ctx)
    A_eq, b_eq, A_ub, b_ub = [], [], [], []
    for i in range(8):
        row = np.zeros(n)
        row[i * L:(i + 1) * L] = 1
        A_eq.append(row)
        b_eq.append(1)
    for ctx, _ in spec.terms:
        if ctx.is_full:
            continue
        e0, e1 = [f for f in FULL_CONTEXTS if f.extends(ctx)]
        for l in range(L):
            row = np.zeros(n)
            row[idx[e0] * L + l], row[idx[e1] * L + l] = 1, -1
            A_eq.append(row)
            b_eq.append(0)
    for k, (mid, pr) in enumerate(budget_pairs):
        s, t = sorted(pr, key=Context.sort_key)
        base = nrho + k * L
        for l in range(L):
            for sg in (1, -1):
                row = np.zeros(n)
                row[idx[s] * L + l], row[idx[t] * L + l], row[base + l] = sg, -sg, -1
                A_ub.append(row)
                b_ub.append(0)
        row = np.zeros(n)
        row[base:base + L] = 1
        A_ub.append(row)
        b_ub.append(float(budgets[mid]))
    res = linprog(c, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                  A_eq=np.array(A_eq), b_eq=b_eq, method="highs")
    assert res.status == 0
    return -res.fun


def oracle_abs_max(rows, pairing, kind, budgets):
    dirs = (1, -1) if get_spec(kind).two_sided else (1,)
    return max(oracle_max(rows, pairing, kind, budgets, d) for d in dirs)


MODEL_II_ROWS = paper_model("II", 0).responses.rows
MODEL_III_ROWS = paper_model("III", 0).responses.rows
MODEL_IV_ROWS = paper_model("IV", 0).responses.rows


def test_table_strategies_against_oracle():
    for m in (0, Fraction(1, 4), H, 1, 2):
        sc = RelaxationScenario.uniform("one-sided:A", m)
        v = lp_max_S(ResponseTable(Pairing.JOINT_AB, MODEL_II_ROWS), "svetlichny", sc).lp_max_S
        assert float(v) == pytest.approx(oracle_abs_max(MODEL_II_ROWS, Pairing.JOINT_AB, "svetlichny", sc.budgets), abs=1e-7)
    for m in (0, 1, 2):
        sc = RelaxationScenario.uniform("bipartite:AB", m)
        v = lp_max_S(ResponseTable(Pairing.FULLY_LOCAL, MODEL_IV_ROWS), "mermin", sc).lp_max_S
        assert float(v) == pytest.approx(oracle_abs_max(MODEL_IV_ROWS, Pairing.FULLY_LOCAL, "mermin", sc.budgets), abs=1e-7)
        sc = RelaxationScenario.uniform("one-sided:C", m)
        v = lp_max_S(ResponseTable(Pairing.FULLY_LOCAL, MODEL_III_ROWS), "ns2", sc).lp_max_S
        assert float(v) == pytest.approx(oracle_abs_max(MODEL_III_ROWS, Pairing.FULLY_LOCAL, "ns2", sc.budgets), abs=1e-7)


def test_frozen_table_strategy_values():
    # frozen after agreement with oracle_max above
    II = ResponseTable(Pairing.JOINT_AB, MODEL_II_ROWS)
    got = [lp_max_S(II, "svetlichny", RelaxationScenario.uniform("one-sided:A", m)).lp_max_S
           for m in (0, Fraction(1, 4), H, 1, 2)]
    assert got == [4, 5, 6, 8, 8]
    IV = ResponseTable(Pairing.FULLY_LOCAL, MODEL_IV_ROWS)
    assert [lp_max_S(IV, "mermin", RelaxationScenario.uniform("bipartite:AB", m)).lp_max_S
            for m in (0, 1, 2)] == [2, 3, 4]
    III = ResponseTable(Pairing.FULLY_LOCAL, MODEL_III_ROWS)
    assert [lp_max_S(III, "ns2", RelaxationScenario.uniform("one-sided:C", m)).lp_max_S
            for m in (0, 1, 2)] == [3, 5, 5]


def test_model_IV_bipartite_budget_two():
    IV = ResponseTable(Pairing.FULLY_LOCAL, MODEL_IV_ROWS)
    assert lp_max_S(IV, "mermin", RelaxationScenario("bipartite:AB", {"M12": 2})).lp_max_S == 4


def test_free_pairs_break_ns2_classical_bound():
    # without tying pair blocks to full contexts the three pair terms are free
    III = ResponseTable(Pairing.FULLY_LOCAL, MODEL_III_ROWS)
    sc = RelaxationScenario.uniform("one-sided:C", 0)
    assert lp_max_S(III, "ns2", sc, strict=True).lp_max_S == 3
    assert lp_max_S(III, "ns2", sc, strict=False).lp_max_S == 5


def test_pairing_checks():
    with pytest.raises(ValueError):
        lp_max_S(ResponseTable(Pairing.JOINT_AB, MODEL_II_ROWS), "mermin", RelaxationScenario("one-sided:A"))


def test_enumeration_counts():
    e = enumerate_strategies(Pairing.FULLY_LOCAL, 1)
    assert e.raw_count == 64 and e.count <= 64
    assert enumerate_strategies(Pairing.JOINT_AB, 1, quotient=False).count == 64
    assert enumerate_strategies(Pairing.FULLY_LOCAL, 2).raw_count == 4096
    assert enumerate_strategies(Pairing.FULLY_LOCAL, 2, "mermin").count == 160
    assert enumerate_strategies(Pairing.FULLY_LOCAL, 2, "svetlichny").count == 288
    assert enumerate_strategies(Pairing.FULLY_LOCAL, 2, "ns2").count == 544
    with pytest.raises(ValueError):
        enumerate_strategies(Pairing.FULLY_LOCAL, 4)


def test_flip_groups_preserve_compared_value():
    for kind in Kind:
        spec = get_spec(kind)
        for g in flip_group(Pairing.FULLY_LOCAL, kind):
            factors = {ResponseTable(Pairing.FULLY_LOCAL, (g,)).sign(0, c) for c in spec.contexts}
            assert len(factors) == 1 and (spec.two_sided or factors == {1})


def _random_tables(n, seed=7):
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        kind = rng.choice(list(Kind))
        L = rng.randint(1, 3)
        rows = tuple(rng.choice(ALPHABET) for _ in range(L))
        out.append((kind, rows))
    return out


def test_quotient_representative_has_same_value():
    for kind, rows in _random_tables(100):
        group = flip_group(Pairing.FULLY_LOCAL, kind)
        rep = canonical_form(rows, group)
        shape = "one-sided:C" if kind is Kind.NS2 else "one-sided:A"
        sc = RelaxationScenario.uniform(shape, H)
        a = lp_max_S(ResponseTable(Pairing.FULLY_LOCAL, rows), kind, sc, "real").lp_max_S
        b = lp_max_S(ResponseTable(Pairing.FULLY_LOCAL, rep), kind, sc, "real").lp_max_S
        assert a == pytest.approx(b, abs=1e-9)


def test_exact_and_real_agree():
    for kind, rows in _random_tables(40, seed=11):
        shape = "one-sided:C" if kind is Kind.NS2 else "bipartite:AB"
        for m in (0, H, Fraction(3, 2)):
            sc = RelaxationScenario.uniform(shape, m)
            st_ = ResponseTable(Pairing.FULLY_LOCAL, rows)
            e = lp_max_S(st_, kind, sc, "exact").lp_max_S
            r = lp_max_S(st_, kind, sc, "real").lp_max_S
            assert abs(float(e) - r) <= 1e-7


def test_lp_against_highs_on_programs():
    for kind, rows in _random_tables(30, seed=3):
        shape = "one-sided:C" if kind is Kind.NS2 else "one-sided:B"
        prog = build_program(ResponseTable(Pairing.FULLY_LOCAL, rows), kind,
                             RelaxationScenario.uniform(shape, Fraction(1, 4)))
        status, ref = scipy_max(prog.lp)
        assert status == 0
        sol = simplex_solve(prog.lp)
        assert float(sol.value) == pytest.approx(ref, abs=1e-7)
        assert simplex_solve(dual_program(prog.lp)).value == -sol.value


def test_strategy_upper_bound_caps_lp():
    for kind, rows in _random_tables(30, seed=5):
        st_ = ResponseTable(Pairing.FULLY_LOCAL, rows)
        shape = "one-sided:C" if kind is Kind.NS2 else "one-sided:A"
        v = lp_max_S(st_, kind, RelaxationScenario.uniform(shape, 2)).lp_max_S
        assert v <= strategy_upper_bound(st_, kind, 0)


@st.composite
def monotone_cases(draw):
    kind = draw(st.sampled_from(list(Kind)))
    shape = Shape.parse(draw(st.sampled_from(
        ["one-sided:A", "one-sided:C"] if kind is Kind.NS2 else ["one-sided:B", "bipartite:AC"])))
    rows = tuple(draw(sign_rows) for _ in range(draw(st.integers(1, 2))))
    lo = {k: draw(st.fractions(0, 2, max_denominator=4)) for k in shape.family}
    hi = {k: min(Fraction(2), v + draw(st.fractions(0, 1, max_denominator=4))) for k, v in lo.items()}
    return kind, rows, RelaxationScenario(shape, lo), RelaxationScenario(shape, hi)


@settings(max_examples=1000)
@given(monotone_cases())
def test_lp_max_monotone_in_budgets(case):
    kind, rows, lo, hi = case
    st_ = ResponseTable(Pairing.FULLY_LOCAL, rows)
    assert lp_max_S(st_, kind, lo, "real").lp_max_S <= lp_max_S(st_, kind, hi, "real").lp_max_S + 1e-9


def test_soundness_sweep_small_and_serialization():
    s = verify_bound_soundness("mermin", "bipartite:AB", 1, [0, 1, 2])
    assert s.sound
    # one hidden variable leaves nothing to tune: always the deterministic value
    assert [p.max_S for p in s.points] == [2, 2, 2]
    assert [p.bound for p in s.points] == [2, 3, 4]
    lines = s.to_jsonl().splitlines()
    assert json.loads(lines[0])["schema_version"] == "1" and len(lines) == 4
    assert s.to_csv().splitlines()[0] == "budget,max_S,bound"


def test_parallel_sweep_matches_serial():
    kw = dict(pairing=Pairing.FULLY_LOCAL)
    a = verify_bound_soundness("svetlichny", "one-sided:A", 2, [0, H, 2], workers=1, **kw)
    b = verify_bound_soundness("svetlichny", "one-sided:A", 2, [0, H, 2], workers=2, **kw)
    # work counters depend on how pruning state is split; results must not
    strip = lambda j: dict(j, points=[{k: v for k, v in q.items() if k not in ("lp_solved", "skipped")}
                                      for q in j["points"]])
    assert strip(a.to_json()) == strip(b.to_json())


def test_pruning_does_not_change_results():
    a = verify_bound_soundness("mermin", "one-sided:A", 2, [0, H, 2], prune=True)
    b = verify_bound_soundness("mermin", "one-sided:A", 2, [0, H, 2], prune=False)
    assert [p.max_S for p in a.points] == [p.max_S for p in b.points]
    assert [p.witness_index for p in a.points] == [p.witness_index for p in b.points]


def test_violation_is_raised_with_serialized_strategy():
    # Model II's strategy exceeds 4 + 2m at m = 1/2 under uniform budgets
    st_ = ResponseTable(Pairing.JOINT_AB, MODEL_II_ROWS)
    with pytest.raises(BoundViolation) as e:
        verify_bound_soundness("svetlichny", "one-sided:A", 9, [H], pairing=Pairing.JOINT_AB, strategies=[st_])
    cert = e.value.certificate
    assert cert.lp_max_S == 6 and cert.bound == 5
    j = json.loads(json.dumps(cert.to_json()))
    assert j["strategy"]["rows"] == [list(r) for r in MODEL_II_ROWS]
    assert not e.value.summary.sound
    s = verify_bound_soundness("svetlichny", "one-sided:A", 9, [H], pairing=Pairing.JOINT_AB,
                               strategies=[st_], stop_on_violation=False)
    assert len(s.violations) == 1


def test_make_scenario_modes():
    sh = Shape.parse("one-sided:B")
    assert make_scenario(sh, H, "uniform").budgets == {"M1": H, "M2": H, "M3": H}
    assert make_scenario(sh, H, "single").budgets == {"M2": H}
    with pytest.raises(ValueError):
        make_scenario(sh, H, "other")
