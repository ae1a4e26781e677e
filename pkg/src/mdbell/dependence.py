"""Measurement-dependence measures and freedom of choice.

Every measure is a supremum of L1 distances sum_lambda |rho(l|s) - rho(l|s')|
over a family of pairs of full contexts:

* ``M``   all pairs of distinct full contexts,
* ``M1``/``M2``/``M3``  pairs differing only in A's / B's / C's setting,
* ``M12``/``M23``/``M13``  pairs in which both named parties change setting
  while the third is held fixed (the direct pairs xyz~x'y'z and the crossed
  pairs x'yz~xy'z).

Pair contexts never enter.  On partial models only the pairs that are present
count, so a measure there is a lower bound on the supremum and is ``None``
when no admissible pair is present.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from .lp import LinearProgram, LPInfeasible, simplex_solve, solve_exact
from .scenario import (
    FULL_CONTEXTS, PARTIES, Context, MDLModel, ModelError, Number, build_model, fmt_number,
    is_exact, to_number,
)

ONE_SIDED = ("M1", "M2", "M3")
BIPARTITE = ("M12", "M23", "M13")
MEASURE_IDS = ("M",) + ONE_SIDED + BIPARTITE

_PARTY_OF = {"M1": "A", "M2": "B", "M3": "C"}
_PAIR_OF = {"M12": "AB", "M23": "BC", "M13": "AC"}
_ID_OF_PARTY = {v: k for k, v in _PARTY_OF.items()}
_ID_OF_PAIR = {v: k for k, v in _PAIR_OF.items()}
_ID_OF_PAIR.update({"BA": "M12", "CB": "M23", "CA": "M13"})


def one_sided_id(party: str) -> str:
    return _ID_OF_PARTY[party.upper()]


def bipartite_id(pair: str) -> str:
    return _ID_OF_PAIR[pair.upper()]


def _differs(s: Context, t: Context) -> str:
    return "".join(p for p in PARTIES if s.setting(p) != t.setting(p))


def measure_pairs(mid: str) -> Tuple[Tuple[Context, Context], ...]:
    """Unordered pairs of full contexts that measure ``mid`` ranges over."""
    if mid not in MEASURE_IDS:
        raise ModelError(f"unknown measure {mid!r}")
    out = []
    for s, t in itertools.combinations(FULL_CONTEXTS, 2):
        d = _differs(s, t)
        if mid == "M" or (mid in _PARTY_OF and d == _PARTY_OF[mid]) or (
            mid in _PAIR_OF and d == _PAIR_OF[mid]
        ):
            out.append((s, t))
    return tuple(out)


def l1_distance(u: Sequence[Number], v: Sequence[Number]) -> Number:
    if len(u) != len(v):
        raise ModelError("distributions have different lengths")
    return sum((abs(a - b) for a, b in zip(u, v)), Fraction(0))


def measure(model: MDLModel, mid: str) -> Optional[Number]:
    best = None
    for s, t in measure_pairs(mid):
        if s in model.distributions and t in model.distributions:
            d = l1_distance(model.rho(s), model.rho(t))
            if best is None or d > best:
                best = d
    return best


def measure_one_sided(model: MDLModel, party: str) -> Optional[Number]:
    return measure(model, one_sided_id(party))


def measure_bipartite(model: MDLModel, pair: str) -> Optional[Number]:
    return measure(model, bipartite_id(pair))


def measure_overall(model: MDLModel) -> Optional[Number]:
    return measure(model, "M")


def freedom(m: Number) -> Number:
    """F = 1 - M/2."""
    if isinstance(m, str):
        m = to_number(m)
    if not 0 <= m <= 2:
        raise ValueError(f"dependence measure must lie in [0, 2], got {m}")
    if is_exact(m):
        return 1 - Fraction(m) / 2
    return 1.0 - float(m) / 2.0


@dataclass(frozen=True)
class DependenceReport:
    overall: Optional[Number]
    one_sided: Mapping[str, Optional[Number]]
    bipartite: Mapping[str, Optional[Number]]
    partial: bool = False

    @property
    def values(self) -> Dict[str, Optional[Number]]:
        out = {"M": self.overall}
        out.update(self.one_sided)
        out.update(self.bipartite)
        return out

    @property
    def freedoms(self) -> Dict[str, Optional[Number]]:
        return {"F" + k[1:]: (None if v is None else freedom(v)) for k, v in self.values.items()}

    def to_json(self) -> dict:
        """Flat object; undefined measures are null, rationals are strings."""
        def enc(v):
            if v is None:
                return None
            return fmt_number(v) if isinstance(v, Fraction) else float(v)

        out = {k: enc(v) for k, v in self.values.items()}
        out.update({k: enc(v) for k, v in self.freedoms.items()})
        out["partial"] = self.partial
        return out


def dependence_report(model: MDLModel) -> DependenceReport:
    return DependenceReport(
        overall=measure(model, "M"),
        one_sided={k: measure(model, k) for k in ONE_SIDED},
        bipartite={k: measure(model, k) for k in BIPARTITE},
        partial=not model.is_complete,
    )


# ---------------------------------------------------------------------------
# completion of partial models

@dataclass(frozen=True)
class CompletionResult:
    feasible: bool
    witness: Optional[MDLModel]
    missing: Tuple[Context, ...]
    reason: str = ""

    def to_json(self):
        out = {
            "feasible": self.feasible,
            "missing": [str(c) for c in self.missing],
            "reason": self.reason,
        }
        if self.witness is not None:
            out["witness"] = {
                str(c): [fmt_number(v) for v in vec] for c, vec in self.witness.distributions.items()
            }
        return out


def _norm_budgets(budgets) -> Dict[str, Fraction]:
    items = budgets.items() if isinstance(budgets, Mapping) else budgets
    out: Dict[str, Fraction] = {}
    for k, v in items:
        if k not in MEASURE_IDS:
            raise ModelError(f"unknown measure {k!r}")
        v = to_number(v)
        if not is_exact(v):
            v = Fraction(v)
        if not 0 <= v <= 2:
            raise ModelError(f"budget {k}={v} is outside [0, 2]")
        out[k] = min(out.get(k, v), v)
    return out


def complete_contexts(model: MDLModel, budgets) -> CompletionResult:
    """Can the missing full contexts be filled in within the given budgets?

    The response table is held fixed; the unknowns are the probability
    vectors of the absent full contexts.  Each listed measure must be at most
    its budget over all pairs of full contexts (given or new).  Decided by an
    exact LP; a feasible answer carries a completed model as witness.
    """
    bud = _norm_budgets(budgets)
    missing = tuple(c for c in FULL_CONTEXTS if c not in model.distributions)
    L = model.L
    given = {c: tuple(Fraction(v) for v in model.rho(c)) for c in FULL_CONTEXTS if c not in missing}

    for mid, m in bud.items():
        for s, t in measure_pairs(mid):
            if s in given and t in given and l1_distance(given[s], given[t]) > m:
                return CompletionResult(
                    False, None, missing,
                    f"given contexts {s} and {t} are already at distance "
                    f"{fmt_number(l1_distance(given[s], given[t]))} > {mid} budget {fmt_number(m)}",
                )
    if not missing:
        return CompletionResult(True, model, missing, "model already complete")

    lp = LinearProgram()
    var = {c: [lp.add_var(f"rho({c})[{l + 1}]") for l in range(L)] for c in missing}
    for c in missing:
        lp.add_row({v: 1 for v in var[c]}, "=", 1)

    def term(c, l):
        # (coeffs, constant) for rho(l|c)
        if c in var:
            return {var[c][l]: Fraction(1)}, Fraction(0)
        return {}, given[c][l]

    for mid, m in bud.items():
        for s, t in measure_pairs(mid):
            if s in given and t in given:
                continue
            aux = []
            for l in range(L):
                a = lp.add_var(f"t[{mid},{s},{t},{l + 1}]")
                aux.append(a)
                cs, ks = term(s, l)
                ct, kt = term(t, l)
                # +-(rho_s - rho_t) - a <= 0
                for sg in (1, -1):
                    row = {a: Fraction(-1)}
                    for j, v in cs.items():
                        row[j] = row.get(j, 0) + sg * v
                    for j, v in ct.items():
                        row[j] = row.get(j, 0) - sg * v
                    lp.add_row(row, "<=", -sg * (ks - kt))
            lp.add_row({a: 1 for a in aux}, "<=", m)
    try:
        _, sol = solve_exact(lp)
    except LPInfeasible:
        return CompletionResult(False, None, missing, "no completion satisfies the budgets")
    x = sol.x
    if sol.mode == "real":
        # the certificate passed, so the rounded vector is exactly feasible
        x = [Fraction(v).limit_denominator(10**6) for v in x]
    dist = dict(model.distributions)
    for c in missing:
        dist[c] = tuple(Fraction(x[v]) for v in var[c])
    witness = build_model(model.responses, dist, (model.label + " (completed)").strip())
    return CompletionResult(True, witness, missing, "")
