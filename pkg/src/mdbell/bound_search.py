"""LP search for the largest |S| a fixed deterministic strategy reaches.

For a fixed response table the value S is linear in the setting-conditioned
distributions rho(.|s), and every dependence budget is a set of linear
constraints once each |rho(l|s) - rho(l|s')| is replaced by an auxiliary
variable.  So the largest |S| compatible with a budget is two LPs (one per
sign of S).  Enumerating all strategies up to a small number L of hidden
variables then tests a relaxed bound exhaustively at that L.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .dependence import MEASURE_IDS, measure_pairs
from .inequalities import InequalitySpec, Kind, RelaxationScenario, Shape, get_spec, relaxed_bound
from .lp import LinearProgram, simplex_solve, solve_exact
from .scenario import FULL_CONTEXTS, Context, Pairing, ResponseTable, fmt_number, is_exact

L_CAP = 3
REAL_TOL = 1e-9
SCHEMA_VERSION = "1"


class BoundViolation(AssertionError):
    """A strategy exceeds the relaxed bound; carries the certificate."""

    def __init__(self, certificate: "BoundCertificate"):
        self.certificate = certificate
        super().__init__(
            f"{certificate.kind.value} {certificate.scenario.shape}: lp_max_S = "
            f"{fmt_number(certificate.lp_max_S)} > bound {fmt_number(certificate.bound)} "
            f"at budgets {certificate.scenario.to_json()['budgets']} for strategy "
            f"{json.dumps(certificate.strategy.to_json())}"
        )


def check_pairing(kind: Kind, pairing: Pairing) -> None:
    if kind in (Kind.MERMIN, Kind.NS2) and pairing is not Pairing.FULLY_LOCAL:
        raise ValueError(f"{kind.value} strategies must use the FullyLocal pairing")


# ---------------------------------------------------------------------------
# the LP

@dataclass
class Program:
    lp: LinearProgram
    rho: Dict[Context, List[int]]
    terms: List[Tuple[Context, int]]


def build_program(strategy: ResponseTable, kind, scenario: RelaxationScenario,
                  direction: int = 1, strict: bool = True) -> Program:
    """LP maximising ``direction * S`` over the distributions.

    Variables are rho(l|s) for all eight full contexts and, for NS2, for its
    pair contexts.  With ``strict`` a pair-context vector must equal the
    vector of every full context extending it; without it the pair blocks
    are free.
    """
    spec = get_spec(kind)
    check_pairing(spec.kind, strategy.pairing)
    L = strategy.L
    lp = LinearProgram()
    ctxs = list(FULL_CONTEXTS) + [c for c in spec.contexts if not c.is_full]
    rho = {c: [lp.add_var(f"rho({c})[{l + 1}]") for l in range(L)] for c in ctxs}
    for c in ctxs:
        lp.add_row({v: 1 for v in rho[c]}, "=", 1)
    if strict:
        for c in ctxs:
            if c.is_full:
                continue
            for f in FULL_CONTEXTS:
                if f.extends(c):
                    for l in range(L):
                        lp.add_row({rho[c][l]: 1, rho[f][l]: -1}, "=", 0)
    for mid in MEASURE_IDS:
        m = scenario.budgets.get(mid)
        if m is None or m >= 2:
            continue
        m = Fraction(m)
        for s, t in measure_pairs(mid):
            aux = []
            for l in range(L):
                a = lp.add_var(f"t[{mid},{s},{t}][{l + 1}]")
                aux.append(a)
                lp.add_row({rho[s][l]: 1, rho[t][l]: -1, a: -1}, "<=", 0)
                lp.add_row({rho[s][l]: -1, rho[t][l]: 1, a: -1}, "<=", 0)
            lp.add_row({a: 1 for a in aux}, "<=", m)
    obj: Dict[int, int] = {}
    for c, sg in spec.terms:
        for l in range(L):
            v = rho[c][l]
            obj[v] = obj.get(v, 0) + direction * sg * strategy.sign(l, c)
    lp.set_objective(obj)
    return Program(lp, rho, list(spec.terms))


def strategy_upper_bound(strategy: ResponseTable, kind, direction: int = 1) -> int:
    """Sum over terms of the best sign any hidden variable offers; caps the LP.

    ``direction=0`` caps the compared quantity (|S|, or S for one-sided
    expressions).
    """
    spec = get_spec(kind)
    if direction == 0:
        dirs = (1, -1) if spec.two_sided else (1,)
        return max(strategy_upper_bound(strategy, kind, d) for d in dirs)
    return sum(max(direction * sg * strategy.sign(l, c) for l in range(strategy.L)) for c, sg in spec.terms)


@dataclass(frozen=True)
class BoundCertificate:
    strategy: ResponseTable
    kind: Kind
    scenario: RelaxationScenario
    lp_max_S: object
    bound: object
    sound: bool
    tight: bool
    direction: int
    witness: Optional[Mapping[Context, Tuple]] = None
    mode: str = "exact"
    strict: bool = True

    def to_json(self):
        def enc(v):
            return fmt_number(v) if isinstance(v, Fraction) else float(v)

        out = {
            "schema_version": SCHEMA_VERSION,
            "inequality": self.kind.value,
            "scenario": str(self.scenario.shape),
            "budgets": {k: enc(v) for k, v in self.scenario.budgets.items()},
            "strategy": self.strategy.to_json(),
            "lp_max_S": enc(self.lp_max_S),
            "bound": enc(self.bound),
            "sound": self.sound,
            "tight": self.tight,
            "sign_of_S": self.direction,
            "mode": self.mode,
            "strict_pairs": self.strict,
        }
        if self.witness is not None:
            out["witness"] = {str(c): [enc(v) for v in vec] for c, vec in self.witness.items()}
        return out


def _solve(program: Program, mode: str):
    if mode == "exact":
        val, sol = solve_exact(program.lp)
        x = sol.x
        if sol.mode == "real":
            x = [Fraction(v).limit_denominator(10**6) for v in x]
        return val, x
    sol = simplex_solve(program.lp, "real")
    return sol.value, sol.x


def _compare(value, bound):
    if is_exact(value) and is_exact(bound):
        return value <= bound, value == bound
    return value <= bound + REAL_TOL, abs(value - bound) <= REAL_TOL


def lp_max_S(strategy: ResponseTable, kind, scenario: RelaxationScenario, mode: str = "exact",
             strict: bool = True, lower: Optional[object] = None) -> BoundCertificate:
    """Largest |S| of ``strategy`` over distributions within the budgets.

    For a one-sided expression (NS2) the largest signed S is returned.

    ``lower`` is an optional value already known to be reachable elsewhere;
    a direction whose combinatorial cap does not exceed it is skipped.
    """
    spec = get_spec(kind)
    best, best_dir, best_x, best_prog = None, 1, None, None
    for direction in ((1, -1) if spec.two_sided else (1,)):
        cap = strategy_upper_bound(strategy, spec.kind, direction)
        floor = best if lower is None else (lower if best is None else max(best, lower))
        if floor is not None and cap <= floor and best is not None:
            continue
        prog = build_program(strategy, spec.kind, scenario, direction, strict)
        val, x = _solve(prog, mode)
        if best is None or val > best:
            best, best_dir, best_x, best_prog = val, direction, x, prog
    bound = relaxed_bound(spec.kind, scenario)
    if mode == "real":
        bound = float(bound)
    sound, tight = _compare(best, bound)
    witness = {c: tuple(best_x[v] for v in vs) for c, vs in best_prog.rho.items()}
    return BoundCertificate(strategy, spec.kind, scenario, best, bound, sound, tight, best_dir,
                            witness, mode, strict)


# ---------------------------------------------------------------------------
# enumeration

ALPHABET: Tuple[Tuple[int, ...], ...] = tuple(itertools.product((1, -1), repeat=6))


def _term_factor(pairing: Pairing, g: Sequence[int], ctx: Context) -> int:
    return ResponseTable(pairing, (tuple(g),)).sign(0, ctx)


def flip_group(pairing: Pairing, kind=None) -> Tuple[Tuple[int, ...], ...]:
    """Column sign flips that leave |S| of every strategy unchanged.

    With ``kind`` the group is every flip of the six response columns under
    which all terms of that expression pick up one common sign (for a
    one-sided expression, the sign +1).  Without it
    the group is generated by flipping a whole party (or joint block).
    """
    if kind is None:
        if pairing is Pairing.FULLY_LOCAL:
            gens = [(a, a, b, b, c, c) for a in (1, -1) for b in (1, -1) for c in (1, -1)]
        else:
            gens = [(j, j, j, j, t, t) for j in (1, -1) for t in (1, -1)]
        return tuple(sorted(set(gens), reverse=True))
    spec = get_spec(kind)
    out = []
    for g in ALPHABET:
        try:
            f = {_term_factor(pairing, g, c) for c in spec.contexts}
        except ValueError:
            return ((1,) * 6,)
        if f == {1} or (len(f) == 1 and spec.two_sided):
            out.append(g)
    return tuple(out)


def canonical_form(rows: Sequence[Sequence[int]], group) -> Tuple[Tuple[int, ...], ...]:
    best = None
    for g in group:
        cand = tuple(sorted(tuple(a * b for a, b in zip(g, r)) for r in rows))
        if best is None or cand < best:
            best = cand
    return best


@dataclass
class StrategyEnumeration:
    pairing: Pairing
    L: int
    kind: Optional[Kind]
    group: Tuple[Tuple[int, ...], ...]
    tables: List[ResponseTable]

    @property
    def raw_count(self) -> int:
        return len(ALPHABET) ** self.L

    @property
    def count(self) -> int:
        return len(self.tables)

    def __iter__(self) -> Iterator[ResponseTable]:
        return iter(self.tables)

    def __len__(self):
        return len(self.tables)


def enumerate_strategies(pairing: Pairing, L: int, kind=None, quotient: bool = True) -> StrategyEnumeration:
    """All response tables with L hidden variables, up to symmetry.

    The quotient identifies tables related by a permutation of hidden
    variable labels or by a flip from :func:`flip_group`.  With
    ``quotient=False`` all 64**L raw tables are produced.
    """
    if L < 1 or L > L_CAP:
        raise ValueError(f"exhaustive enumeration is capped at L <= {L_CAP}, got L={L}")
    kind = None if kind is None else Kind.parse(kind)
    group = flip_group(pairing, kind)
    tables = []
    if not quotient:
        for rows in itertools.product(ALPHABET, repeat=L):
            tables.append(ResponseTable(pairing, rows))
    else:
        for rows in itertools.combinations_with_replacement(sorted(ALPHABET), L):
            if canonical_form(rows, group) == rows:
                tables.append(ResponseTable(pairing, rows))
    return StrategyEnumeration(pairing, L, kind, group, tables)


# ---------------------------------------------------------------------------
# soundness sweep

@dataclass
class GridPoint:
    budget: object
    scenario: RelaxationScenario
    bound: object
    max_S: object = None
    witness: Optional[ResponseTable] = None
    witness_index: int = -1
    lp_solved: int = 0
    skipped: int = 0

    @property
    def tight(self) -> bool:
        return self.max_S is not None and _compare(self.max_S, self.bound)[1]

    @property
    def sound(self) -> bool:
        return self.max_S is None or _compare(self.max_S, self.bound)[0]

    def to_json(self):
        def enc(v):
            if v is None:
                return None
            return fmt_number(v) if isinstance(v, Fraction) else float(v)

        return {
            "budget": enc(self.budget),
            "budgets": {k: enc(v) for k, v in self.scenario.budgets.items()},
            "bound": enc(self.bound),
            "max_S": enc(self.max_S),
            "sound": self.sound,
            "tight": self.tight,
            "witness": None if self.witness is None else self.witness.to_json(),
            "lp_solved": self.lp_solved,
            "skipped": self.skipped,
        }


@dataclass
class SoundnessSummary:
    kind: Kind
    shape: Shape
    L: int
    pairing: Pairing
    budget_mode: str
    mode: str
    strict: bool
    raw_count: int
    strategy_count: int
    points: List[GridPoint]
    violations: List[BoundCertificate] = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return not self.violations and all(p.sound for p in self.points)

    def to_json(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "inequality": self.kind.value,
            "scenario": str(self.shape),
            "L": self.L,
            "pairing": self.pairing.value,
            "budget_mode": self.budget_mode,
            "mode": self.mode,
            "strict_pairs": self.strict,
            "raw_strategies": self.raw_count,
            "canonical_strategies": self.strategy_count,
            "sound": self.sound,
            "points": [p.to_json() for p in self.points],
            "violations": [v.to_json() for v in self.violations],
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps({k: v for k, v in self.to_json().items() if k not in ("points", "violations")})]
        lines += [json.dumps(dict(p.to_json(), record="point")) for p in self.points]
        lines += [json.dumps(dict(v.to_json(), record="violation")) for v in self.violations]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["budget", "max_S", "bound"])
        for p in self.points:
            w.writerow([fmt_number(p.budget), fmt_number(p.max_S) if p.max_S is not None else "",
                        fmt_number(p.bound)])
        return buf.getvalue()


def make_scenario(shape: Shape, m, budget_mode: str) -> RelaxationScenario:
    if budget_mode == "uniform":
        return RelaxationScenario.uniform(shape, m)
    if budget_mode == "single":
        return RelaxationScenario.single(shape, m)
    raise ValueError(f"budget mode must be 'uniform' or 'single', got {budget_mode!r}")


def _scan(args):
    """Worker: scan a contiguous slice of strategies; returns per-point results."""
    (kind, shape, grid, budget_mode, mode, strict, prune, start, tables, stop) = args
    scen = [make_scenario(shape, m, budget_mode) for m in grid]
    bounds = [relaxed_bound(kind, s) if mode == "exact" else float(relaxed_bound(kind, s)) for s in scen]
    order = sorted(range(len(grid)), key=lambda i: grid[i], reverse=True)
    best = [None] * len(grid)
    wit = [-1] * len(grid)
    solved = [0] * len(grid)
    skipped = [0] * len(grid)
    violations = []
    for off, strat in enumerate(tables):
        cap = strategy_upper_bound(strat, kind, 0)
        for i in order:
            if prune and best[i] is not None and cap <= bounds[i] and cap <= best[i]:
                skipped[i] += 1
                continue
            cert = lp_max_S(strat, kind, scen[i], mode, strict)
            solved[i] += 1
            v = cert.lp_max_S
            cap = v
            if best[i] is None or v > best[i]:
                best[i], wit[i] = v, start + off
            if not cert.sound:
                violations.append(cert)
                if stop:
                    return best, wit, solved, skipped, violations
    return best, wit, solved, skipped, violations


def verify_bound_soundness(kind, shape, L: int, grid: Sequence, *, pairing: Pairing = Pairing.FULLY_LOCAL,
                           mode: str = "exact", strict: bool = True, budget_mode: str = "uniform",
                           prune: bool = True, workers: int = 1, stop_on_violation: bool = True,
                           strategies: Optional[Sequence[ResponseTable]] = None) -> SoundnessSummary:
    """Check lp_max_S <= relaxed_bound for every strategy and grid budget.

    ``budget_mode="uniform"`` gives every measure of the shape's family the
    grid value; ``"single"`` budgets only the shape's own measure.  Pruning
    skips an LP when a cap on the strategy's value (its combinatorial bound,
    then its LP value at the next larger budget) already sits at or below
    both the bound and the best value found so far; results are unchanged.
    A violation raises :class:`BoundViolation` unless ``stop_on_violation``
    is false, in which case violations are collected in the summary.
    """
    kind = Kind.parse(kind)
    shape = Shape.parse(shape) if isinstance(shape, str) else shape
    check_pairing(kind, pairing)
    grid = [Fraction(m) if not isinstance(m, float) else m for m in grid]
    if not grid:
        raise ValueError("budget grid is empty")
    if strategies is None:
        enum_ = enumerate_strategies(pairing, L, kind)
        tables, raw = list(enum_), enum_.raw_count
    else:
        tables, raw = list(strategies), len(strategies)
    # strongest candidates first so pruning bites early; ties keep enumeration order
    caps = [strategy_upper_bound(t, kind, 0) for t in tables]
    tables = [t for _, _, t in sorted(zip((-c for c in caps), range(len(tables)), tables), key=lambda z: z[:2])]

    if workers <= 1:
        chunks = [(kind, shape, grid, budget_mode, mode, strict, prune, 0, tables, stop_on_violation)]
        results = [_scan(chunks[0])]
    else:
        n = max(1, -(-len(tables) // (workers * 4)))
        chunks = [(kind, shape, grid, budget_mode, mode, strict, prune, s, tables[s:s + n], stop_on_violation)
                  for s in range(0, len(tables), n)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan, chunks))

    points = []
    for i, m in enumerate(grid):
        scen = make_scenario(shape, m, budget_mode)
        b = relaxed_bound(kind, scen)
        pt = GridPoint(m, scen, b if mode == "exact" else float(b))
        for best, wit, solved, skipped, _ in results:
            pt.lp_solved += solved[i]
            pt.skipped += skipped[i]
            v = best[i]
            if v is None:
                continue
            if pt.max_S is None or v > pt.max_S or (v == pt.max_S and wit[i] < pt.witness_index):
                pt.max_S, pt.witness_index = v, wit[i]
        if pt.witness_index >= 0:
            pt.witness = tables[pt.witness_index]
        points.append(pt)
    violations = [v for r in results for v in r[4]]
    summary = SoundnessSummary(kind, shape, L, pairing, budget_mode, mode, strict, raw, len(tables),
                               points, violations)
    if violations and stop_on_violation:
        err = BoundViolation(violations[0])
        err.summary = summary
        raise err
    return summary
