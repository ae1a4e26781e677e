"""Two-phase tableau simplex over exact rationals or 64-bit floats.

Problems are stated as

    maximize c.x  subject to  rows (<= or =),  x >= 0

with rational data.  ``mode="exact"`` pivots on ``Fraction`` rows (sparse
row updates); ``mode="real"`` pivots a dense numpy tableau with 1e-9
tolerances.  Dantzig's rule is used until a run of degenerate pivots is seen,
after which Bland's rule takes over for the rest of the solve, so the
method cannot cycle.

:func:`certify` turns a real-mode solution into an exact optimum by rounding
the primal and dual vectors to nearby rationals and checking feasibility and
zero duality gap in exact arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

REAL_TOL = 1e-9


class LPError(RuntimeError):
    pass


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


class LPIterationLimit(LPError):
    pass


@dataclass
class Row:
    coeffs: Dict[int, Fraction]
    sense: str  # "<=" or "="
    rhs: Fraction


@dataclass
class LinearProgram:
    """Sparse LP in maximisation form; every variable is >= 0."""

    n: int = 0
    c: Dict[int, Fraction] = field(default_factory=dict)
    rows: List[Row] = field(default_factory=list)
    names: List[str] = field(default_factory=list)

    def add_var(self, name: str = "", obj=0) -> int:
        self.names.append(name or f"v{self.n}")
        self.n += 1
        if obj:
            self.c[self.n - 1] = Fraction(obj)
        return self.n - 1

    def add_row(self, coeffs: Dict[int, object], sense: str, rhs) -> None:
        if sense not in ("<=", "="):
            raise ValueError(f"unsupported sense {sense!r}")
        cf = {}
        for j, v in coeffs.items():
            if not 0 <= j < self.n:
                raise ValueError(f"column {j} out of range")
            v = Fraction(v)
            if v:
                cf[j] = v
        self.rows.append(Row(cf, sense, Fraction(rhs)))

    def set_objective(self, coeffs: Dict[int, object]) -> None:
        self.c = {j: Fraction(v) for j, v in coeffs.items() if v}

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), self.n

    def iteration_cap(self) -> int:
        m, n = self.shape
        return 10 * (m + n) ** 2


@dataclass
class LPSolution:
    value: object
    x: List[object]
    y: List[object]  # one dual per row; >= 0 on "<=" rows
    iterations: int
    mode: str


# ---------------------------------------------------------------------------
# standard form

@dataclass
class _Std:
    m: int
    ncols: int
    n: int
    rows: List[Dict[int, Fraction]]
    rhs: List[Fraction]
    basis: List[int]
    art: List[int]           # artificial column per row or -1
    dual_col: List[int]      # column whose final obj coefficient gives the dual
    dual_sign: List[int]


def _standardize(lp: LinearProgram) -> _Std:
    n = lp.n
    rows, rhs, basis, art, dcol, dsign = [], [], [], [], [], []
    col = n
    for r in lp.rows:
        neg = r.rhs < 0
        cf = {j: (-v if neg else v) for j, v in r.coeffs.items()}
        b = -r.rhs if neg else r.rhs
        if r.sense == "<=":
            if not neg:
                cf[col] = Fraction(1)
                basis.append(col)
                art.append(-1)
                dcol.append(col)
                dsign.append(1)
                col += 1
            else:
                cf[col] = Fraction(-1)
                dcol.append(col)
                dsign.append(1)
                cf[col + 1] = Fraction(1)
                basis.append(col + 1)
                art.append(col + 1)
                col += 2
        else:
            cf[col] = Fraction(1)
            basis.append(col)
            art.append(col)
            dcol.append(col)
            dsign.append(-1 if neg else 1)
            col += 1
        rows.append(cf)
        rhs.append(b)
    return _Std(len(rows), col, n, rows, rhs, basis, art, dcol, dsign)


# ---------------------------------------------------------------------------
# exact engine

class _ExactTableau:
    def __init__(self, std: _Std):
        self.ncols = std.ncols
        self.T = []
        for cf, b in zip(std.rows, std.rhs):
            row = [Fraction(0)] * (std.ncols + 1)
            for j, v in cf.items():
                row[j] = v
            row[-1] = b
            self.T.append(row)
        self.obj = [Fraction(0)] * (std.ncols + 1)

    def col(self, j):
        return [r[j] for r in self.T]

    def pivot(self, r, j):
        prow = self.T[r]
        pv = prow[j]
        if pv != 1:
            inv = 1 / pv
            for k in range(len(prow)):
                if prow[k]:
                    prow[k] *= inv
        nz = [k for k, v in enumerate(prow) if v]
        for i, row in enumerate(self.T):
            if i == r:
                continue
            f = row[j]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        f = self.obj[j]
        if f:
            for k in nz:
                self.obj[k] -= f * prow[k]

    def delete_row(self, r):
        del self.T[r]

    def is_pos(self, v):
        return v > 0

    def is_neg(self, v):
        return v < 0

    def nonzero(self, v):
        return v != 0


class _RealTableau:
    def __init__(self, std: _Std):
        self.ncols = std.ncols
        T = np.zeros((std.m, std.ncols + 1))
        for i, (cf, b) in enumerate(zip(std.rows, std.rhs)):
            for j, v in cf.items():
                T[i, j] = float(v)
            T[i, -1] = float(b)
        self.T = T
        self.obj = np.zeros(std.ncols + 1)

    def col(self, j):
        return self.T[:, j]

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        colv = T[:, j].copy()
        colv[r] = 0.0
        nzr = np.nonzero(colv)[0]
        if len(nzr):
            T[nzr] -= np.outer(colv[nzr], T[r])
        f = self.obj[j]
        if f:
            self.obj -= f * T[r]
        # clean round-off
        T[np.abs(T) < 1e-13] = 0.0
        self.obj[np.abs(self.obj) < 1e-13] = 0.0

    def delete_row(self, r):
        self.T = np.delete(self.T, r, axis=0)

    def is_pos(self, v):
        return v > REAL_TOL

    def is_neg(self, v):
        return v < -REAL_TOL

    def nonzero(self, v):
        return abs(v) > REAL_TOL


def _run(tab, basis, allowed, cap, counter) -> None:
    """Optimise the current objective row; ``allowed[j]`` marks enterable columns."""
    bland = False
    streak = 0
    m = len(basis)
    while True:
        obj = tab.obj
        if bland:
            enter = next((j for j in range(tab.ncols) if allowed[j] and tab.is_neg(obj[j])), -1)
        else:
            enter, best = -1, 0
            for j in range(tab.ncols):
                v = obj[j]
                if allowed[j] and tab.is_neg(v) and (enter < 0 or v < best):
                    enter, best = j, v
        if enter < 0:
            return
        colv = tab.col(enter)
        leave, ratio = -1, None
        for i in range(m):
            a = colv[i]
            if tab.is_pos(a):
                q = tab.T[i][-1] / a
                if (leave < 0 or q < ratio - (0 if isinstance(q, Fraction) else REAL_TOL)
                        or (_tie(q, ratio) and basis[i] < basis[leave])):
                    leave, ratio = i, q
        if leave < 0:
            raise LPUnbounded("objective is unbounded")
        counter[0] += 1
        if counter[0] > cap:
            raise LPIterationLimit(f"iteration cap {cap} exceeded")
        if tab.nonzero(ratio):
            streak = 0
        else:
            streak += 1
            if streak > m:
                bland = True
        tab.pivot(leave, enter)
        basis[leave] = enter


def _tie(q, ratio):
    if isinstance(q, Fraction):
        return q == ratio
    return abs(q - ratio) <= REAL_TOL


def simplex_solve(lp: LinearProgram, mode: str = "exact") -> LPSolution:
    """Maximise ``lp``; raises LPInfeasible, LPUnbounded or LPIterationLimit."""
    if mode not in ("exact", "real"):
        raise ValueError(f"mode must be 'exact' or 'real', got {mode!r}")
    std = _standardize(lp)
    tab = _ExactTableau(std) if mode == "exact" else _RealTableau(std)
    zero = Fraction(0) if mode == "exact" else 0.0
    basis = list(std.basis)
    art_rows = list(std.art)
    is_art = [False] * std.ncols
    for a in std.art:
        if a >= 0:
            is_art[a] = True
    cap = lp.iteration_cap()
    counter = [0]

    # phase 1: maximise -sum(artificials)
    if any(is_art):
        for j in range(std.ncols):
            tab.obj[j] = 1 if is_art[j] else 0
        tab.obj[-1] = zero
        for i, a in enumerate(art_rows):
            if a >= 0:
                row = tab.T[i]
                for k in range(std.ncols + 1):
                    if row[k]:
                        tab.obj[k] -= row[k]
        _run(tab, basis, [True] * std.ncols, cap, counter)
        if tab.is_neg(tab.obj[-1]):
            raise LPInfeasible("no feasible point")
        # drive zero-level artificials out of the basis; drop redundant rows
        i = 0
        while i < len(basis):
            if is_art[basis[i]]:
                row = tab.T[i]
                j = next((j for j in range(std.ncols) if not is_art[j] and tab.nonzero(row[j])), -1)
                if j >= 0:
                    tab.pivot(i, j)
                    basis[i] = j
                else:
                    tab.delete_row(i)
                    del basis[i]
                    continue
            i += 1

    # phase 2
    for k in range(std.ncols + 1):
        tab.obj[k] = zero
    for j, v in lp.c.items():
        tab.obj[j] = -v if mode == "exact" else -float(v)
    for i, b in enumerate(basis):
        cb = tab.obj[b]
        if cb:
            row = tab.T[i]
            for k in range(std.ncols + 1):
                if row[k]:
                    tab.obj[k] -= cb * row[k]
    allowed = [not a for a in is_art]
    _run(tab, basis, allowed, cap, counter)

    x = [zero] * std.ncols
    for i, b in enumerate(basis):
        x[b] = tab.T[i][-1]
    y = [tab.obj[c] * s for c, s in zip(std.dual_col, std.dual_sign)]
    value = tab.obj[-1]
    if mode == "real":
        x = [float(v) for v in x]
        y = [float(v) for v in y]
        value = float(value)
    return LPSolution(value, x[: lp.n], y, counter[0], mode)


# ---------------------------------------------------------------------------
# certification and duality

def _round(v, max_den):
    return Fraction(v).limit_denominator(max_den)


def certify(lp: LinearProgram, sol: LPSolution, max_den: int = 10**6) -> Optional[Fraction]:
    """Exact optimum from an approximate primal/dual pair, or None.

    Rounds both vectors to rationals with denominator <= ``max_den`` and
    checks primal feasibility, dual feasibility and equal objective values,
    all in exact arithmetic.  A returned value is a proof of optimality.
    """
    x = [_round(v, max_den) for v in sol.x]
    y = [_round(v, max_den) for v in sol.y]
    if any(v < 0 for v in x):
        return None
    for r, yi in zip(lp.rows, y):
        lhs = sum((v * x[j] for j, v in r.coeffs.items()), Fraction(0))
        if r.sense == "=" and lhs != r.rhs:
            return None
        if r.sense == "<=" and (lhs > r.rhs or yi < 0):
            return None
    reduced = [Fraction(0)] * lp.n
    for r, yi in zip(lp.rows, y):
        if yi:
            for j, v in r.coeffs.items():
                reduced[j] += yi * v
    for j in range(lp.n):
        if reduced[j] < lp.c.get(j, 0):
            return None
    primal = sum((v * x[j] for j, v in lp.c.items()), Fraction(0))
    dual = sum((yi * r.rhs for r, yi in zip(lp.rows, y)), Fraction(0))
    return primal if primal == dual else None


def solve_exact(lp: LinearProgram) -> Tuple[Fraction, LPSolution]:
    """Exact optimum: real solve plus certificate, exact pivoting as fallback."""
    try:
        sol = simplex_solve(lp, "real")
    except (LPInfeasible, LPUnbounded, LPIterationLimit):
        sol = None
    if sol is not None:
        val = certify(lp, sol)
        if val is not None:
            return val, sol
    sol = simplex_solve(lp, "exact")
    return sol.value, sol


def dual_program(lp: LinearProgram) -> LinearProgram:
    """The LP dual, written again as a maximisation.

    Primal: max c.x, A_le x <= b_le, A_eq x = b_eq, x >= 0.
    Dual:   min b.y, A^T y >= c, y_le >= 0, y_eq free; returned as
            max -b.y with y_eq split into two nonnegative parts.
    Its optimum is the negated primal optimum.
    """
    d = LinearProgram()
    cols = []
    for i, r in enumerate(lp.rows):
        if r.sense == "<=":
            cols.append([(d.add_var(f"y{i}", -r.rhs), 1)])
        else:
            p = d.add_var(f"y{i}+", -r.rhs)
            q = d.add_var(f"y{i}-", r.rhs)
            cols.append([(p, 1), (q, -1)])
    at: List[Dict[int, Fraction]] = [dict() for _ in range(lp.n)]
    for i, r in enumerate(lp.rows):
        for j, v in r.coeffs.items():
            for k, s in cols[i]:
                at[j][k] = at[j].get(k, 0) - s * v
    for j in range(lp.n):
        d.add_row(at[j], "<=", -lp.c.get(j, 0))
    return d
