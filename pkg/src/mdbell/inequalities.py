"""Mermin, Svetlichny and NS2 (#99) expressions and their relaxed bounds.

Relaxed bounds under measurement dependence (unbudgeted measures count as 2,
the result is clamped to [classical bound, algebraic maximum]):

    Mermin,     one-sided  2 + min{2, 2M1+M2, 2M1+M3, 2M2+M3, 2M2+M1, 2M3+M2, 2M3+M1}
    Svetlichny, one-sided  4 + min{4, 2M1, 2M2, 2M3}
    NS2,        one-sided  C: 3 + M3,  A: 3 + 2M1 + M3,  B: 3 + 2M2 + M3
    Mermin,     bipartite  2 + min{M12, M23, M13}
    Svetlichny, bipartite  4 + min{4, 2M12, 2M23, 2M13}

The NS2 facet bounds S from above only: local deterministic strategies
reach S = -5, so its bounds are compared with signed S rather than |S|.

For Mermin the derivation also has a branch with |S| <= 6 + M2, which only
arises when an outcome depends on a remote setting.  That branch signals and
is deliberately not offered as a bound mode.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple

from .dependence import (
    BIPARTITE, MEASURE_IDS, ONE_SIDED, bipartite_id, complete_contexts, dependence_report,
    one_sided_id,
)
from .scenario import (
    PARTIES, Context, MDLModel, ModelError, Number, correlator, fmt_number, is_exact, to_number,
)

REAL_TOL = 1e-9


class Kind(enum.Enum):
    MERMIN = "mermin"
    SVETLICHNY = "svetlichny"
    NS2 = "ns2"

    @classmethod
    def parse(cls, text) -> "Kind":
        if isinstance(text, Kind):
            return text
        t = str(text).strip().lower().replace("_", "").replace("-", "")
        for k in cls:
            if t in (k.value, k.name.lower(), "ns299" if k is Kind.NS2 else k.value):
                return k
        raise ValueError(f"unknown inequality {text!r}")


@dataclass(frozen=True)
class InequalitySpec:
    kind: Kind
    terms: Tuple[Tuple[Context, int], ...]
    classical_bound: Fraction
    quantum_ghz_value: float
    algebraic_max: Fraction
    two_sided: bool = True

    def bound_value(self, S):
        """Quantity compared with bounds: |S| for two-sided expressions, S otherwise."""
        return abs(S) if self.two_sided else S

    @property
    def contexts(self) -> Tuple[Context, ...]:
        return tuple(c for c, _ in self.terms)


MERMIN = InequalitySpec(
    Kind.MERMIN,
    ((Context(1, 0, 0), 1), (Context(0, 1, 0), 1), (Context(0, 0, 1), 1), (Context(1, 1, 1), -1)),
    Fraction(2), 4.0, Fraction(4),
)

SVETLICHNY = InequalitySpec(
    Kind.SVETLICHNY,
    tuple(
        (Context(x, y, z), 1 if x + y + z <= 1 else -1)
        for x in (0, 1) for y in (0, 1) for z in (0, 1)
    ),
    Fraction(4), 4 * math.sqrt(2), Fraction(8),
)

NS2_99 = InequalitySpec(
    Kind.NS2,
    (
        (Context(0, 0, None), 1),
        (Context(0, None, 0), 1),
        (Context(None, 0, 1), 1),
        (Context(1, 1, 0), -1),
        (Context(1, 1, 1), 1),
    ),
    Fraction(3), 1 + 2 * math.sqrt(2), Fraction(5),
    two_sided=False,
)

SPECS = {Kind.MERMIN: MERMIN, Kind.SVETLICHNY: SVETLICHNY, Kind.NS2: NS2_99}


def get_spec(kind) -> InequalitySpec:
    return SPECS[Kind.parse(kind)]


# ---------------------------------------------------------------------------
# relaxation scenarios

@dataclass(frozen=True)
class Shape:
    """``one-sided`` with a party (A, B, C) or ``bipartite`` with a pair (AB, BC, AC)."""

    kind: str
    target: str

    def __post_init__(self):
        if self.kind == "one-sided":
            if self.target not in PARTIES:
                raise ValueError(f"one-sided shape needs a party A, B or C, got {self.target!r}")
        elif self.kind == "bipartite":
            if self.target not in ("AB", "BC", "AC"):
                raise ValueError(f"bipartite shape needs AB, BC or AC, got {self.target!r}")
        else:
            raise ValueError(f"unknown shape {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Shape":
        try:
            kind, target = text.strip().split(":")
        except ValueError:
            raise ValueError(f"scenario must look like one-sided:A or bipartite:AB, got {text!r}") from None
        target = target.strip().upper()
        if target in ("BA", "CB", "CA"):
            target = target[::-1]
        return cls(kind.strip().lower(), target)

    @property
    def measure_id(self) -> str:
        if self.kind == "one-sided":
            return one_sided_id(self.target)
        return bipartite_id(self.target)

    @property
    def family(self) -> Tuple[str, ...]:
        return ONE_SIDED if self.kind == "one-sided" else BIPARTITE

    def __str__(self):
        return f"{self.kind}:{self.target}"


def _budget(v) -> Number:
    v = to_number(v)
    if not 0 <= v <= 2:
        raise ValueError(f"budget {v} is outside [0, 2]")
    return v


@dataclass(frozen=True)
class RelaxationScenario:
    shape: Shape
    budgets: Mapping[str, Number] = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.shape, str):
            object.__setattr__(self, "shape", Shape.parse(self.shape))
        b = {}
        for k, v in dict(self.budgets).items():
            if k not in MEASURE_IDS:
                raise ValueError(f"unknown measure {k!r}")
            b[k] = _budget(v)
        object.__setattr__(self, "budgets", {k: b[k] for k in MEASURE_IDS if k in b})

    @classmethod
    def single(cls, shape, m) -> "RelaxationScenario":
        """Only the shape's own measure is budgeted."""
        shape = Shape.parse(shape) if isinstance(shape, str) else shape
        return cls(shape, {shape.measure_id: m})

    @classmethod
    def uniform(cls, shape, m) -> "RelaxationScenario":
        """Every measure of the shape's family (one-sided or bipartite) gets budget m."""
        shape = Shape.parse(shape) if isinstance(shape, str) else shape
        return cls(shape, {k: m for k in shape.family})

    def effective(self, mid: str) -> Number:
        """Budget on ``mid``; the overall measure caps every other one."""
        v = self.budgets.get(mid, Fraction(2))
        if "M" in self.budgets:
            v = min(v, self.budgets["M"])
        return v

    def to_json(self):
        return {"shape": str(self.shape), "budgets": {k: fmt_number(v) for k, v in self.budgets.items()}}


def evaluate(model: MDLModel, kind) -> Number:
    """Signed value S of the expression on the model."""
    spec = get_spec(kind)
    return sum((sg * correlator(model, ctx) for ctx, sg in spec.terms), Fraction(0))


def relaxed_bound(kind, scenario: RelaxationScenario) -> Number:
    spec = get_spec(kind)
    sh = scenario.shape
    M = scenario.effective
    if sh.kind == "one-sided":
        m1, m2, m3 = M("M1"), M("M2"), M("M3")
        if spec.kind is Kind.MERMIN:
            b = 2 + min(2, 2 * m1 + m2, 2 * m1 + m3, 2 * m2 + m3, 2 * m2 + m1, 2 * m3 + m2, 2 * m3 + m1)
        elif spec.kind is Kind.SVETLICHNY:
            b = 4 + min(4, 2 * m1, 2 * m2, 2 * m3)
        else:
            b = {"C": 3 + m3, "A": 3 + 2 * m1 + m3, "B": 3 + 2 * m2 + m3}[sh.target]
    else:
        m12, m23, m13 = M("M12"), M("M23"), M("M13")
        if spec.kind is Kind.MERMIN:
            b = 2 + min(m12, m23, m13)
        elif spec.kind is Kind.SVETLICHNY:
            b = 4 + min(4, 2 * m12, 2 * m23, 2 * m13)
        else:
            raise ValueError("no bipartite relaxed bound is available for the NS2 inequality")
    lo, hi = spec.classical_bound, spec.algebraic_max
    if is_exact(b):
        return Fraction(min(max(b, lo), hi))
    return min(max(b, float(lo)), float(hi))


# ---------------------------------------------------------------------------
# model vs bound

@dataclass(frozen=True)
class BoundReport:
    inequality: str
    S: Number
    bound: Number
    budgets: Mapping[str, Number]
    measured: Mapping[str, Optional[Number]]
    verdict: bool
    tight: bool
    notes: Tuple[str, ...] = ()

    def to_json(self):
        def enc(v):
            if v is None:
                return None
            return fmt_number(v) if isinstance(v, Fraction) else float(v)

        return {
            "inequality": self.inequality,
            "S": enc(self.S),
            "bound": enc(self.bound),
            "budgets": {k: enc(v) for k, v in self.budgets.items()},
            "measured": {k: enc(v) for k, v in self.measured.items()},
            "verdict": self.verdict,
            "tight": self.tight,
            "notes": list(self.notes),
        }


def check_model_against_bound(model: MDLModel, kind, scenario: RelaxationScenario) -> BoundReport:
    """Compare |S| of a model with the relaxed bound at its dependence.

    Explicit scenario budgets are used as given.  Without them the shape's
    own measure is taken at its measured value and the others are left
    unconstrained.  On a partial model the measured value only covers the
    given contexts, so the report also checks that the missing contexts can
    be completed within those budgets.
    """
    spec = get_spec(kind)
    S = evaluate(model, spec.kind)
    rep = dependence_report(model)
    measured = rep.values
    notes = []
    budgets = dict(scenario.budgets)
    if not budgets:
        mid = scenario.shape.measure_id
        if measured[mid] is None:
            notes.append(f"{mid} is undefined on the given contexts; treated as unconstrained")
        else:
            budgets[mid] = measured[mid]
    used = RelaxationScenario(scenario.shape, budgets)
    if rep.partial:
        notes.append("partial model: measured values cover the given contexts only")
        if budgets and model.exact:
            comp = complete_contexts(model, budgets)
            notes.append(
                "completion within these budgets "
                + ("exists" if comp.feasible else "does not exist")
            )
    bound = relaxed_bound(spec.kind, used)
    a = spec.bound_value(S)
    if is_exact(a) and is_exact(bound):
        ok, tight = a <= bound, a == bound
    else:
        ok, tight = a <= bound + REAL_TOL, abs(a - bound) <= REAL_TOL
    return BoundReport(spec.kind.value, S, bound, used.budgets, measured, ok, tight, tuple(notes))
