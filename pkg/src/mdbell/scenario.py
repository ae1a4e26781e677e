"""Tripartite measurement-dependent local (MDL) models.

Three parties A, B, C each pick one of two settings (0 = unprimed, 1 = primed)
and obtain an outcome in {+1, -1}.  A model is a table of deterministic
responses indexed by a finite hidden variable lambda, together with one
probability vector over lambda for every setting context it covers.

Probabilities are kept as ``fractions.Fraction`` whenever the inputs are
rational; float inputs switch the model into real mode.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

Number = Union[Fraction, float, int]

PARTIES = ("A", "B", "C")
SETTING_LETTERS = {"A": "x", "B": "y", "C": "z"}
OUTCOMES = (1, -1)
REAL_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model data."""


class PartialModelError(ModelError):
    """A context needed by an operation is not supplied by the model."""

    def __init__(self, ctx: "Context", what: str = "operation"):
        self.context = ctx
        super().__init__(f"partial model: context {ctx} is not supplied ({what} needs it)")


class UndefinedCorrelatorError(ModelError):
    """The pairing does not fix the outcomes of a pair context."""


# ---------------------------------------------------------------------------
# contexts

@dataclass(frozen=True)
class Context:
    """Setting assignment; ``None`` marks an absent party (pair contexts)."""

    x: Optional[int] = None
    y: Optional[int] = None
    z: Optional[int] = None

    def __post_init__(self):
        bits = (self.x, self.y, self.z)
        for b in bits:
            if b is not None and b not in (0, 1):
                raise ModelError(f"setting must be 0 or 1, got {b!r}")
        if sum(b is not None for b in bits) < 2:
            raise ModelError("a context fixes the settings of at least two parties")

    @property
    def settings(self) -> Tuple[Optional[int], Optional[int], Optional[int]]:
        return (self.x, self.y, self.z)

    @property
    def is_full(self) -> bool:
        return None not in self.settings

    @property
    def parties(self) -> str:
        return "".join(p for p, s in zip(PARTIES, self.settings) if s is not None)

    def setting(self, party: str) -> Optional[int]:
        return self.settings[PARTIES.index(party)]

    def flip(self, party: str) -> "Context":
        s = list(self.settings)
        i = PARTIES.index(party)
        if s[i] is None:
            raise ModelError(f"party {party} is absent from {self}")
        s[i] = 1 - s[i]
        return Context(*s)

    def extends(self, pair: "Context") -> bool:
        """True if this full context agrees with ``pair`` on its settings."""
        return all(p is None or p == s for p, s in zip(pair.settings, self.settings))

    def sort_key(self):
        return (not self.is_full, tuple(-1 if s is None else s for s in self.settings))

    def label(self) -> str:
        out = []
        for letter, s in zip("xyz", self.settings):
            if s is not None:
                out.append(letter + ("'" if s else ""))
        return "".join(out)

    __str__ = label

    @classmethod
    def parse(cls, text: str) -> "Context":
        """Inverse of :meth:`label`, e.g. ``"x'yz"`` or ``"yz'"``."""
        vals: Dict[str, int] = {}
        i = 0
        t = text.strip()
        while i < len(t):
            ch = t[i]
            if ch not in "xyz" or ch in vals:
                raise ModelError(f"bad context label {text!r}")
            primed = i + 1 < len(t) and t[i + 1] in "'′"
            vals[ch] = 1 if primed else 0
            i += 2 if primed else 1
        if list(vals) != sorted(vals):
            raise ModelError(f"bad context label {text!r}: letters out of order")
        return cls(vals.get("x"), vals.get("y"), vals.get("z"))


FULL_CONTEXTS: Tuple[Context, ...] = tuple(
    Context(x, y, z) for x, y, z in itertools.product((0, 1), repeat=3)
)


def sorted_contexts(ctxs: Iterable[Context]):
    return sorted(ctxs, key=Context.sort_key)


# ---------------------------------------------------------------------------
# responses

class Pairing(enum.Enum):
    FULLY_LOCAL = "FullyLocal"
    JOINT_AB = "JointAB"
    JOINT_AC = "JointAC"
    JOINT_BC = "JointBC"

    @property
    def joint(self) -> Optional[str]:
        return None if self is Pairing.FULLY_LOCAL else self.value[-2:]

    @property
    def single(self) -> Optional[str]:
        j = self.joint
        return None if j is None else next(p for p in PARTIES if p not in j)

    @property
    def columns(self) -> Tuple[str, ...]:
        if self is Pairing.FULLY_LOCAL:
            return ("A_x", "A_x'", "B_y", "B_y'", "C_z", "C_z'")
        j, t = self.joint, self.single
        l1, l2 = SETTING_LETTERS[j[0]], SETTING_LETTERS[j[1]]
        lt = SETTING_LETTERS[t]
        jc = tuple(
            f"{j}_{l1}{q1}{l2}{q2}" for q1 in ("", "'") for q2 in ("", "'")
        )
        return jc + (f"{t}_{lt}", f"{t}_{lt}'")

    @classmethod
    def parse(cls, text: str) -> "Pairing":
        for p in cls:
            if p.value.lower() == text.strip().lower():
                return p
        raise ModelError(f"unknown pairing {text!r}")


def _uniform_split(s: int):
    # a joint sign s is realised as (a, b) = (+1, s) or (-1, -s), each w.p. 1/2
    half = Fraction(1, 2)
    return ((1, s, half), (-1, -s, half))


@dataclass(frozen=True)
class ResponseTable:
    """Deterministic responses, one 6-tuple of signs per hidden variable.

    FullyLocal rows are ``(A0, A1, B0, B1, C0, C1)``.  A JointXY row is
    ``(J00, J01, J10, J11, T0, T1)`` where ``J[sX sY]`` is the product of the
    outcomes of the joint pair X, Y at those settings and ``T`` is the third
    party.  Only the product J is specified; when individual outcomes are
    needed the product is split uniformly (see :meth:`outcome_distribution`).
    """

    pairing: Pairing
    rows: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) if v in (1, -1) else v for v in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise ModelError("a response table needs at least one hidden variable")
        for i, r in enumerate(rows):
            if len(r) != 6:
                raise ModelError(f"lambda {i + 1}: expected 6 response signs, got {len(r)}")
            for v in r:
                if v not in (1, -1) or isinstance(v, bool):
                    raise ModelError(f"lambda {i + 1}: response entry {v!r} is not +1 or -1")

    @property
    def L(self) -> int:
        return len(self.rows)

    def defines(self, ctx: Context) -> bool:
        j = self.pairing.joint
        if j is None or ctx.is_full:
            return True
        return ctx.parties == j

    def sign(self, lam: int, ctx: Context) -> int:
        """Product of the outcomes of the parties present in ``ctx``."""
        r = self.rows[lam]
        x, y, z = ctx.settings
        j = self.pairing.joint
        if j is None:
            out = 1
            for k, s in enumerate((x, y, z)):
                if s is not None:
                    out *= r[2 * k + s]
            return out
        if not self.defines(ctx):
            raise UndefinedCorrelatorError(
                f"pairing {self.pairing.value} does not fix the outcome product for context {ctx}"
            )
        i1, i2 = PARTIES.index(j[0]), PARTIES.index(j[1])
        st = ctx.settings
        out = r[2 * st[i1] + st[i2]]
        t = st[PARTIES.index(self.pairing.single)]
        if t is not None:
            out *= r[4 + t]
        return out

    def outcome_distribution(self, lam: int, ctx: Context) -> Dict[Tuple[int, int, int], Fraction]:
        """P(a, b, c | ctx, lambda) for a full context."""
        if not ctx.is_full:
            raise ModelError("outcome distributions are defined on full contexts")
        r = self.rows[lam]
        x, y, z = ctx.settings
        if self.pairing is Pairing.FULLY_LOCAL:
            return {(r[x], r[2 + y], r[4 + z]): Fraction(1)}
        j, t = self.pairing.joint, self.pairing.single
        st = ctx.settings
        i1, i2, it = (PARTIES.index(q) for q in (j[0], j[1], t))
        s = r[2 * st[i1] + st[i2]]
        w = r[4 + st[it]]
        out: Dict[Tuple[int, int, int], Fraction] = {}
        for o1, o2, pr in _uniform_split(s):
            abc = [0, 0, 0]
            abc[i1], abc[i2], abc[it] = o1, o2, w
            out[tuple(abc)] = pr
        return out

    def to_json(self):
        return {"pairing": self.pairing.value, "rows": [list(r) for r in self.rows]}


# ---------------------------------------------------------------------------
# numbers

def is_exact(v) -> bool:
    return isinstance(v, Rational)


def to_number(v) -> Number:
    """Fractions stay exact, ints become Fractions, floats stay floats."""
    if isinstance(v, bool):
        raise ModelError(f"not a probability: {v!r}")
    if isinstance(v, Rational):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        return Fraction(v)
    raise ModelError(f"not a number: {v!r}")


def fmt_number(v: Number) -> str:
    if isinstance(v, Rational):
        return str(Fraction(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# models

@dataclass(frozen=True, eq=False)
class MDLModel:
    responses: ResponseTable
    distributions: Mapping[Context, Tuple[Number, ...]]
    label: str = ""

    @property
    def L(self) -> int:
        return self.responses.L

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for vec in self.distributions.values() for v in vec)

    @property
    def contexts(self) -> Tuple[Context, ...]:
        return tuple(sorted_contexts(self.distributions))

    @property
    def full_contexts(self) -> Tuple[Context, ...]:
        return tuple(c for c in self.contexts if c.is_full)

    @property
    def is_complete(self) -> bool:
        return all(c in self.distributions for c in FULL_CONTEXTS)

    def rho(self, ctx) -> Tuple[Number, ...]:
        if isinstance(ctx, str):
            ctx = Context.parse(ctx)
        try:
            return self.distributions[ctx]
        except KeyError:
            raise PartialModelError(ctx) from None

    def __eq__(self, other):
        if not isinstance(other, MDLModel):
            return NotImplemented
        return (self.responses == other.responses and self.label == other.label
                and dict(self.distributions) == dict(other.distributions))


def build_model(responses: ResponseTable, distributions: Mapping, label: str = "") -> MDLModel:
    """Validate and assemble a model.

    ``distributions`` maps contexts (or their labels such as ``"x'yz"``) to
    probability vectors of length L.
    """
    if not isinstance(responses, ResponseTable):
        raise ModelError("responses must be a ResponseTable")
    L = responses.L
    dist: Dict[Context, Tuple[Number, ...]] = {}
    for key, vec in distributions.items():
        ctx = Context.parse(key) if isinstance(key, str) else key
        if not isinstance(ctx, Context):
            raise ModelError(f"bad context key {key!r}")
        if ctx in dist:
            raise ModelError(f"context {ctx} given twice")
        vec = tuple(to_number(v) for v in vec)
        if len(vec) != L:
            raise ModelError(
                f"distribution rho({ctx}) has length {len(vec)}, response table has L={L}"
            )
        for v in vec:
            if v < 0:
                raise ModelError(f"distribution rho({ctx}) has a negative entry {fmt_number(v)}")
        tot = sum(vec)
        if all(is_exact(v) for v in vec):
            if tot != 1:
                raise ModelError(f"distribution rho({ctx}) sums to {fmt_number(tot)}, expected 1")
        elif abs(tot - 1) > 1e-9:
            raise ModelError(f"distribution rho({ctx}) sums to {float(tot)!r}, expected 1")
        if not responses.defines(ctx):
            raise ModelError(
                f"pair context {ctx} is inconsistent with pairing {responses.pairing.value}"
            )
        dist[ctx] = vec
    if not dist:
        raise ModelError("a model needs at least one context distribution")
    return MDLModel(responses, dist, label)


def correlator(model: MDLModel, ctx: Context) -> Number:
    """Expectation of the product of the outcomes of the parties in ``ctx``."""
    rho = model.rho(ctx)
    r = model.responses
    return sum((p * r.sign(lam, ctx) for lam, p in enumerate(rho) if p), Fraction(0))


# ---------------------------------------------------------------------------
# behaviours

OUTCOME_TRIPLES = tuple(itertools.product(OUTCOMES, repeat=3))


@dataclass(frozen=True, eq=False)
class Behavior:
    """P(a, b, c | x, y, z) stored as ``P[(x, y, z)][(a, b, c)]``."""

    P: Mapping[Tuple[int, int, int], Mapping[Tuple[int, int, int], Number]]

    def prob(self, a, b, c, x, y, z) -> Number:
        return self.P[(x, y, z)].get((a, b, c), Fraction(0))

    def marginal(self, parties: str, outcomes: Sequence[int], settings: Tuple[int, int, int]) -> Number:
        idx = [PARTIES.index(p) for p in parties]
        tot = Fraction(0)
        for abc, pr in self.P[settings].items():
            if all(abc[i] == o for i, o in zip(idx, outcomes)):
                tot += pr
        return tot

    def __eq__(self, other):
        if not isinstance(other, Behavior):
            return NotImplemented
        keys = set(self.P) | set(other.P)
        return all(
            self.prob(*abc, *k) == other.prob(*abc, *k) for k in keys for abc in OUTCOME_TRIPLES
        )


def _behavior_from(responses: ResponseTable, rho_of) -> Behavior:
    P = {}
    for ctx in FULL_CONTEXTS:
        rho = rho_of(ctx)
        dist: Dict[Tuple[int, int, int], Number] = {abc: Fraction(0) for abc in OUTCOME_TRIPLES}
        for lam, w in enumerate(rho):
            if not w:
                continue
            for abc, pr in responses.outcome_distribution(lam, ctx).items():
                dist[abc] += w * pr
        P[ctx.settings] = dist
    return Behavior(P)


def behavior(model: MDLModel) -> Behavior:
    """Observed behaviour: P(abc|xyz) = sum_lambda rho(lambda|xyz) P(abc|xyz, lambda)."""
    for ctx in FULL_CONTEXTS:
        if ctx not in model.distributions:
            raise PartialModelError(ctx, "behavior")
    return _behavior_from(model.responses, model.rho)


def response_behavior(responses: ResponseTable, lam: int) -> Behavior:
    """Behaviour produced by a single hidden variable (settings-independent weight 1)."""
    one = tuple(Fraction(int(i == lam)) for i in range(responses.L))
    return _behavior_from(responses, lambda ctx: one)


@dataclass(frozen=True)
class NoSignalingReport:
    ok: bool
    violations: Tuple[str, ...] = ()

    def to_json(self):
        return {"no_signaling": self.ok, "violations": list(self.violations)}


def _close(a, b, tol):
    return a == b if tol is None else abs(a - b) <= tol


def check_no_signaling(beh: Behavior, tol: Optional[float] = None) -> NoSignalingReport:
    """Every one- and two-party marginal must not depend on the other settings.

    Exact comparison unless ``tol`` is given (use it for float behaviours).
    """
    found = []
    for k in (1, 2):
        for parties in itertools.combinations(PARTIES, k):
            rest = [p for p in PARTIES if p not in parties]
            idx = [PARTIES.index(p) for p in parties]
            ridx = [PARTIES.index(p) for p in rest]
            for own in itertools.product((0, 1), repeat=k):
                for outs in itertools.product(OUTCOMES, repeat=k):
                    vals = []
                    for other in itertools.product((0, 1), repeat=3 - k):
                        st = [0, 0, 0]
                        for i, s in zip(idx, own):
                            st[i] = s
                        for i, s in zip(ridx, other):
                            st[i] = s
                        vals.append((other, beh.marginal("".join(parties), outs, tuple(st))))
                    base_other, base = vals[0]
                    for other, v in vals[1:]:
                        if not _close(v, base, tol):
                            ev = ",".join(
                                f"{p.lower()}={'+1' if o > 0 else '-1'}" for p, o in zip(parties, outs)
                            )
                            cond = ",".join(
                                f"{SETTING_LETTERS[p]}={s}" for p, s in zip(parties, own)
                            )
                            rl = ",".join(SETTING_LETTERS[p] for p in rest)
                            found.append(
                                f"P({ev}|{cond}) depends on ({rl}): "
                                f"{base_other} -> {fmt_number(base)}, {other} -> {fmt_number(v)}"
                            )
                            break
    return NoSignalingReport(not found, tuple(found))


def check_hidden_variable_no_signaling(model: MDLModel) -> NoSignalingReport:
    """No-signaling of the response behaviour at each fixed hidden variable."""
    found = []
    for lam in range(model.L):
        rep = check_no_signaling(response_behavior(model.responses, lam))
        found.extend(f"lambda {lam + 1}: {v}" for v in rep.violations)
    return NoSignalingReport(not found, tuple(found))


@dataclass(frozen=True)
class ConsistencyEntry:
    pair: Context
    full: Context
    status: str  # "consistent", "inconsistent" or "missing"


@dataclass(frozen=True)
class ConsistencyReport:
    entries: Tuple[ConsistencyEntry, ...]

    @property
    def consistent(self) -> bool:
        return all(e.status != "inconsistent" for e in self.entries)

    def notes(self) -> Tuple[str, ...]:
        out = []
        for e in self.entries:
            if e.status == "missing":
                out.append(f"rho({e.pair}) has no extending full context rho({e.full}) supplied")
            elif e.status == "inconsistent":
                out.append(f"rho({e.pair}) differs from rho({e.full})")
        return tuple(out)


def check_context_consistency(model: MDLModel) -> ConsistencyReport:
    """Compare each pair-context vector with the full contexts extending it."""
    entries = []
    for pair in model.contexts:
        if pair.is_full:
            continue
        for full in FULL_CONTEXTS:
            if not full.extends(pair):
                continue
            if full not in model.distributions:
                status = "missing"
            elif tuple(model.rho(full)) == tuple(model.rho(pair)):
                status = "consistent"
            else:
                status = "inconsistent"
            entries.append(ConsistencyEntry(pair, full, status))
    return ConsistencyReport(tuple(entries))
