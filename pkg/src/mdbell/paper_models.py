"""The five parameterised deterministic models and their claimed properties.

Sign letters (a, b, c, ...) are free parameters in {+1, -1}, +1 by default.
Primed letters are derived (a' = a**2 and so on) and therefore always +1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Mapping, Optional, Tuple

from .inequalities import Kind
from .scenario import MDLModel, Pairing, ResponseTable, build_model, to_number

SIGN_LETTERS = {
    "I": "abcd",
    "II": "abcdefghi",
    "III": "abc",
    "IV": "ab",
    "V": "abcde",
}
PARAM_NAMES = {"I": ("p1", "p2"), "II": ("p",), "III": ("p",), "IV": ("p",), "V": ("p",)}
MODEL_IDS = ("I", "II", "III", "IV", "V")


@dataclass(frozen=True)
class PaperModelId:
    id: str
    params: Tuple
    signs: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in SIGN_LETTERS:
            raise ValueError(f"unknown model {self.id!r}")
        ps = tuple(to_number(p) for p in (self.params if isinstance(self.params, (tuple, list)) else (self.params,)))
        object.__setattr__(self, "params", ps)
        if len(ps) != len(PARAM_NAMES[self.id]):
            raise ValueError(f"model {self.id} takes parameters {PARAM_NAMES[self.id]}")
        if any(p < 0 or p > 1 for p in ps):
            raise ValueError(f"model {self.id}: parameters must lie in [0, 1]")
        if self.id == "I" and ps[0] + ps[1] > 1:
            raise ValueError("model I needs p1 + p2 <= 1")
        letters = SIGN_LETTERS[self.id]
        sg = {k: 1 for k in letters}
        for k, v in dict(self.signs).items():
            if k not in letters:
                raise ValueError(f"model {self.id} has no sign parameter {k!r}")
            if v not in (1, -1):
                raise ValueError(f"sign {k} must be +1 or -1")
            sg[k] = int(v)
        object.__setattr__(self, "signs", sg)

    @property
    def label(self) -> str:
        ps = ", ".join(f"{n}={p}" for n, p in zip(PARAM_NAMES[self.id], self.params))
        return f"Deterministic no-signaling model {self.id} ({ps})"


def _model_I(p1, p2, s):
    a, b, c, d = (s[k] for k in "abcd")
    ap = bp = cp = dp = 1
    rows = (
        (a, a, a, a, ap, ap),
        (b, b, b, b, bp, -bp),
        (c, c, c, c, cp, cp),
        (d, d, d, -d, dp, dp),
    )
    dist = {
        "x'yz": (1 - p1, p1, 0, 0),
        "xy'z": (1 - p2, 0, p2, 0),
        "xyz'": (1 - p1 - p2, 0, p1, p2),
        "x'y'z'": (1 - p1 - p2, p2, 0, p1),
    }
    return Pairing.FULLY_LOCAL, rows, dist


_II_COLUMNS = ("xyz", "xyz'", "xy'z", "xy'z'", "x'yz", "x'yz'", "x'y'z", "x'y'z'")


def _model_II(p, s):
    a, b, c, d, e, f, g, h, i = (s[k] for k in "abcdefghi")
    rows = (
        (a, a, a, -a, a, a),
        (b, b, b, b, b, b),
        (c, c, c, c, c, c),
        (d, d, d, d, d, d),
        (e, -e, e, e, e, e),
        (f, f, f, f, f, f),
        (g, g, -g, g, g, g),
        (h, h, h, -h, h, h),
        (i, i, i, i, i, -i),
    )
    dist = {}
    for k, col in enumerate(_II_COLUMNS):
        vec = [Fraction(0)] * 9
        vec[0] = 1 - p
        vec[k + 1] = p
        dist[col] = tuple(vec)
    return Pairing.JOINT_AB, rows, dist


def _model_III(p, s):
    a, b, c = (s[k] for k in "abc")
    bp = cp = 1
    rows = (
        (-a, a, -a, a, -a, -a),
        (b, b, b, b, bp, bp),
        (c, c, c, c, -cp, cp),
    )
    dist = {
        "xy": (1, 0, 0),
        "xz": (1, 0, 0),
        "yz'": (1, 0, 0),
        "x'y'z": (0, 1 - p, p),
        "x'y'z'": (0, 1, 0),
    }
    return Pairing.FULLY_LOCAL, rows, dist


def _model_IV(p, s):
    a, b = s["a"], s["b"]
    ap = bp = 1
    rows = (
        (a, a, a, a, ap, ap),
        (-b, b, b, -b, bp, bp),
    )
    dist = {
        "x'yz": (1, 0),
        "xy'z": (1 - p, p),
        "xyz'": (1, 0),
        "x'y'z'": (1 - p, p),
    }
    return Pairing.FULLY_LOCAL, rows, dist


def _model_V(p, s):
    a, b, c, d, e = (s[k] for k in "abcde")
    rows = (
        (a, a, a, -a, a, a),
        (b, b, -b, b, b, b),
        (c, -c, c, -c, c, c),
        (-d, d, d, d, d, -d),
        (e, e, e, e, e, -e),
    )
    q = 1 - p
    dist = {
        "xyz": (q, p, 0, 0, 0),
        "xyz'": (q, p, 0, 0, 0),
        "xy'z": (q, 0, 0, p, 0),
        "xy'z'": (q, 0, 0, p, 0),
        "x'yz": (q, 0, 0, 0, p),
        "x'yz'": (q, 0, 0, 0, p),
        "x'y'z": (q, 0, p, 0, 0),
        "x'y'z'": (q, 0, p, 0, 0),
    }
    return Pairing.JOINT_AB, rows, dist


_BUILDERS = {"I": _model_I, "II": _model_II, "III": _model_III, "IV": _model_IV, "V": _model_V}


def build_paper_model(spec: PaperModelId) -> MDLModel:
    pairing, rows, dist = _BUILDERS[spec.id](*spec.params, spec.signs)
    return build_model(ResponseTable(pairing, rows), dist, spec.label)


def paper_model(mid: str, *params, **signs) -> MDLModel:
    """Shorthand: ``paper_model("II", Fraction(1, 2), a=-1)``."""
    return build_paper_model(PaperModelId(mid, params, signs))


# ---------------------------------------------------------------------------
# claims

@dataclass(frozen=True)
class Claims:
    id: str
    kind: Kind
    S: Callable[..., object]
    S_text: str
    measures: Mapping[str, Callable[..., object]]
    measures_text: str
    completion: Optional[Callable[..., Dict[str, object]]] = None


def expected_claims(mid: str) -> Claims:
    if mid == "I":
        return Claims(
            "I", Kind.MERMIN, lambda p1, p2: 2 + 2 * p1 + 2 * p2, "S = 2+2p1+2p2",
            {}, "completable to M1 = p1 and M2 = 2p2",
            completion=lambda p1, p2: {"M1": p1, "M2": 2 * p2},
        )
    if mid == "II":
        return Claims("II", Kind.SVETLICHNY, lambda p: 4 + 4 * p, "S = 4+4p",
                      {"M1": lambda p: 2 * p}, "M1 = 2p")
    if mid == "III":
        return Claims("III", Kind.NS2, lambda p: 3 + 2 * p, "S = 3+2p",
                      {"M3": lambda p: 2 * p}, "M3 = 2p")
    if mid == "IV":
        return Claims("IV", Kind.MERMIN, lambda p: 2 + 2 * p, "S = 2+2p",
                      {"M12": lambda p: 2 * p}, "M12 = 2p")
    if mid == "V":
        return Claims("V", Kind.SVETLICHNY, lambda p: 4 + 4 * p, "S = 4+4p",
                      {"M12": lambda p: 2 * p}, "M12 = 2p")
    raise ValueError(f"unknown model {mid!r}")


def parameter_grid(mid: str, step=Fraction(1, 8)):
    """Valid parameter tuples on a grid of the given step."""
    step = Fraction(step)
    n = int(1 / step)
    vals = [k * step for k in range(n + 1)]
    if mid == "I":
        return [(p1, p2) for p1 in vals for p2 in vals if p1 + p2 <= 1]
    return [(p,) for p in vals]
