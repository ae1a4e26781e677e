"""GHZ-state correlators and a derivative-free search over measurement settings.

Observables are n.sigma for Bloch unit vectors n; expectations are taken on
the 8-dimensional GHZ vector (|000> + |111>)/sqrt(2) by explicit Kronecker
products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .inequalities import Kind, get_spec
from .scenario import Context

CORR_TOL = 1e-12

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
IDENTITY = np.eye(2, dtype=complex)

GHZ = np.zeros(8, dtype=complex)
GHZ[0] = GHZ[7] = 1 / math.sqrt(2)

PHI = (math.sqrt(5) - 1) / 2


def bloch(theta: float, phi: float) -> np.ndarray:
    """Unit vector from polar angle theta and azimuth phi."""
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def in_plane(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle), 0.0])


def observable(n: Sequence[float]) -> np.ndarray:
    return n[0] * SIGMA[0] + n[1] * SIGMA[1] + n[2] * SIGMA[2]


@dataclass(frozen=True, eq=False)
class MeasurementSettings:
    """``vectors[party][setting]`` is a Bloch unit vector, parties in order A, B, C."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.shape != (3, 2, 3):
            raise ValueError(f"settings need shape (3, 2, 3), got {v.shape}")
        norms = np.linalg.norm(v, axis=-1)
        if np.any(np.abs(norms - 1) > CORR_TOL):
            raise ValueError(f"measurement directions must be unit vectors, norms {norms.tolist()}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_angles(cls, angles) -> "MeasurementSettings":
        a = np.asarray(angles, dtype=float).reshape(3, 2, 2)
        return cls(np.array([[bloch(*a[p, s]) for s in range(2)] for p in range(3)]))

    @classmethod
    def in_plane(cls, azimuths) -> "MeasurementSettings":
        a = np.asarray(azimuths, dtype=float).reshape(3, 2)
        return cls(np.array([[in_plane(a[p, s]) for s in range(2)] for p in range(3)]))

    def to_json(self):
        names = ("A0", "A1", "B0", "B1", "C0", "C1")
        flat = self.vectors.reshape(6, 3)
        return {n: [float(c) for c in v] for n, v in zip(names, flat)}


def ghz_correlator(settings: MeasurementSettings, ctx: Context, state: Optional[np.ndarray] = None) -> float:
    """<psi| O_A (x) O_B (x) O_C |psi>, identity on a party absent from ``ctx``."""
    psi = GHZ if state is None else np.asarray(state, dtype=complex)
    ops = []
    for p, s in enumerate(ctx.settings):
        ops.append(IDENTITY if s is None else observable(settings.vectors[p, s]))
    op = np.kron(np.kron(ops[0], ops[1]), ops[2])
    return float(np.real(np.vdot(psi, op @ psi)))


def evaluate_quantum(kind, settings: MeasurementSettings, state: Optional[np.ndarray] = None) -> float:
    spec = get_spec(kind)
    return float(sum(sg * ghz_correlator(settings, ctx, state) for ctx, sg in spec.terms))


# ---------------------------------------------------------------------------
# optimiser

def golden_section_max(f, a: float, b: float, tol: float = 1e-8) -> Tuple[float, float]:
    """Maximum of a unimodal f on [a, b]; returns (argmax, value)."""
    c = b - PHI * (b - a)
    d = a + PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + PHI * (b - a)
            fd = f(d)
    t = (a + b) / 2
    return t, f(t)


@dataclass(frozen=True)
class OptimizationResult:
    kind: Kind
    settings: MeasurementSettings
    S: float
    angles: Tuple[float, ...]
    sweeps: int
    start: int

    def to_json(self):
        return {"inequality": self.kind.value, "S": self.S, "settings": self.settings.to_json(),
                "sweeps": self.sweeps, "start": self.start}


def _coordinate_ascent(kind, angles: np.ndarray, tol: float, max_sweeps: int):
    def S_of(a):
        return evaluate_quantum(kind, MeasurementSettings.from_angles(a))

    best = S_of(angles)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        before = best
        for i in np.ndindex(3, 2, 2):
            t0 = angles[i]

            def f(t, i=i):
                trial = angles.copy()
                trial[i] = t
                return S_of(trial)

            grid = [t0 + k * math.pi / 3 for k in range(6)]
            vals = [f(t) for t in grid]
            k = int(np.argmax(vals))
            t, v = golden_section_max(f, grid[k] - math.pi / 3, grid[k] + math.pi / 3, tol)
            if v > best:
                angles[i] = math.remainder(t, 2 * math.pi)
                best = v
        if best - before < 1e-13:
            break
    return angles, best, sweeps


def optimize_settings(kind, starts: int = 3, seed: int = 0, tol: float = 1e-8,
                      max_sweeps: int = 200) -> OptimizationResult:
    """Maximise evaluate_quantum over the 12 spherical angles.

    Each start draws random angles from a fixed seed, then sweeps the
    coordinates: the best of six evenly spaced values seeds a golden-section
    search over a bracket of width 2*pi/3, resolved to ``tol``.  Sweeps stop
    when a full pass improves S by less than 1e-13.
    """
    kind = Kind.parse(kind)
    rng = np.random.default_rng(seed)
    best = None
    for s in range(starts):
        angles = rng.uniform(0, 2 * math.pi, size=(3, 2, 2))
        angles, val, sweeps = _coordinate_ascent(kind, angles, tol, max_sweeps)
        if best is None or val > best.S:
            best = OptimizationResult(kind, MeasurementSettings.from_angles(angles), val,
                                      tuple(float(a) for a in angles.ravel()), sweeps, s)
    return best
