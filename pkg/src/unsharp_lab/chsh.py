"""CHSH functional: quantum values, a deterministic optimizer, and hidden-value bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import quantum as qc

TSIRELSON = 2 * math.sqrt(2)
_GOLDEN = (math.sqrt(5) - 1) / 2


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    return v


@dataclass(frozen=True)
class CHSHSetting:
    a1: tuple[float, float, float]
    a1p: tuple[float, float, float]
    b2: tuple[float, float, float]
    b2p: tuple[float, float, float]

    def __post_init__(self):
        for name in ("a1", "a1p", "b2", "b2p"):
            vec = _unit(getattr(self, name))
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise ValueError(f"direction {name} is not a unit vector")
            object.__setattr__(self, name, tuple(float(c) for c in vec))

    @classmethod
    def from_angles(cls, angles) -> "CHSHSetting":
        """Build from eight spherical angles (theta, phi) for a1, a1', b2, b2'."""
        th = np.asarray(angles, dtype=float).reshape(4, 2)
        return cls(*(_direction(t, p) for t, p in th))

    @classmethod
    def canonical(cls) -> "CHSHSetting":
        r = 1 / math.sqrt(2)
        return cls((0, 0, 1), (1, 0, 0), (-r, 0, -r), (r, 0, -r))


def _direction(theta: float, phi: float) -> np.ndarray:
    st = math.sin(theta)
    v = np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])
    return v / np.linalg.norm(v)


def correlator(state: qc.QuantumState, a, b) -> float:
    """<(a.sigma) x (b.sigma)> on a two-qubit state."""
    return qc.expectation(qc.tensor(qc.spin_operator(a), qc.spin_operator(b)), state)


def chsh_value(state: qc.QuantumState, s: CHSHSetting) -> float:
    if state.dim != 4:
        raise ValueError("CHSH needs a two-qubit state")
    return (
        correlator(state, s.a1, s.b2)
        + correlator(state, s.a1p, s.b2)
        + correlator(state, s.a1, s.b2p)
        - correlator(state, s.a1p, s.b2p)
    )


def correlation_matrix(state: qc.QuantumState) -> np.ndarray:
    """T[i, j] = <sigma_i x sigma_j> for i, j in x, y, z."""
    axes = "xyz"
    return np.array(
        [[qc.expectation(qc.tensor(qc.pauli(i), qc.pauli(j)), state) for j in axes] for i in axes]
    )


def _sphere_grid(step_deg: float = 15.0) -> tuple[np.ndarray, np.ndarray]:
    """Angles and unit vectors on a (theta, phi) grid; each pole appears once."""
    angles = [(0.0, 0.0)]
    n_th = int(round(180 / step_deg))
    n_ph = int(round(360 / step_deg))
    for i in range(1, n_th):
        for k in range(n_ph):
            angles.append((math.radians(i * step_deg), math.radians(k * step_deg)))
    angles.append((math.pi, 0.0))
    angles = np.array(angles)
    st = np.sin(angles[:, 0])
    vecs = np.stack([st * np.cos(angles[:, 1]), st * np.sin(angles[:, 1]), np.cos(angles[:, 0])], axis=1)
    return angles, vecs


def _best_alice(T: np.ndarray, b2: np.ndarray, b2p: np.ndarray):
    """For fixed Bob directions, S = a1.T(b2+b2') + a1'.T(b2-b2') is maximized by aligning a1, a1'."""
    u = T @ (b2 + b2p)
    w = T @ (b2 - b2p)
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    a1 = u / nu if nu > 0 else np.array([0.0, 0.0, 1.0])
    a1p = w / nw if nw > 0 else np.array([0.0, 0.0, 1.0])
    return nu + nw, a1, a1p


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def optimize_quantum(
    state: qc.QuantumState, step_deg: float = 15.0, sweeps: int = 30
) -> tuple[float, CHSHSetting]:
    """Maximize |S| over measurement directions.

    Alice's two directions are set optimally in closed form for each pair of Bob directions,
    so the search runs over Bob's four angles: a full coarse grid, then coordinate-wise
    golden-section sweeps. Ties on the grid go to the lexicographically smallest index.
    """
    if state.dim != 4:
        raise ValueError("CHSH needs a two-qubit state")
    T = correlation_matrix(state)
    angles, vecs = _sphere_grid(step_deg)

    u = vecs @ T.T  # row n: T @ vecs[n]
    vals = np.linalg.norm(u[:, None, :] + u[None, :, :], axis=2) + np.linalg.norm(
        u[:, None, :] - u[None, :, :], axis=2
    )
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x = np.array([*angles[i], *angles[j]], dtype=float)

    def objective(p):
        return _best_alice(T, _direction(p[0], p[1]), _direction(p[2], p[3]))[0]

    best = objective(x)
    half = math.radians(step_deg)
    for _ in range(sweeps):
        prev = best
        for k in range(4):
            def along(z, k=k):
                y = x.copy()
                y[k] = z
                return objective(y)

            z = _golden_max(along, x[k] - half, x[k] + half)
            if along(z) > best:
                x[k] = z
                best = along(z)
        half = max(half / 2, 1e-4)
        if best - prev < 1e-15 and half <= 1e-4:
            break

    b2, b2p = _direction(x[0], x[1]), _direction(x[2], x[3])
    _, a1, a1p = _best_alice(T, b2, b2p)
    setting = CHSHSetting(a1, a1p, b2, b2p)
    return abs(chsh_value(state, setting)), setting


def chsh_combination(a1: float, a1p: float, b2: float, b2p: float) -> float:
    return (a1 + a1p) * b2 + (a1 - a1p) * b2p


def sharp_hv_bound() -> float:
    """Max of the CHSH combination over the 16 sharp +-1 value tuples."""
    values = [chsh_combination(*t) for t in itertools.product((1, -1), repeat=4)]
    if any(abs(v) != 2 for v in values):
        raise AssertionError("sharp CHSH combination must be +-2 for every tuple")
    return float(max(values))


@dataclass(frozen=True)
class UnsharpRange:
    """Allowed hidden values: ``+-1 +- epsilon`` bands, or the interval [-1-eps, 1+eps] if ``continuous``."""

    epsilon: float
    continuous: bool = False

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")

    def endpoints(self) -> tuple[float, ...]:
        e = self.epsilon
        if self.continuous:
            return (-1 - e, 1 + e)
        return (-1 - e, -1 + e, 1 - e, 1 + e)


def unsharp_hv_bound(r: UnsharpRange | float) -> float:
    """Max of the CHSH combination over the allowed value set.

    The combination is linear in each value separately, so the maximum sits on interval
    endpoints and endpoint enumeration is exact.
    """
    if not isinstance(r, UnsharpRange):
        r = UnsharpRange(float(r))
    ends = r.endpoints()
    return float(max(chsh_combination(*t) for t in itertools.product(ends, repeat=4)))


def epsilon_to_reach(target_s: float) -> float:
    """Smallest unsharpness for which the hidden-value bound 2(1+eps)^2 reaches ``target_s``."""
    if target_s < 2:
        raise ValueError("target must be at least 2")
    return math.sqrt(target_s / 2) - 1
