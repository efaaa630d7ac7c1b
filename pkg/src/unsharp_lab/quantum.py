"""Two-qubit operator algebra: Pauli matrices, products, the Bell-like basis and expectations.

Basis ordering is |++>, |+->, |-+>, |--> with qubit 1 as the major index, where
``Z|+> = +|+>`` and ``Z|-> = -|->``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

HERMITIAN_TOL = 1e-12
IDENTITY_TOL = 1e-12
IMAG_TOL = 1e-10
PSD_TOL = 1e-10

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.setflags(write=False)
    return m


def max_norm(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and max_norm(m - m.conj().T) <= tol


def _check_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape not in ((2, 2), (4, 4)):
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got shape {m.shape}")
    return m


def identity(dim: int = 2) -> np.ndarray:
    if dim not in (2, 4):
        raise ValueError(f"dim must be 2 or 4, got {dim}")
    return _frozen(np.eye(dim))


def pauli(axis: str) -> np.ndarray:
    """Return the Pauli matrix for ``axis`` in {'x', 'y', 'z'} (read-only copy)."""
    try:
        return _frozen(_PAULI[axis.lower()])
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli axis {axis!r}; expected 'x', 'y' or 'z'") from None


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two single-qubit operators; ``a`` acts on qubit 1."""
    a = _check_matrix(a)
    b = _check_matrix(b)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError("tensor expects two 2x2 operators")
    return _frozen(np.kron(a, b))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = _check_matrix(a)
    b = _check_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return _frozen(a @ b - b @ a)


def spin_operator(direction) -> np.ndarray:
    """n . sigma for a unit 3-vector ``direction``."""
    n = np.asarray(direction, dtype=float)
    if n.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    return _frozen(n[0] * _PAULI["x"] + n[1] * _PAULI["y"] + n[2] * _PAULI["z"])


def _build_observables() -> dict[str, np.ndarray]:
    i2 = np.eye(2)
    x, y, z = _PAULI["x"], _PAULI["y"], _PAULI["z"]
    return {
        "X1": tensor(x, i2),
        "X2": tensor(i2, x),
        "Y1": tensor(y, i2),
        "Y2": tensor(i2, y),
        "Z1": tensor(z, i2),
        "Z2": tensor(i2, z),
        "X1X2": tensor(x, x),
        "Y1Y2": tensor(y, y),
        "Z1Z2": tensor(z, z),
        "X1Y2": tensor(x, y),
        "Y1X2": tensor(y, x),
    }


OBSERVABLES: Mapping[str, np.ndarray] = _build_observables()

# Rows of the magic-square value system; the last entry is the operator sign of the product.
MERMIN_ROWS: tuple[tuple[tuple[str, str, str], int], ...] = (
    (("X1", "X2", "X1X2"), 1),
    (("Y1", "Y2", "Y1Y2"), 1),
    (("X1", "Y2", "X1Y2"), 1),
    (("Y1", "X2", "Y1X2"), 1),
    (("X1Y2", "Y1X2", "Z1Z2"), 1),
    (("X1X2", "Y1Y2", "Z1Z2"), -1),
)


def observable(label: str) -> np.ndarray:
    try:
        return OBSERVABLES[label]
    except KeyError:
        raise ValueError(f"unknown observable {label!r}") from None


def identity_sign(m: np.ndarray, tol: float = IDENTITY_TOL) -> int:
    """Return +1 if ``m`` is I, -1 if it is -I (max-norm within ``tol``); raise otherwise."""
    m = _check_matrix(m)
    eye = np.eye(m.shape[0])
    if max_norm(m - eye) <= tol:
        return 1
    if max_norm(m + eye) <= tol:
        return -1
    raise ValueError("operator product is neither +I nor -I")


def verify_row_identities() -> tuple[int, ...]:
    """Multiply the three operators of each row and report the sign of the resulting identity."""
    signs = []
    for labels, _ in MERMIN_ROWS:
        a, b, c = (OBSERVABLES[lab] for lab in labels)
        signs.append(identity_sign(a @ b @ c))
    return tuple(signs)


@dataclass(frozen=True)
class QuantumState:
    """A one- or two-qubit state, either a normalized ket or a density matrix."""

    kind: str
    data: np.ndarray
    label: str = ""

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if self.kind == "pure":
            if data.shape not in ((2,), (4,)):
                raise ValueError(f"pure state needs 2 or 4 amplitudes, got shape {data.shape}")
            if abs(np.vdot(data, data).real - 1.0) > 1e-12:
                raise ValueError("pure state is not normalized")
        elif self.kind == "mixed":
            if data.shape not in ((2, 2), (4, 4)):
                raise ValueError(f"density matrix must be 2x2 or 4x4, got shape {data.shape}")
            if not is_hermitian(data):
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(data) - 1.0) > 1e-12:
                raise ValueError("density matrix does not have unit trace")
            if min_eigenvalue(data) < -PSD_TOL:
                raise ValueError("density matrix has a negative eigenvalue")
        else:
            raise ValueError(f"kind must be 'pure' or 'mixed', got {self.kind!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, amplitudes, label: str = "") -> "QuantumState":
        return cls("pure", amplitudes, label)

    @classmethod
    def mixed(cls, rho, label: str = "") -> "QuantumState":
        return cls("mixed", rho, label)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def density(self) -> np.ndarray:
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)


def min_eigenvalue(rho: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian 2x2 or 4x4 matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape == (2, 2):
        # roots of the characteristic polynomial, closed form
        tr = (rho[0, 0] + rho[1, 1]).real
        det = (rho[0, 0] * rho[1, 1] - rho[0, 1] * rho[1, 0]).real
        disc = max(tr * tr / 4.0 - det, 0.0)
        return tr / 2.0 - np.sqrt(disc)
    return float(np.linalg.eigvalsh(rho)[0])


def ket(bits: str) -> np.ndarray:
    """Computational basis ket from a string over '+'/'-', e.g. ``ket('+-')``."""
    single = {"+": np.array([1, 0], dtype=complex), "-": np.array([0, 1], dtype=complex)}
    out = np.array([1], dtype=complex)
    for ch in bits:
        out = np.kron(out, single[ch])
    return out


def bell_like_basis() -> dict[str, QuantumState]:
    """The four joint eigenvectors of Z1Z2 and X1Y2, keyed 'Phi+', 'Phi-', 'Psi+', 'Psi-'."""
    r = 1 / np.sqrt(2)
    pp, pm, mp, mm = ket("++"), ket("+-"), ket("-+"), ket("--")
    return {
        "Phi+": QuantumState.pure(r * (1j * pp + mm), "Phi+"),
        "Phi-": QuantumState.pure(r * (-1j * pp + mm), "Phi-"),
        "Psi+": QuantumState.pure(r * (1j * pm + mp), "Psi+"),
        "Psi-": QuantumState.pure(r * (-1j * pm + mp), "Psi-"),
    }


def eigenvalue_on(obs: np.ndarray, vec: np.ndarray, tol: float = IDENTITY_TOL) -> float:
    """Eigenvalue of ``obs`` for a known eigenvector ``vec``; raises if ``vec`` is not one."""
    vec = np.asarray(vec, dtype=complex)
    image = np.asarray(obs) @ vec
    lam = np.vdot(vec, image) / np.vdot(vec, vec)
    if max_norm(image - lam * vec) > tol or abs(lam.imag) > tol:
        raise ValueError("vector is not an eigenvector of the operator")
    return float(lam.real)


def expectation(obs: np.ndarray, state: QuantumState) -> float:
    obs = _check_matrix(obs)
    if not is_hermitian(obs):
        raise ValueError("observable is not Hermitian")
    if obs.shape[0] != state.dim:
        raise ValueError(f"observable dim {obs.shape[0]} does not match state dim {state.dim}")
    if state.kind == "pure":
        val = np.vdot(state.data, obs @ state.data)
    else:
        val = np.trace(state.data @ obs)
    if abs(val.imag) > IMAG_TOL:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def bloch_norm_check(state: QuantumState) -> float:
    """Squared Bloch-vector length <sx>^2 + <sy>^2 + <sz>^2 of a single-qubit state."""
    if state.dim != 2:
        raise ValueError("bloch_norm_check needs a single-qubit state")
    return sum(expectation(_PAULI[k], state) ** 2 for k in "xyz")


def robertson_schrodinger_check(a: np.ndarray, b: np.ndarray, state: QuantumState) -> tuple[float, float]:
    """Both sides of Var(A) Var(B) >= (<C>^2 + <F>^2) / 4 with [A, B] = iC.

    F is the symmetrized covariance operator AB + BA - 2<A><B>.
    """
    a = _check_matrix(a)
    b = _check_matrix(b)
    if not (is_hermitian(a) and is_hermitian(b)):
        raise ValueError("both operators must be Hermitian")
    ea = expectation(a, state)
    eb = expectation(b, state)
    var_a = expectation(a @ a, state) - ea**2
    var_b = expectation(b @ b, state) - eb**2
    c = -1j * commutator(a, b)
    c = (c + c.conj().T) / 2
    anti = a @ b + b @ a
    anti = (anti + anti.conj().T) / 2
    e_f = expectation(anti, state) - 2 * ea * eb
    e_c = expectation(c, state)
    return var_a * var_b, (e_c**2 + e_f**2) / 4
