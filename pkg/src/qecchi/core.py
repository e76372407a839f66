"""Dense linear algebra and qubit-register primitives.

Matrices are plain ``numpy`` complex arrays. Qubit 0 is the most significant
tensor factor, so ``tensor(a, b)`` puts ``a`` on qubit 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

# Tolerance ladder used throughout the package.
STRUCT_TOL = 1e-12
PSD_TOL = 1e-10
SOLVER_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)
PAULI_LETTERS = "IXYZ"
_LETTER_INDEX = {c: i for i, c in enumerate(PAULI_LETTERS)}


def tensor(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of the arguments, left factor on the lowest qubit index."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, mats)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def matmul(*mats: np.ndarray) -> np.ndarray:
    return reduce(np.matmul, mats)


def _require_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")


def trace_norm(a: np.ndarray) -> float:
    """Schatten 1-norm Tr sqrt(A^dagger A), i.e. the sum of singular values."""
    a = np.asarray(a)
    _require_square(a)
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def is_hermitian(a: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def hermitian_eigendecomposition(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of the Hermitian part of ``a``."""
    a = np.asarray(a, dtype=complex)
    _require_square(a)
    return np.linalg.eigh((a + dagger(a)) / 2)


def psd_check(a: np.ndarray, tol: float = PSD_TOL) -> bool:
    """True when ``a`` is Hermitian and its smallest eigenvalue is at least ``-tol``."""
    a = np.asarray(a, dtype=complex)
    _require_square(a)
    if not is_hermitian(a, tol=max(tol, STRUCT_TOL) * max(1.0, np.max(np.abs(a)))):
        return False
    return bool(hermitian_eigendecomposition(a)[0][0] >= -tol)


def partial_trace(rho: np.ndarray, keep: Iterable[int], n_qubits: int | None = None) -> np.ndarray:
    """Reduce an n-qubit operator to the qubits listed in ``keep`` (in their original order)."""
    rho = np.asarray(rho)
    _require_square(rho)
    if n_qubits is None:
        n_qubits = int(round(np.log2(rho.shape[0])))
    if rho.shape[0] != 2**n_qubits:
        raise ValueError("operator dimension does not match the register size")
    keep = sorted(set(keep))
    if any(q < 0 or q >= n_qubits for q in keep):
        raise IndexError(f"qubit index out of range for {n_qubits} qubits")
    traced = [q for q in range(n_qubits) if q not in keep]
    t = rho.reshape([2] * (2 * n_qubits))
    # trace out from the highest index down so the remaining axes keep their positions
    for q in sorted(traced, reverse=True):
        n_now = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + n_now)
    d = 2 ** len(keep)
    return t.reshape(d, d)


def pauli_basis(i: int) -> np.ndarray:
    """Element ``i`` of the Hilbert-Schmidt orthonormal basis {I, X, Y, Z}/sqrt(2)."""
    if i not in (0, 1, 2, 3):
        raise IndexError(f"Pauli basis index must be 0..3, got {i}")
    return PAULIS[i] / np.sqrt(2)


def pure_state(amplitudes: Sequence[complex]) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > STRUCT_TOL:
        raise ValueError(f"state vector has norm {norm}, expected 1")
    if psi.size & (psi.size - 1):
        raise ValueError("state vector length must be a power of two")
    return psi


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, unit trace, PSD) and return it as complex."""
    rho = np.asarray(rho, dtype=complex)
    _require_square(rho)
    if rho.shape[0] & (rho.shape[0] - 1):
        raise ValueError("density matrix dimension must be a power of two")
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real}")
    if hermitian_eigendecomposition(rho)[0][0] < -PSD_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def n_qubits_of(a: np.ndarray) -> int:
    n = int(round(np.log2(a.shape[0])))
    if 2**n != a.shape[0]:
        raise ValueError("dimension is not a power of two")
    return n


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm() > 1 + PSD_TOL:
            raise ValueError(f"Bloch vector norm {self.norm()} exceeds 1")

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def bloch_of(rho: np.ndarray) -> BlochVector:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("bloch_of expects a single-qubit density matrix")
    return BlochVector(*(float(np.real(np.trace(rho @ p))) for p in (X, Y, Z)))


def density_of(v: BlochVector | Sequence[float]) -> np.ndarray:
    x, y, z = v.as_array() if isinstance(v, BlochVector) else v
    return (I2 + x * X + y * Y + z * Z) / 2


def state_from_bloch(n: Sequence[float]) -> np.ndarray:
    """Pure qubit state with unit Bloch vector ``n`` (global phase fixed by a real first amplitude)."""
    x, y, z = n
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` near-uniform unit vectors on the sphere (Fibonacci lattice), shape (n, 3).

    Deterministic and seedless; no point sits exactly on a pole.
    """
    if n < 1:
        raise ValueError("need at least one point")
    i = np.arange(n)
    z = 1 - (2 * i + 1) / n
    r = np.sqrt(1 - z * z)
    phi = i * np.pi * (3 - np.sqrt(5))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


_PHASES = {1: "+", -1: "-", 1j: "+i", -1j: "-i"}


@dataclass(frozen=True)
class PauliString:
    """A phased tensor product of single-qubit Paulis, e.g. ``PauliString.parse("-iXYZ")``."""

    letters: str
    phase: complex = 1

    def __post_init__(self):
        if any(c not in _LETTER_INDEX for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        if complex(self.phase) not in _PHASES:
            raise ValueError(f"phase must be one of +1, -1, +i, -i, got {self.phase}")
        object.__setattr__(self, "phase", complex(self.phase))

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        text = text.strip()
        for prefix, phase in (("+i", 1j), ("-i", -1j), ("i", 1j), ("+", 1), ("-", -1)):
            if text.startswith(prefix) and text[len(prefix):] and text[len(prefix)] in _LETTER_INDEX:
                return cls(text[len(prefix):], phase)
        return cls(text, 1)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        return cls("".join(letter if q == qubit else "I" for q in range(n)))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        prefix = "" if self.phase == 1 else _PHASES[self.phase]
        return prefix + self.letters

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(_LETTER_INDEX[c] for c in self.letters)

    def matrix(self) -> np.ndarray:
        return self.phase * tensor(*(PAULIS[i] for i in self.indices))

    def commutes_with(self, other: "PauliString") -> bool:
        if len(self) != len(other):
            raise ValueError("Pauli strings act on different register sizes")
        anti = sum(a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters))
        return anti % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if len(self) != len(other):
            raise ValueError("Pauli strings act on different register sizes")
        phase = self.phase * other.phase
        out = []
        for a, b in zip(self.letters, other.letters):
            p = PAULIS[_LETTER_INDEX[a]] @ PAULIS[_LETTER_INDEX[b]]
            for k, q in enumerate(PAULIS):
                coeff = np.trace(q @ p) / 2
                if abs(coeff) > 0.5:
                    phase *= complex(np.round(coeff.real) + 1j * np.round(coeff.imag))
                    out.append(PAULI_LETTERS[k])
                    break
        return PauliString("".join(out), phase)
