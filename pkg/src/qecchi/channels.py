"""Single-qubit noise channels and their Kraus / chi / Choi / transfer-matrix forms.

Process matrices use the normalized Pauli basis {I, X, Y, Z}/sqrt(2), so a
trace-preserving channel has ``trace(chi) == 2`` and the identity channel is
``diag(2, 0, 0, 0)``. Divide by 2 to get the trace-1 convention.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    I2,
    PAULIS,
    PSD_TOL,
    STRUCT_TOL,
    X,
    Y,
    Z,
    dagger,
    hermitian_eigendecomposition,
    n_qubits_of,
    pauli_basis,
    tensor,
)

TAGS = ("ADC", "PolPi8", "RZ", "RH", "DC", "Pauli", "CMCMixture", "Identity")
_BASIS = np.array([pauli_basis(i) for i in range(4)])


class NotCompletelyPositiveError(ValueError):
    def __init__(self, min_eigenvalue: float):
        super().__init__(f"process matrix is not completely positive (eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must be square and of equal size")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ dagger(k) for k in self.operators)

    def completeness_error(self) -> float:
        s = sum(dagger(k) @ k for k in self.operators)
        return float(np.max(np.abs(s - np.eye(self.dim))))


def validate_cptp(k: KrausChannel, tol: float = PSD_TOL) -> KrausChannel:
    err = k.completeness_error()
    if err > tol:
        raise ValueError(f"channel {k.label!r} is not trace preserving (deviation {err:.3e})")
    return k


def unitary_channel(u: np.ndarray, label: str = "") -> KrausChannel:
    return KrausChannel((np.asarray(u, dtype=complex),), label)


def identity_channel() -> KrausChannel:
    return KrausChannel((I2,), "Identity")


def compose(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel applying ``first`` then ``second``."""
    ops = tuple(b @ a for a in first.operators for b in second.operators)
    return KrausChannel(ops, f"{second.label}*{first.label}")


def mixture(channels: Sequence[KrausChannel], weights: Sequence[float], label: str = "") -> KrausChannel:
    """Convex combination sum_i w_i E_i, realised by scaling each member's Kraus operators."""
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(channels):
        raise ValueError("need one weight per channel")
    if np.any(weights < -STRUCT_TOL) or abs(weights.sum() - 1) > 1e-9:
        raise ValueError("mixture weights must form a probability vector")
    ops = [np.sqrt(max(w, 0.0)) * k for w, ch in zip(weights, channels) if w > 0 for k in ch.operators]
    if not ops:
        ops = [np.zeros((channels[0].dim,) * 2, dtype=complex)]
    return KrausChannel(tuple(ops), label)


# --- parametric models -----------------------------------------------------

@dataclass(frozen=True)
class ChannelModel:
    """A tagged parametric noise family.

    ``strength`` is the damping gamma (ADC), probability p (PolPi8, DC) or the
    rotation angle theta in radians (RZ, RH). ``extra`` carries (p_x, p_y, p_z)
    for Pauli channels and the mixture weights for CMCMixture (ordered like
    ``elementary_set()``); both ignore ``strength``.
    """

    tag: str
    strength: float = 0.0
    extra: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown channel tag {self.tag!r}; expected one of {TAGS}")
        object.__setattr__(self, "strength", float(self.strength))
        object.__setattr__(self, "extra", tuple(float(e) for e in self.extra))
        s = self.strength
        if self.tag in ("ADC", "PolPi8", "DC") and not 0 <= s <= 1:
            raise ValueError(f"{self.tag} strength must lie in [0, 1], got {s}")
        if self.tag in ("RZ", "RH") and not 0 <= s < np.pi:
            raise ValueError(f"rotation angle must lie in [0, pi), got {s}")
        if self.tag == "Pauli":
            p = np.asarray(self.extra)
            if p.shape != (3,) or np.any(p < 0) or p.sum() > 1 + STRUCT_TOL:
                raise ValueError("Pauli model needs extra=(p_x, p_y, p_z) with a sum <= 1")
        if self.tag == "CMCMixture":
            w = np.asarray(self.extra)
            if np.any(w < -STRUCT_TOL) or abs(w.sum() - 1) > 1e-9:
                raise ValueError("CMCMixture weights must form a probability vector")

    def with_strength(self, strength: float) -> "ChannelModel":
        return ChannelModel(self.tag, strength, self.extra)

    def to_dict(self) -> dict:
        return {"tag": self.tag, "strength": self.strength, "extra": list(self.extra)}


def rotation(axis: Sequence[float], angle: float) -> np.ndarray:
    """exp(-i angle n.sigma / 2) for a unit axis n."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    gen = n[0] * X + n[1] * Y + n[2] * Z
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * gen


_H_AXIS = (1 / np.sqrt(2), 0.0, 1 / np.sqrt(2))


def kraus_of_model(m: ChannelModel) -> KrausChannel:
    s = m.strength
    if m.tag == "Identity":
        return identity_channel()
    if m.tag == "ADC":
        k0 = np.array([[1, 0], [0, np.sqrt(1 - s)]], dtype=complex)
        k1 = np.array([[0, np.sqrt(s)], [0, 0]], dtype=complex)
        return KrausChannel((k0, k1), f"ADC({s:g})")
    if m.tag == "PolPi8":
        a = np.cos(np.pi / 8) * X + np.sin(np.pi / 8) * Y
        return KrausChannel((np.sqrt(1 - s) * I2, np.sqrt(s) * a), f"PolPi8({s:g})")
    if m.tag == "RZ":
        return KrausChannel((rotation((0, 0, 1), s),), f"RZ({s:g})")
    if m.tag == "RH":
        return KrausChannel((rotation(_H_AXIS, s),), f"RH({s:g})")
    if m.tag == "DC":
        q = np.sqrt(s / 3)
        return KrausChannel((np.sqrt(1 - s) * I2, q * X, q * Y, q * Z), f"DC({s:g})")
    if m.tag == "Pauli":
        px, py, pz = m.extra
        ops = [np.sqrt(max(1 - px - py - pz, 0.0)) * I2, np.sqrt(px) * X, np.sqrt(py) * Y, np.sqrt(pz) * Z]
        return KrausChannel(tuple(ops), f"Pauli({px:g},{py:g},{pz:g})")
    members = elementary_set().members
    if len(m.extra) != len(members):
        raise ValueError(f"CMCMixture needs {len(members)} weights, got {len(m.extra)}")
    return mixture(members, m.extra, "CMCMixture")


# --- representations -------------------------------------------------------

def pauli_coefficients(k: np.ndarray) -> np.ndarray:
    """Coefficients a_m with K = sum_m a_m sigma_m / sqrt(2); leading batch axes are kept."""
    return np.einsum("mij,...ji->...m", _BASIS, k)  # Tr(B_m K), B_m Hermitian


def chi_from_kraus(k: KrausChannel) -> np.ndarray:
    """Process matrix chi_mn = sum_k a_km conj(a_kn) (trace 2 for a CPTP map)."""
    if k.dim != 2:
        raise ValueError("process matrices are defined here for single-qubit channels only")
    a = np.array([pauli_coefficients(op) for op in k.operators])
    return a.T @ a.conj()


def check_chi(chi: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Raise unless ``chi`` is a Hermitian, trace-2, completely positive process matrix."""
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (4, 4):
        raise ValueError("process matrix must be 4x4")
    if np.max(np.abs(chi - dagger(chi))) > STRUCT_TOL * max(1.0, np.max(np.abs(chi))):
        raise ValueError("process matrix is not Hermitian")
    if abs(np.trace(chi) - 2) > PSD_TOL:
        raise ValueError(f"process matrix has trace {np.trace(chi).real:.12g}, expected 2")
    lam = hermitian_eigendecomposition(chi)[0][0]
    if lam < -tol:
        raise NotCompletelyPositiveError(float(lam))
    return chi


def kraus_from_chi(chi: np.ndarray, tol: float = 1e-9) -> KrausChannel:
    chi = np.asarray(chi, dtype=complex)
    lam, vecs = hermitian_eigendecomposition(chi)
    if lam[0] < -tol:
        raise NotCompletelyPositiveError(float(lam[0]))
    ops = [np.sqrt(l) * np.einsum("m,mij->ij", vecs[:, j], _BASIS) for j, l in enumerate(lam) if l > tol * 1e-3]
    if not ops:
        ops = [np.zeros((2, 2), dtype=complex)]
    return KrausChannel(tuple(ops), "from_chi")


def twirl(chi: np.ndarray) -> np.ndarray:
    """Pauli twirl: keep the diagonal of chi, drop every coherence."""
    return np.diag(np.diag(np.asarray(chi, dtype=complex)))


def pauli_probabilities(chi: np.ndarray) -> np.ndarray:
    """(p_I, p_X, p_Y, p_Z) of the twirled channel."""
    return np.real(np.diag(chi)) / 2


def choi_of(k: KrausChannel) -> np.ndarray:
    """J = sum_ij |i><j| (input) tensor E(|i><j|) (output)."""
    d = k.dim
    j = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[a, b] = 1
            j += np.kron(e, k(e))
    return j


def chi_from_choi(j: np.ndarray) -> np.ndarray:
    """Inverse of the Choi construction for a single qubit: chi_mn = <<B_m| J |B_n>>."""
    v = np.array([b.T.reshape(-1) for b in _BASIS])  # (I tensor B)|Omega>
    return v.conj() @ j @ v.T


def transfer_matrix(k: KrausChannel) -> np.ndarray:
    """Real Pauli transfer matrix R_ij = Tr(sigma_i E(sigma_j)) / 2."""
    if k.dim != 2:
        raise ValueError("transfer matrices are defined here for single-qubit channels only")
    return np.array([[np.real(np.trace(PAULIS[i] @ k(PAULIS[j]))) / 2 for j in range(4)] for i in range(4)])


def transfer_from_chi(chi: np.ndarray) -> np.ndarray:
    """Pauli transfer matrix of the map rho -> sum chi_mn B_m rho B_n^dagger."""
    chi = np.asarray(chi, dtype=complex)
    out = np.empty((4, 4))
    for j in range(4):
        img = np.einsum("mn,mab,bc,ndc->ad", chi, _BASIS, PAULIS[j], _BASIS.conj())
        for i in range(4):
            out[i, j] = np.real(np.trace(PAULIS[i] @ img)) / 2
    return out


def apply(k: KrausChannel, rho: np.ndarray, target_qubit: int) -> np.ndarray:
    """Apply a single-qubit channel to one qubit of an n-qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho)
    if not 0 <= target_qubit < n:
        raise IndexError(f"qubit {target_qubit} out of range for a {n}-qubit register")
    return apply_local(k.operators, rho, target_qubit, n)


def apply_local(ops: Sequence[np.ndarray], rho: np.ndarray, q: int, n: int) -> np.ndarray:
    """Sum_k K rho K^dagger with K on qubit ``q``; ``rho`` may carry leading batch axes."""
    batch = rho.shape[:-2]
    lo, hi = 2**q, 2 ** (n - q - 1)
    t = rho.reshape(batch + (lo, 2, hi, lo, 2, hi))
    out = np.zeros_like(t)
    for k in ops:
        out += np.einsum("ab,...ibjkcl,dc->...iajkdl", k, t, k.conj(), optimize=True)
    return out.reshape(rho.shape)


# --- elementary (stabilizer-simulable) channels -------------------------------

_EDGE = [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]
_VERTEX = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)]


def clifford_rotations() -> list[tuple[tuple[int, int, int], float]]:
    """The 24 single-qubit Cliffords as (axis, angle), sorted by (axis, angle); identity first."""
    rots = [((0, 0, 0), 0.0)]
    for axis in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
        rots += [(axis, a) for a in (np.pi / 2, np.pi, 3 * np.pi / 2)]
    rots += [(axis, np.pi) for axis in _EDGE]
    rots += [(axis, a) for axis in _VERTEX for a in (2 * np.pi / 3, 4 * np.pi / 3)]
    return [rots[0]] + sorted(rots[1:], key=lambda r: (r[0], r[1]))


_ANGLE_NAMES = {np.pi / 2: "pi/2", np.pi: "pi", 3 * np.pi / 2: "3pi/2", 2 * np.pi / 3: "2pi/3", 4 * np.pi / 3: "4pi/3"}

# The six Pauli eigenstates as (name, axis index, sign).
EIGENSTATES = [("+x", 0, 1), ("-x", 0, -1), ("+y", 1, 1), ("-y", 1, -1), ("+z", 2, 1), ("-z", 2, -1)]


def eigenstate(axis: int, sign: int) -> np.ndarray:
    _, vecs = np.linalg.eigh(PAULIS[axis + 1])
    return vecs[:, 1] if sign > 0 else vecs[:, 0]


def translation_channel(axis: int, target: tuple[int, int]) -> KrausChannel:
    """Measure Pauli ``axis`` and move either outcome onto the eigenstate ``target``.

    Kraus pair {|b><+a|, |b><-a|}.
    """
    b = eigenstate(*target)
    ops = tuple(np.outer(b, eigenstate(axis, s).conj()) for s in (1, -1))
    return KrausChannel(ops, f"translate:{'xyz'[axis]}->{'+' if target[1] > 0 else '-'}{'xyz'[target[0]]}")


@dataclass(frozen=True)
class ElementaryChannelSet:
    members: tuple[KrausChannel, ...]
    ids: tuple[str, ...]
    pauli_only: bool

    def __len__(self) -> int:
        return len(self.members)

    def chis(self) -> np.ndarray:
        return np.array([chi_from_kraus(m) for m in self.members])

    def index(self, member_id: str) -> int:
        return self.ids.index(member_id)


def _clifford_id(axis, angle) -> str:
    if angle == 0:
        return "clifford:I"
    return f"clifford:({axis[0]},{axis[1]},{axis[2]}):{_ANGLE_NAMES[angle]}"


_PAULI_IDS = {"clifford:I": "I", "clifford:(1,0,0):pi": "X", "clifford:(0,1,0):pi": "Y", "clifford:(0,0,1):pi": "Z"}


def elementary_set(pauli_only: bool = False) -> ElementaryChannelSet:
    """Stabilizer-simulable building blocks for approximate channels.

    The full set holds the 24 Clifford unitaries followed by the six
    measurement-induced translations, one per target Pauli eigenstate. A
    translation onto |b> gives the same channel (reset to |b>) whatever axis is
    measured, so only the axis of ``b`` itself is kept. ``pauli_only`` returns
    {I, X, Y, Z}.
    """
    if pauli_only:
        ids = ("I", "X", "Y", "Z")
        return ElementaryChannelSet(tuple(unitary_channel(p, i) for p, i in zip(PAULIS, ids)), ids, True)
    members, ids = [], []
    for axis, angle in clifford_rotations():
        cid = _clifford_id(axis, angle)
        u = I2 if angle == 0 else rotation(axis, angle)
        members.append(unitary_channel(u, _PAULI_IDS.get(cid, cid)))
        ids.append(cid)
    for name, axis, sign in EIGENSTATES:
        ch = translation_channel(axis, (axis, sign))
        members.append(ch)
        ids.append(f"translate:{name}")
    return ElementaryChannelSet(tuple(members), tuple(ids), False)


def random_channel(rng: np.random.Generator, n_kraus: int = 2, dim: int = 2) -> KrausChannel:
    """Random CPTP map from a Haar-like isometry (test and benchmarking helper)."""
    g = rng.normal(size=(dim * n_kraus, dim)) + 1j * rng.normal(size=(dim * n_kraus, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return KrausChannel(tuple(q[i * dim:(i + 1) * dim] for i in range(n_kraus)), "random")


def embed_single(op: np.ndarray, qubit: int, n: int) -> np.ndarray:
    return tensor(*(op if q == qubit else I2 for q in range(n)))


def chi_of_model(m: ChannelModel) -> np.ndarray:
    return chi_from_kraus(kraus_of_model(m))


def all_pauli_strings(n: int):
    return ("".join(p) for p in itertools.product("IXYZ", repeat=n))
