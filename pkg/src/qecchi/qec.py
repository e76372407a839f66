"""Stabilizer codes under perfect error correction and their logical process matrices.

The circuit is: encode one qubit with the isometry V, apply the same
single-qubit noise channel independently to every data qubit, measure all
stabilizer generators perfectly, apply the decoder-table correction and
decode with V^dagger.

Two routes compute the logical process matrix.

* ``method="tomography"`` pushes the four inputs |0>, |1>, |+>, |+i> through
  the full density-matrix circuit and inverts linearly. It also measures the
  trace weight that leaks out of the codespace.
* ``method="kraus"`` (the default) forms the logical Kraus operators
  ``V^dagger C_s P_s (K_1 x ... x K_n) V`` branch by branch. The process
  matrix is then a sum of outer products of small Pauli coefficients, so
  entries of order theta^4 keep full relative precision.

Both routes describe the same map and agree to rounding error.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .channels import (
    ChannelModel,
    KrausChannel,
    apply_local,
    chi_from_choi,
    kraus_from_chi,
    kraus_of_model,
    pauli_coefficients,
)
from .core import I2, X, PauliString, dagger

NoiseLike = Union[ChannelModel, KrausChannel, np.ndarray]

LEAKAGE_TOL = 1e-10
MAX_QUBITS = 10
CODE_NAMES = ("bitflip3", "steane7")


class LeakageError(RuntimeError):
    pass


def _syndrome_of(error: PauliString, generators: Sequence[PauliString]) -> str:
    return "".join("0" if error.commutes_with(g) else "1" for g in generators)


def _min_weight_table(n: int, generators: Sequence[PauliString]) -> dict[str, PauliString]:
    """Lowest-weight Pauli for every syndrome; earlier qubits and X before Y before Z win ties."""
    table: dict[str, PauliString] = {}
    total = 2 ** len(generators)
    for w in range(n + 1):
        for support in itertools.combinations(range(n), w):
            for letters in itertools.product("XYZ", repeat=w):
                chars = ["I"] * n
                for q, c in zip(support, letters):
                    chars[q] = c
                err = PauliString("".join(chars))
                table.setdefault(_syndrome_of(err, generators), err)
            if len(table) == total:
                return table
    return table


def _encoding_isometry(generators, logical_x, logical_z) -> np.ndarray:
    dim = 2 ** len(logical_z)
    proj = np.eye(dim, dtype=complex)
    for g in list(generators) + [logical_z]:
        proj = proj @ (np.eye(dim) + g.matrix()) / 2
    col = int(np.argmax(np.linalg.norm(proj, axis=0)))
    zero = proj[:, col]
    zero = zero / np.linalg.norm(zero)
    k = int(np.argmax(np.abs(zero)))
    zero = zero * abs(zero[k]) / zero[k]
    return np.column_stack([zero, logical_x.matrix() @ zero])


@dataclass(frozen=True)
class CodeSpec:
    """A stabilizer code with one logical qubit and a syndrome lookup decoder.

    Syndrome bit i is 1 when generator i reads -1. ``decoder_table`` may be
    partial; syndromes missing from it are left uncorrected.
    """

    name: str
    generators: tuple[PauliString, ...]
    logical_x: PauliString
    logical_z: PauliString
    decoder_table: Mapping[str, PauliString] = field(default_factory=dict)
    encoding_isometry: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.logical_z)
        if not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"codes need 1..{MAX_QUBITS} data qubits, got {n}")
        ops = list(self.generators) + [self.logical_x, self.logical_z]
        if any(len(p) != n for p in ops):
            raise ValueError("all Pauli strings must act on the same number of qubits")
        for a, b in itertools.combinations(self.generators, 2):
            if not a.commutes_with(b):
                raise ValueError(f"generators {a} and {b} anticommute")
        for g in self.generators:
            if not (g.commutes_with(self.logical_x) and g.commutes_with(self.logical_z)):
                raise ValueError(f"generator {g} does not commute with the logical operators")
        if self.logical_x.commutes_with(self.logical_z):
            raise ValueError("logical X and Z must anticommute")
        for s, c in self.decoder_table.items():
            if len(s) != len(self.generators) or set(s) - {"0", "1"}:
                raise ValueError(f"malformed syndrome key {s!r}")
            if len(c) != n or _syndrome_of(c, self.generators) != s:
                raise ValueError(f"correction {c} does not produce syndrome {s}")
        v = self.encoding_isometry
        if v is None:
            v = _encoding_isometry(self.generators, self.logical_x, self.logical_z)
        v = np.asarray(v, dtype=complex)
        if v.shape != (2**n, 2) or not np.allclose(dagger(v) @ v, I2, atol=1e-12):
            raise ValueError("encoding isometry must be a 2^n x 2 matrix with V^dagger V = I")
        object.__setattr__(self, "encoding_isometry", v)
        object.__setattr__(self, "decoder_table", dict(self.decoder_table))

    @property
    def n(self) -> int:
        return len(self.logical_z)

    @property
    def dim(self) -> int:
        return 2**self.n

    def syndrome(self, error: PauliString) -> str:
        return _syndrome_of(error, self.generators)

    def correction(self, syndrome: str) -> PauliString:
        return self.decoder_table.get(syndrome, PauliString("I" * self.n))

    def corrects(self, error: PauliString) -> bool:
        """True when correcting ``error`` leaves an element of the stabilizer group."""
        residual = self.correction(self.syndrome(error)) * error
        return self.syndrome(residual) == "0" * len(self.generators) and all(
            residual.commutes_with(l) for l in (self.logical_x, self.logical_z)
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "generators": [str(g) for g in self.generators],
            "logical_x": str(self.logical_x),
            "logical_z": str(self.logical_z),
            "decoder_table": {s: str(c) for s, c in sorted(self.decoder_table.items())},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CodeSpec":
        unknown = set(d) - {"name", "generators", "logical_x", "logical_z", "decoder_table"}
        if unknown:
            raise ValueError(f"unknown code fields {sorted(unknown)}")
        gens = tuple(PauliString.parse(g) for g in d["generators"])
        n = len(PauliString.parse(d["logical_z"]))
        table = d.get("decoder_table")
        table = _min_weight_table(n, gens) if table is None else {s: PauliString.parse(c) for s, c in table.items()}
        return cls(d.get("name", "custom"), gens, PauliString.parse(d["logical_x"]), PauliString.parse(d["logical_z"]), table)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_code(name: str) -> CodeSpec:
    if name == "bitflip3":
        gens = ("ZZI", "IZZ")
        lx, lz = "XXX", "ZZZ"
    elif name == "steane7":
        rows = ("IIIXXXX", "IXXIIXX", "XIXIXIX")
        gens = rows + tuple(r.replace("X", "Z") for r in rows)
        lx, lz = "X" * 7, "Z" * 7
    else:
        raise ValueError(f"unknown code {name!r}; expected one of {CODE_NAMES}")
    gens = tuple(PauliString(g) for g in gens)
    n = len(lz)
    return CodeSpec(name, gens, PauliString(lx), PauliString(lz), _min_weight_table(n, gens))


# --- density-matrix circuit -------------------------------------------------

def syndrome_projectors(code: CodeSpec) -> dict[str, np.ndarray]:
    """Projector onto each joint syndrome space, keyed by syndrome bitstring."""
    mats = [g.matrix() for g in code.generators]
    eye = np.eye(code.dim, dtype=complex)
    out = {}
    for bits in itertools.product("01", repeat=len(mats)):
        p = eye
        for b, g in zip(bits, mats):
            p = p @ (eye + (1 if b == "0" else -1) * g) / 2
        out["".join(bits)] = p
    return out


def _branch_operators(code: CodeSpec) -> np.ndarray:
    """C_s P_s for every syndrome s, stacked along the first axis (cached on the code)."""
    cached = code.__dict__.get("_branches")
    if cached is None:
        cached = np.array([code.correction(s).matrix() @ p for s, p in syndrome_projectors(code).items()])
        object.__setattr__(code, "_branches", cached)
    return cached


def codespace_projector(code: CodeSpec) -> np.ndarray:
    v = code.encoding_isometry
    return v @ dagger(v)


def encode(code: CodeSpec, rho1: np.ndarray) -> np.ndarray:
    rho1 = np.asarray(rho1, dtype=complex)
    if rho1.shape[-2:] != (2, 2):
        raise ValueError(f"expected a single-qubit density matrix, got shape {rho1.shape}")
    v = code.encoding_isometry
    return v @ rho1 @ dagger(v)


def decode(code: CodeSpec, rho: np.ndarray) -> np.ndarray:
    v = code.encoding_isometry
    return dagger(v) @ rho @ v


def perfect_ec(code: CodeSpec, rho: np.ndarray) -> np.ndarray:
    """Sum over syndromes of C_s P_s rho P_s C_s^dagger; ``rho`` may carry leading batch axes."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (code.dim, code.dim):
        raise ValueError(f"state has shape {rho.shape}, code needs {code.dim}x{code.dim}")
    out = np.zeros_like(rho)
    for m in _branch_operators(code):
        out += m @ rho @ dagger(m)
    return out


def noisy_register(code: CodeSpec, rho: np.ndarray, noise: KrausChannel) -> np.ndarray:
    for q in range(code.n):
        rho = apply_local(noise.operators, rho, q, code.n)
    return rho


# --- logical channel --------------------------------------------------------

TOMOGRAPHY_INPUTS = np.array([
    [1, 0],
    [0, 1],
    [1 / np.sqrt(2), 1 / np.sqrt(2)],
    [1 / np.sqrt(2), 1j / np.sqrt(2)],
], dtype=complex)


def tomography_inputs() -> np.ndarray:
    """Density matrices of |0>, |1>, |+>, |+i>, shape (4, 2, 2)."""
    return np.einsum("ki,kj->kij", TOMOGRAPHY_INPUTS, TOMOGRAPHY_INPUTS.conj())


def chi_from_tomography(outputs: np.ndarray) -> np.ndarray:
    """Linear-inversion process matrix from the images of |0>, |1>, |+>, |+i>."""
    e0, e1, ep, ei = np.asarray(outputs, dtype=complex)
    e01 = ep + 1j * ei - (1 + 1j) / 2 * (e0 + e1)
    e10 = ep - 1j * ei - (1 - 1j) / 2 * (e0 + e1)
    choi = np.zeros((4, 4), dtype=complex)
    for (i, j), img in {(0, 0): e0, (0, 1): e01, (1, 0): e10, (1, 1): e1}.items():
        unit = np.zeros((2, 2))
        unit[i, j] = 1
        choi += np.kron(unit, img)
    return chi_from_choi(choi)


@dataclass(frozen=True)
class LogicalChannelResult:
    chi: np.ndarray
    codespace_leakage: float
    strengths_used: tuple[float, ...]
    method: str


def _as_kraus(noise: NoiseLike, strength: float | None) -> tuple[KrausChannel, float]:
    if isinstance(noise, ChannelModel):
        model = noise if strength is None else noise.with_strength(strength)
        k = kraus_of_model(model)
        if len(k.operators) > 4:
            k = kraus_from_chi(_chi_of(k))
        return k, model.strength
    if isinstance(noise, KrausChannel):
        return noise, float("nan") if strength is None else float(strength)
    return kraus_from_chi(np.asarray(noise, dtype=complex)), float("nan") if strength is None else float(strength)


def _chi_of(k: KrausChannel) -> np.ndarray:
    a = pauli_coefficients(np.array(k.operators))
    return a.T @ a.conj()


def logical_kraus(code: CodeSpec, noise: KrausChannel) -> np.ndarray:
    """All logical Kraus operators V^dagger C_s P_s (K_t1 x ... x K_tn) V, shape (m, 2, 2)."""
    n = code.n
    w = code.encoding_isometry.reshape((1,) + (2,) * n + (2,))
    ops = np.array(noise.operators)
    for q in range(n):
        # tensordot yields (r, out, batch, other qubits..., logical); put `out` back at qubit q
        w = np.moveaxis(np.tensordot(ops, w, axes=([2], [q + 1])), 1, q + 2)
        w = w.reshape((-1,) + (2,) * n + (2,))
    w = w.reshape(-1, code.dim, 2)
    d = dagger(code.encoding_isometry)[None] @ _branch_operators(code)  # (S, 2, dim)
    k = np.einsum("sad,tdb->tsab", d, w, optimize=True).reshape(-1, 2, 2)
    keep = np.einsum("kab,kab->k", k, k.conj()).real > 0
    return k[keep]


def logical_channel(
    code: CodeSpec,
    noise: NoiseLike,
    strength: float | None = None,
    method: str = "kraus",
) -> LogicalChannelResult:
    """Effective single-qubit process matrix of encode, i.i.d. noise, perfect EC and decode."""
    k, s = _as_kraus(noise, strength)
    if k.dim != 2:
        raise ValueError("noise must be a single-qubit channel")
    if method == "kraus":
        ops = logical_kraus(code, k)
        a = pauli_coefficients(ops)
        chi = a.T @ a.conj()
        leakage = abs(1 - float(np.real(np.trace(chi))) / 2)
    elif method == "tomography":
        rho = perfect_ec(code, noisy_register(code, encode(code, tomography_inputs()), k))
        kept = np.real(np.einsum("ij,kji->k", codespace_projector(code), rho))
        leakage = float(np.max(np.abs(np.real(np.trace(rho, axis1=1, axis2=2)) - kept)))
        chi = chi_from_tomography(decode(code, rho))
    else:
        raise ValueError(f"unknown method {method!r}; expected 'kraus' or 'tomography'")
    if leakage > LEAKAGE_TOL:
        raise LeakageError(f"codespace leakage {leakage:.3e} exceeds {LEAKAGE_TOL:g}; check the decoder table")
    return LogicalChannelResult(chi, leakage, (s,), method)


def logical_chi(code: CodeSpec, noise: NoiseLike, strength: float | None = None) -> np.ndarray:
    return logical_channel(code, noise, strength).chi


# --- bit-flip closed forms --------------------------------------------------

BITFLIP_NOISE = ("flip", "rx", "twirled_rx")


def bitflip_closed_form(noise: str, strength: float) -> np.ndarray:
    """Logical process matrix of the 3-qubit bit-flip code under perfect EC, evaluated in closed form.

    ``strength`` is the flip probability p for ``flip`` and the angle theta for
    the rotation families, where p = sin^2(theta/2). The two-or-more-flip
    probability is 3p^2 - 2p^3. For coherent X rotations the no-flip and
    one-flip branches interfere with the three-flip and two-flip branches,
    giving chi_IX = 4i [p(1-p)]^(3/2).
    """
    if noise not in BITFLIP_NOISE:
        raise ValueError(f"unknown bit-flip noise {noise!r}; expected one of {BITFLIP_NOISE}")
    p = strength if noise == "flip" else np.sin(strength / 2) ** 2
    chi = np.zeros((4, 4), dtype=complex)
    chi[1, 1] = 2 * p**3 + 6 * (1 - p) * p**2
    chi[0, 0] = 2 * (1 - p) ** 3 + 6 * (1 - p) ** 2 * p
    if noise == "rx":
        chi[0, 1] = 4j * (p * (1 - p)) ** 1.5
        chi[1, 0] = -chi[0, 1]
    return chi


def bitflip_noise_model(noise: str, strength: float) -> KrausChannel:
    """The physical channel matching ``bitflip_closed_form(noise, strength)``."""
    if noise == "flip":
        return KrausChannel((np.sqrt(1 - strength) * I2, np.sqrt(strength) * X), f"flip({strength:g})")
    c, s = np.cos(strength / 2), np.sin(strength / 2)
    if noise == "rx":
        return KrausChannel((c * I2 - 1j * s * X,), f"RX({strength:g})")
    if noise == "twirled_rx":
        return KrausChannel((c * I2, s * X), f"twirled RX({strength:g})")
    raise ValueError(f"unknown bit-flip noise {noise!r}; expected one of {BITFLIP_NOISE}")
