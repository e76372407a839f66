"""Error magnitudes of a single-qubit channel relative to the identity.

Three measures are provided: the average error rate r (one minus the average
pure-state fidelity), the average trace distance between input and output
pure states, and the diamond distance.

Channels may be passed either as a ``KrausChannel`` or as a 4x4 process
matrix. Everything is computed from the deviation ``chi - chi_identity`` so
that tiny logical-level error rates keep full relative precision.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Union

import numpy as np

from .channels import KrausChannel, chi_from_kraus, transfer_from_chi
from .core import bloch_of, fibonacci_sphere, pauli_basis, projector, trace_norm
from .sdp import diamond_from_choi

ChannelLike = Union[KrausChannel, np.ndarray]

DEFAULT_STATES = 150
_VEC = np.array([pauli_basis(i).T.reshape(-1) for i in range(4)])


def as_chi(channel: ChannelLike) -> np.ndarray:
    if isinstance(channel, KrausChannel):
        return chi_from_kraus(channel)
    chi = np.asarray(channel, dtype=complex)
    if chi.shape != (4, 4):
        raise ValueError("expected a KrausChannel or a 4x4 process matrix")
    return chi


def chi_deviation(chi: np.ndarray) -> np.ndarray:
    """chi - diag(2,0,0,0), with the (I,I) entry rebuilt from the trace-2 condition."""
    d = np.array(chi, dtype=complex)
    d[0, 0] = -np.real(d[1, 1] + d[2, 2] + d[3, 3])
    return d


def deviation_transfer(channel: ChannelLike) -> np.ndarray:
    """R - I, the Pauli transfer matrix of E - Id."""
    return transfer_from_chi(chi_deviation(as_chi(channel)))


def choi_deviation(channel: ChannelLike) -> np.ndarray:
    """Choi matrix (input factor first) of the map E - Id."""
    return _VEC.T @ chi_deviation(as_chi(channel)) @ _VEC.conj()


def _unit_bloch(psi: np.ndarray) -> np.ndarray:
    return bloch_of(projector(psi)).as_array()


def error_rate_states(channel: ChannelLike, bloch: np.ndarray) -> np.ndarray:
    """1 - <psi|E(psi)|psi> for each pure state with unit Bloch vector in ``bloch`` (shape (n,3))."""
    d = deviation_transfer(channel)
    disp = bloch @ d[1:, 1:].T + d[1:, 0]
    return -0.5 * np.einsum("ij,ij->i", bloch, disp)


def trace_distance_states(channel: ChannelLike, bloch: np.ndarray) -> np.ndarray:
    """Half the trace norm of E(psi) - psi, i.e. half the Bloch displacement length."""
    d = deviation_transfer(channel)
    disp = bloch @ d[1:, 1:].T + d[1:, 0]
    return 0.5 * np.linalg.norm(disp, axis=1)


def error_rate_state(channel: ChannelLike, psi: np.ndarray) -> float:
    if isinstance(channel, KrausChannel):
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        rho = projector(psi)
        return float(1 - np.real(psi.conj() @ channel(rho) @ psi))
    return float(error_rate_states(channel, _unit_bloch(psi)[None])[0])


def trace_distance_state(channel: ChannelLike, psi: np.ndarray) -> float:
    if isinstance(channel, KrausChannel):
        rho = projector(psi)
        return 0.5 * trace_norm(channel(rho) - rho)
    return float(trace_distance_states(channel, _unit_bloch(psi)[None])[0])


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return float(np.mean(values)), std


def avg_error_rate(channel: ChannelLike, n_states: int | None = DEFAULT_STATES) -> tuple[float, float]:
    """Mean r = (chi_XX + chi_YY + chi_ZZ)/3 = (2 - chi_II)/3 and its spread over ``n_states`` states.

    The mean is always the exact average over the sphere. Pass ``n_states=None``
    to skip the sampled standard deviation (reported as 0).
    """
    chi = as_chi(channel)
    mean = float(np.real(chi[1, 1] + chi[2, 2] + chi[3, 3]) / 3)
    if not n_states:
        return mean, 0.0
    return mean, _mean_std(error_rate_states(chi, fibonacci_sphere(n_states)))[1]


def avg_trace_distance(channel: ChannelLike, states: int | np.ndarray = DEFAULT_STATES) -> tuple[float, float]:
    """Sample mean and standard deviation of the per-state trace distance.

    ``states`` is a sample size (Fibonacci lattice) or an explicit (n,3) array of unit Bloch vectors.
    """
    bloch = fibonacci_sphere(states) if np.isscalar(states) else np.asarray(states, dtype=float)
    if len(bloch) == 0:
        raise ValueError("need at least one state")
    return _mean_std(trace_distance_states(channel, bloch))


def diamond_distance(channel: ChannelLike) -> tuple[float, float]:
    """Half the diamond norm of E - Id, with the certified duality gap."""
    res = diamond_from_choi(choi_deviation(channel))
    return res.value, res.gap


@dataclass(frozen=True)
class MetricReport:
    avg_error_rate: float
    error_rate_std: float
    avg_trace_distance: float
    trace_distance_std: float
    diamond: float
    diamond_gap: float
    n_states_used: int
    method: str

    def __post_init__(self):
        for name in ("avg_error_rate", "avg_trace_distance", "diamond"):
            if getattr(self, name) < -1e-12:
                raise ValueError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def metric_report(channel: ChannelLike, n_states: int = DEFAULT_STATES) -> MetricReport:
    chi = as_chi(channel)
    r, r_std = avg_error_rate(chi, n_states)
    d, d_std = avg_trace_distance(chi, n_states)
    dia, gap = diamond_distance(chi)
    return MetricReport(r, r_std, d, d_std, dia, gap, n_states, "sampled")
