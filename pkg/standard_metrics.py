from typing import Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import torch
from torchtyping import TensorType

from open_systems.channels import (Dilation, QuantumChannel, apply, choi_matrix_from_operators,
                                   completeness_residual, dilate, kraus_from_choi)
from open_systems.jaynes_cummings import GROUND_STATE, JCTrajectory
from open_systems.linalg import max_norm
from open_systems.states import DensityMatrix, trace_distance

_n_times = None


def max_norm_residual(A: torch.Tensor, B: torch.Tensor) -> float:
    return max_norm(torch.as_tensor(A) - torch.as_tensor(B))


def max_abs_deviation(a: TensorType["_n_times"], b: TensorType["_n_times"]) -> float:
    return (torch.as_tensor(a) - torch.as_tensor(b)).abs().max().item()


def observed_order(errors: Sequence[float], steps: Sequence[float]) -> np.ndarray:
    """log(e_i / e_{i+1}) / log(h_i / h_{i+1}) for successive refinements."""
    e, h = np.asarray(errors, dtype=float), np.asarray(steps, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def fit_quadratic_decay(times: TensorType["_n_times"], c1: TensorType["_n_times"], c1_0: complex) -> float:
    """Least-squares k in log|c1(t)/c1(0)| = k t^2 (no intercept)."""
    t = np.asarray(times, dtype=float)
    y = np.log(np.abs(np.asarray(c1) / c1_0))
    mask = t > 0
    t2 = t[mask] ** 2
    return float(np.dot(t2, y[mask]) / np.dot(t2, t2))


def fit_exponential_rate(times: TensorType["_n_times"], c1: TensorType["_n_times"]) -> float:
    """Slope of -log|c1| over the given window, by a degree-one polyfit."""
    t = np.asarray(times, dtype=float)
    y = -np.log(np.abs(np.asarray(c1)))
    slope, _ = np.polyfit(t, y, 1)
    return float(slope)


def log_derivative(times: TensorType["_n_times"], c1: TensorType["_n_times"]) -> np.ndarray:
    """-(d/dt) log|c1| by second-order finite differences."""
    return -np.gradient(np.log(np.abs(np.asarray(c1))), np.asarray(times, dtype=float))


def relaxation_distance(trajectory: JCTrajectory, index: int = -1, target: Optional[torch.Tensor] = None) -> float:
    """Trace distance between a trajectory state and the ground state (or target)."""
    target = DensityMatrix(GROUND_STATE if target is None else target)
    return trace_distance(trajectory.state(index), target)


def trajectory_distance(a: JCTrajectory, b: JCTrajectory) -> float:
    """Largest pointwise trace distance between two trajectories on the same grid."""
    assert len(a) == len(b), f"trajectories have {len(a)} and {len(b)} points"
    return max(trace_distance(a.state(k), b.state(k)) for k in range(len(a)))


def dilation_state_error(dilation: Dilation, channel: QuantumChannel, states: Sequence[DensityMatrix]) -> float:
    return max(max_norm(dilation.reduce(rho).matrix - apply(channel, rho).matrix) for rho in states)


def error_ratio(coarse: float, fine: float) -> Tuple[float, float]:
    """(ratio, observed order) for a step halving."""
    return coarse / fine, float(observed_order([coarse, fine], [2.0, 1.0])[0])


def unitarity_residual(U: torch.Tensor) -> float:
    return max_norm_residual(U.mH @ U, torch.eye(U.shape[0], dtype=U.dtype))


class ChannelRoundTrip(NamedTuple):
    round_trip: float
    completeness: float
    kraus_rank: int
    unitarity: float
    dilation: float


def channel_round_trip(channel: QuantumChannel, states: Sequence[DensityMatrix] = ()) -> ChannelRoundTrip:
    """Choi -> Kraus -> Choi and Choi -> dilation residuals for one channel."""
    kraus = kraus_from_choi(channel)
    dilation = dilate(channel)
    return ChannelRoundTrip(
        round_trip=max_norm_residual(choi_matrix_from_operators(kraus.operators), channel.choi),
        completeness=completeness_residual(kraus.operators),
        kraus_rank=len(kraus),
        unitarity=unitarity_residual(dilation.U),
        dilation=dilation_state_error(dilation, channel, states) if states else 0.0,
    )


def worst_round_trip(reports: Iterable[ChannelRoundTrip]) -> ChannelRoundTrip:
    return ChannelRoundTrip(*(max(column) for column in zip(*reports)))
