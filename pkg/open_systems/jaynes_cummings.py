"""Two-level atom coupled to a Lorentzian reservoir with at most one excitation.

Atom operators are written in the ordered basis {|1>, |0>} (excited first),
so sigma_+ = [[0, 1], [0, 0]], sigma_- = [[0, 0], [1, 0]] and
sigma_+ sigma_- = diag(1, 0). Quantities:

    f(tau) = (g / sqrt(2 pi)) e^{-kappa tau},   kappa = Gamma - i Delta
    R      = sqrt(kappa^2 - 4 g / sqrt(2 pi))  (principal branch)
    c1(t)  = c1(0) e^{-kappa t/2} [cosh(Rt/2) + (kappa/R) sinh(Rt/2)]
    dc1/dt / c1 = -gamma(t)/2 - i S(t)/2
"""

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
import torch
from scipy import integrate as sp_integrate
from torchtyping import TensorType

from open_systems.errors import (AMPLITUDE_FLOOR, AmplitudeZeroFlag, DimensionError, DomainError,
                                 GridError, NormalizationError, RegimeError)
from open_systems.gksl import GKSLGenerator
from open_systems.integrate import check_uniform_grid, rk4_solve, volterra_heun
from open_systems.linalg import DTYPE, REAL_DTYPE, anticommutator, commutator
from open_systems.states import DensityMatrix

_n_times, _n_modes = None, None

SQRT_2PI = math.sqrt(2 * math.pi)

SIGMA_PLUS = torch.tensor([[0, 1], [0, 0]], dtype=DTYPE)
SIGMA_MINUS = torch.tensor([[0, 0], [1, 0]], dtype=DTYPE)
EXCITED_PROJECTOR = SIGMA_PLUS @ SIGMA_MINUS
GROUND_STATE = torch.tensor([[0, 0], [0, 1]], dtype=DTYPE)

# |Rt| below this switches c1 to its Taylor series around R = 0
SERIES_SWITCH = 1e-4
AMPLITUDE_NORM_TOL = 1e-12
DEFAULT_OMEGA_C = 100.0
DEFAULT_HALFWIDTH = 40.0

Picture = Literal["interaction", "schrodinger"]
TRAJECTORY_COLUMNS = ["t", "re_c1", "im_c1", "abs_c1", "gamma", "S", "rho11", "rho00", "re_rho10", "im_rho10"]


@dataclass(frozen=True)
class JCParams:
    g: float
    gamma_width: float
    omega0: float
    omega_c: float
    c1_0: complex = 1.0
    c0: complex = 0.0

    delta: float = field(init=False)

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError(f"Coupling g must be positive, got {self.g}")
        if not self.gamma_width > 0:
            raise DomainError(f"Lorentzian width Gamma must be positive, got {self.gamma_width}")
        if not (self.omega0 > 0 and self.omega_c > 0):
            raise DomainError(f"Frequencies must be positive, got omega0={self.omega0}, omega_c={self.omega_c}")
        object.__setattr__(self, "c1_0", complex(self.c1_0))
        object.__setattr__(self, "c0", complex(self.c0))
        weight = abs(self.c0) ** 2 + abs(self.c1_0) ** 2
        if weight > 1 + AMPLITUDE_NORM_TOL:
            raise NormalizationError(f"|c0|^2 + |c1(0)|^2 = {weight!r} exceeds 1")
        object.__setattr__(self, "delta", self.omega0 - self.omega_c)

    @classmethod
    def from_detuning(
        cls,
        g: float,
        gamma_width: float,
        delta: float = 0.0,
        c1_0: complex = 1.0,
        c0: complex = 0.0,
        omega_c: float = DEFAULT_OMEGA_C,
    ) -> "JCParams":
        return cls(g=g, gamma_width=gamma_width, omega0=omega_c + delta, omega_c=omega_c, c1_0=c1_0, c0=c0)

    @property
    def f0(self) -> float:
        """f(0) = g / sqrt(2 pi)."""
        return self.g / SQRT_2PI

    @property
    def kappa(self) -> complex:
        return complex(self.gamma_width, -self.delta)

    @property
    def R(self) -> complex:
        return cmath.sqrt(self.kappa**2 - 4 * self.f0)

    def is_overdamped_resonant(self) -> bool:
        return self.delta == 0 and self.gamma_width**2 > 4 * self.f0


@dataclass(frozen=True)
class DiscreteReservoir:
    """Uniformly sampled modes omega_k with real couplings g_k, |g_k|^2 = J(omega_k) d_omega / sqrt(2 pi)."""

    omega: TensorType["_n_modes"]
    couplings: TensorType["_n_modes"]
    spacing: float
    halfwidth: float

    def __len__(self) -> int:
        return self.omega.shape[0]

    def correlation(self, tau: float, p: JCParams) -> complex:
        """sum_k |g_k|^2 e^{i(omega0 - omega_k) tau}, the Riemann sum for f(tau)."""
        phases = torch.exp(1j * (p.omega0 - self.omega) * tau)
        return (self.couplings.abs() ** 2 * phases).sum().item()

    def total_weight(self) -> float:
        return (self.couplings.abs() ** 2).sum().item()


@dataclass
class JCTrajectory:
    times: TensorType["_n_times"]
    c1: TensorType["_n_times"]
    gamma: TensorType["_n_times"]
    S: TensorType["_n_times"]
    rho: TensorType["_n_times", 2, 2]
    flag: Optional[AmplitudeZeroFlag] = None

    def __len__(self) -> int:
        return self.times.shape[0]

    def state(self, k: int) -> DensityMatrix:
        return DensityMatrix.relaxed(self.rho[k])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": self.times.numpy(),
                "re_c1": self.c1.real.numpy(),
                "im_c1": self.c1.imag.numpy(),
                "abs_c1": self.c1.abs().numpy(),
                "gamma": self.gamma.numpy(),
                "S": self.S.numpy(),
                "rho11": self.rho[:, 0, 0].real.numpy(),
                "rho00": self.rho[:, 1, 1].real.numpy(),
                "re_rho10": self.rho[:, 0, 1].real.numpy(),
                "im_rho10": self.rho[:, 0, 1].imag.numpy(),
            },
            columns=TRAJECTORY_COLUMNS,
        )


class DiscreteSolution(NamedTuple):
    times: TensorType["_n_times"]
    c1: TensorType["_n_times"]
    norm: TensorType["_n_times"]
    reservoir_weight: TensorType["_n_times"]
    d_final: TensorType["_n_modes"]


def lorentzian_J(omega, p: JCParams):
    """J(omega) = (g/pi) Gamma / ((omega - omega_c)^2 + Gamma^2); works on floats, arrays and tensors."""
    return (p.g / math.pi) * p.gamma_width / ((omega - p.omega_c) ** 2 + p.gamma_width**2)


def correlation_f(tau: float, p: JCParams) -> complex:
    if tau < 0:
        raise DomainError(f"Correlation function is evaluated for tau >= 0, got {tau}")
    return p.f0 * cmath.exp(-p.kappa * tau)


def correlation_f_quadrature(tau: float, p: JCParams, spectral_density: Callable = lorentzian_J) -> complex:
    """(1/sqrt(2 pi)) int J(w) e^{i(omega0 - w) tau} dw over the real line.

    With x = w - omega0 the integral splits into a cosine and a sine
    transform on [0, inf), which quad evaluates with its Fourier weights.
    """
    if tau < 0:
        raise DomainError(f"Correlation function is evaluated for tau >= 0, got {tau}")
    J = lambda w: spectral_density(w, p)
    if tau == 0:
        value, _ = sp_integrate.quad(lambda x: J(p.omega0 + x) + J(p.omega0 - x), 0, np.inf, epsabs=1e-12, limit=200)
        return complex(value / SQRT_2PI)
    even, _ = sp_integrate.quad(lambda x: J(p.omega0 + x) + J(p.omega0 - x), 0, np.inf, weight="cos", wvar=tau)
    odd, _ = sp_integrate.quad(lambda x: J(p.omega0 + x) - J(p.omega0 - x), 0, np.inf, weight="sin", wvar=tau)
    return complex(even, -odd) / SQRT_2PI


def _sinhc(x: complex) -> complex:
    if abs(x) < SERIES_SWITCH:
        x2 = x * x
        return 1 + x2 / 6 + x2 * x2 / 120
    return cmath.sinh(x) / x


def c1_unit(t: float, p: JCParams) -> complex:
    """c1(t)/c1(0), evaluated without overflow for large t."""
    if t < 0:
        raise DomainError(f"Amplitude is evaluated for t >= 0, got {t}")
    kappa, R = p.kappa, p.R
    if abs(R * t) < SERIES_SWITCH:
        x = R * t / 2
        x2 = x * x
        cosh = 1 + x2 / 2 + x2 * x2 / 24
        return cmath.exp(-kappa * t / 2) * (cosh + kappa * (t / 2) * _sinhc(x))
    grow = cmath.exp((R - kappa) * t / 2)
    shrink = cmath.exp(-(R + kappa) * t / 2)
    return 0.5 * (1 + kappa / R) * grow + 0.5 * (1 - kappa / R) * shrink


def c1_unit_derivative(t: float, p: JCParams) -> complex:
    """d/dt of c1(t)/c1(0) = -(g/sqrt(2 pi)) t e^{-kappa t/2} sinh(Rt/2)/(Rt/2)."""
    kappa, R = p.kappa, p.R
    if abs(R * t) < SERIES_SWITCH:
        return -p.f0 * t * cmath.exp(-kappa * t / 2) * _sinhc(R * t / 2)
    grow = cmath.exp((R - kappa) * t / 2)
    shrink = cmath.exp(-(R + kappa) * t / 2)
    return -p.f0 * (grow - shrink) / R


def c1_exact(t: float, p: JCParams) -> complex:
    return p.c1_0 * c1_unit(t, p)


def c1_derivative(t: float, p: JCParams) -> complex:
    return p.c1_0 * c1_unit_derivative(t, p)


def c1_volterra(grid, p: JCParams, kernel: Optional[Callable[[float], complex]] = None, progress: bool = False) -> TensorType["_n_times"]:
    """c1 on a uniform grid from 0 by the trapezoid/Heun Volterra scheme; kernel defaults to f."""
    return _volterra(grid, p, kernel, progress).values


def _volterra(grid, p: JCParams, kernel, progress: bool):
    grid = torch.as_tensor(grid, dtype=REAL_DTYPE)
    h = check_uniform_grid(grid, start_at_zero=True)
    kernel = kernel or (lambda tau: correlation_f(tau, p))
    taus = (grid - grid[0]).tolist()
    kernel_values = torch.tensor([complex(kernel(tau)) for tau in taus], dtype=DTYPE)
    return volterra_heun(kernel_values, p.c1_0, h, progress=progress)


def _rates_from(amplitude: complex, derivative: complex, t: float) -> Tuple[float, float]:
    if abs(amplitude) < AMPLITUDE_FLOOR:
        raise AmplitudeZeroFlag(t, abs(amplitude))
    ratio = derivative / amplitude
    return -2 * ratio.real, -2 * ratio.imag


def rates(t: float, p: JCParams) -> Tuple[float, float]:
    """(gamma(t), S(t)) from the closed-form amplitude.

    The rates do not depend on c1(0), so they are taken from the unit
    amplitude c1(t)/c1(0); AmplitudeZeroFlag fires where it vanishes.
    """
    return _rates_from(c1_unit(t, p), c1_unit_derivative(t, p), t)


def asymptotic_rates(p: JCParams) -> Tuple[float, float]:
    """Long-time limits (Gamma - Re R, -(Im R + Delta))."""
    R = p.R
    return p.gamma_width - R.real, -(R.imag + p.delta)


def gamma_resonant(t: float, p: JCParams) -> float:
    """4 f(0) sinh(x) / (R0 cosh(x) + Gamma sinh(x)), x = R0 t / 2, for real R0."""
    if p.delta != 0:
        raise RegimeError(f"Closed-form resonant rate needs Delta = 0, got {p.delta}")
    if not p.gamma_width**2 > 4 * p.f0:
        raise RegimeError(
            f"Gamma^2 = {p.gamma_width**2:.6g} <= 4g/sqrt(2pi) = {4 * p.f0:.6g}: R0 is not real (underdamped)"
        )
    R0 = math.sqrt(p.gamma_width**2 - 4 * p.f0)
    th = math.tanh(R0 * t / 2)
    return 4 * p.f0 * th / (R0 + p.gamma_width * th)


def density_from_amplitudes(c0: complex, c1: complex) -> torch.Tensor:
    """[[|c1|^2, conj(c0) c1], [c0 conj(c1), 1 - |c1|^2]] in the basis {|1>, |0>}."""
    c0, c1 = complex(c0), complex(c1)
    p1 = abs(c1) ** 2
    return torch.tensor([[p1, c0.conjugate() * c1], [c0 * c1.conjugate(), 1 - p1]], dtype=DTYPE)


def rho_interaction(t: float, p: JCParams) -> DensityMatrix:
    return DensityMatrix(density_from_amplitudes(p.c0, c1_exact(t, p)))


def free_propagator(t: float, p: JCParams) -> torch.Tensor:
    """e^{-i t H_S} with H_S = omega0 sigma_+ sigma_-."""
    return torch.tensor([[cmath.exp(-1j * p.omega0 * t), 0], [0, 1]], dtype=DTYPE)


def rho_schrodinger(t: float, p: JCParams) -> DensityMatrix:
    return rho_interaction(t, p).evolve_unitary(free_propagator(t, p))


def master_rhs(rho, t: float, p: JCParams, picture: Picture = "interaction") -> torch.Tensor:
    """Right-hand side of the exact time-local master equation.

    interaction:  -(i/2) S [P, rho] + gamma (s- rho s+ - 1/2 {P, rho})
    schrodinger:  -i [omega0 P + S P / 2, rho] + gamma (s- rho s+ - 1/2 {P, rho})
    with P = sigma_+ sigma_-. rho may be a DensityMatrix or any 2x2 tensor.
    """
    rho = rho.matrix if isinstance(rho, DensityMatrix) else rho
    if rho.shape != (2, 2):
        raise DimensionError(f"Atom state must be 2x2, got {tuple(rho.shape)}")
    gamma, S = rates(t, p)
    P = EXCITED_PROJECTOR
    H = 0.5 * S * P
    if picture == "schrodinger":
        H = H + p.omega0 * P
    elif picture != "interaction":
        raise ValueError(f"picture must be 'interaction' or 'schrodinger', got {picture!r}")
    dissipator = SIGMA_MINUS @ rho @ SIGMA_PLUS - 0.5 * anticommutator(P, rho)
    return -1j * commutator(H, rho) + gamma * dissipator


def _rates_series(times: torch.Tensor, rate_fn: Callable[[int, float], Tuple[float, float]]):
    gammas, shifts = [], []
    first_flag = None
    for k, t in enumerate(times.tolist()):
        try:
            gamma, S = rate_fn(k, t)
        except AmplitudeZeroFlag as flag:
            first_flag = first_flag or flag
            gamma, S = math.nan, math.nan
        gammas.append(gamma)
        shifts.append(S)
    return torch.tensor(gammas, dtype=REAL_DTYPE), torch.tensor(shifts, dtype=REAL_DTYPE), first_flag


def trajectory_exact(p: JCParams, grid, picture: Picture = "interaction") -> JCTrajectory:
    """Closed-form trajectory; rates at amplitude zeros are NaN and the first zero is kept as the flag."""
    times = torch.as_tensor(grid, dtype=REAL_DTYPE)
    c1 = torch.tensor([c1_exact(t, p) for t in times.tolist()], dtype=DTYPE)
    gamma, S, flag = _rates_series(times, lambda k, t: rates(t, p))
    rho_fn = rho_schrodinger if picture == "schrodinger" else rho_interaction
    rho = torch.stack([rho_fn(t, p).matrix for t in times.tolist()])
    return JCTrajectory(times, c1, gamma, S, rho, flag)


def trajectory_volterra(
    p: JCParams, grid, kernel: Optional[Callable[[float], complex]] = None, progress: bool = False
) -> JCTrajectory:
    """Trajectory from the Volterra solution; rates use the scheme's own derivative estimates."""
    times = torch.as_tensor(grid, dtype=REAL_DTYPE)
    solution = _volterra(times, p, kernel, progress)
    scale = p.c1_0 if p.c1_0 != 0 else 1.0
    values, slopes = solution.values / scale, solution.derivatives / scale
    gamma, S, flag = _rates_series(times, lambda k, t: _rates_from(values[k].item(), slopes[k].item(), t))
    rho = torch.stack([density_from_amplitudes(p.c0, c1) for c1 in solution.values.tolist()])
    return JCTrajectory(times, solution.values, gamma, S, rho, flag)


def integrate_master(p: JCParams, grid, picture: Picture = "interaction", progress: bool = False) -> JCTrajectory:
    """RK4 on the master equation with gamma(t), S(t) evaluated at the stage times.

    On an amplitude zero the trajectory stops at the last completed grid point
    and carries the flag. The c1 column holds the closed-form amplitude the
    rates were computed from.
    """
    rho0 = density_from_amplitudes(p.c0, p.c1_0)
    solution = rk4_solve(lambda t, rho: master_rhs(rho, t, p, picture), rho0, grid, progress=progress)
    times = solution.times
    rho = torch.stack([DensityMatrix.relaxed(r).matrix for r in solution.values])
    c1 = torch.tensor([c1_exact(t, p) for t in times.tolist()], dtype=DTYPE)
    gamma, S, _ = _rates_series(times, lambda k, t: rates(t, p))
    return JCTrajectory(times, c1, gamma, S, rho, solution.flag)


def markovian_generator(p: JCParams, picture: Picture = "interaction") -> GKSLGenerator:
    """GKSL generator with gamma(t), S(t) frozen at their long-time values."""
    gamma_inf, S_inf = asymptotic_rates(p)
    H = 0.5 * S_inf * EXCITED_PROJECTOR
    if picture == "schrodinger":
        H = H + p.omega0 * EXCITED_PROJECTOR
    return GKSLGenerator(2, H, ((SIGMA_MINUS, gamma_inf),))


def sample_reservoir(p: JCParams, n_modes: int, halfwidth_in_gammas: float = DEFAULT_HALFWIDTH) -> DiscreteReservoir:
    if n_modes < 2:
        raise DomainError(f"Reservoir needs at least 2 modes, got {n_modes}")
    if not halfwidth_in_gammas > 0:
        raise DomainError(f"Sampling half-width must be positive, got {halfwidth_in_gammas}")
    W = halfwidth_in_gammas * p.gamma_width
    omega = torch.linspace(p.omega_c - W, p.omega_c + W, n_modes, dtype=REAL_DTYPE)
    spacing = 2 * W / (n_modes - 1)
    couplings = torch.sqrt(lorentzian_J(omega, p) * spacing / SQRT_2PI).to(DTYPE)
    return DiscreteReservoir(omega, couplings, spacing, W)


def simulate_discrete(res: DiscreteReservoir, p: JCParams, grid, progress: bool = False) -> DiscreteSolution:
    """RK4 on the single-excitation amplitudes (c1, d_1, ..., d_N), d_k(0) = 0.

        i dc1/dt  = sum_k g_k e^{i(omega0 - omega_k) t} d_k
        i dd_k/dt = conj(g_k) e^{-i(omega0 - omega_k) t} c1
    """
    detuning = p.omega0 - res.omega
    g = res.couplings

    def rhs(t: float, y: torch.Tensor) -> torch.Tensor:
        phase = torch.exp(1j * detuning * t)
        c1, d = y[0], y[1:]
        dc1 = -1j * torch.sum(g * phase * d)
        dd = -1j * g.conj() * phase.conj() * c1
        return torch.cat([dc1.reshape(1), dd])

    y0 = torch.zeros(len(res) + 1, dtype=DTYPE)
    y0[0] = p.c1_0
    solution = rk4_solve(rhs, y0, grid, progress=progress)
    Y = solution.values
    weight = (Y[:, 1:].abs() ** 2).sum(dim=1)
    norm = Y[:, 0].abs() ** 2 + weight
    return DiscreteSolution(solution.times, Y[:, 0], norm, weight, Y[-1, 1:])


def reduced_atom_state(c0: complex, c1: complex, d: TensorType["_n_modes"]) -> DensityMatrix:
    """Atom state of c0 |0>(x)Omega + c1 |1>(x)Omega + sum_k d_k |0>(x)e_k.

    The wavefunction is the 2 x (N+1) array Psi (atom basis {|1>, |0>},
    reservoir basis {Omega, e_1, ..., e_N}) and the reduced state Psi Psi^dag.
    """
    d = torch.as_tensor(d, dtype=DTYPE)
    psi = torch.zeros(2, d.shape[0] + 1, dtype=DTYPE)
    psi[0, 0] = c1
    psi[1, 0] = c0
    psi[1, 1:] = d
    return DensityMatrix.relaxed(psi @ psi.mH)


def discrete_grid(tmax: float, steps: int) -> TensorType["_n_times"]:
    if not tmax > 0 or steps < 1:
        raise GridError(f"Need tmax > 0 and steps >= 1, got tmax={tmax}, steps={steps}")
    return torch.linspace(0.0, tmax, steps + 1, dtype=REAL_DTYPE)
