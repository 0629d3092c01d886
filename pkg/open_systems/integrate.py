from typing import Callable, NamedTuple, Optional

import torch
from torchtyping import TensorType
from tqdm import tqdm

from open_systems.errors import AmplitudeZeroFlag, GridError
from open_systems.linalg import DTYPE, REAL_DTYPE

_n_times = None

# relative spread of grid steps tolerated as rounding noise
UNIFORM_GRID_TOL = 1e-6


class ODESolution(NamedTuple):
    times: TensorType["_n_times"]
    values: torch.Tensor
    flag: Optional[AmplitudeZeroFlag]


class VolterraSolution(NamedTuple):
    values: TensorType["_n_times"]
    derivatives: TensorType["_n_times"]


def check_uniform_grid(grid, start_at_zero: bool = False) -> float:
    """Return the step of a uniform ascending grid, else raise GridError."""
    grid = torch.as_tensor(grid, dtype=REAL_DTYPE)
    if grid.ndim != 1 or grid.shape[0] < 2:
        raise GridError(f"Time grid needs at least two points, got shape {tuple(grid.shape)}")
    if start_at_zero and grid[0].item() != 0.0:
        raise GridError(f"Time grid must start at 0, starts at {grid[0].item()}")
    steps = grid.diff()
    h = steps[0].item()
    if h <= 0:
        raise GridError(f"Time grid must be strictly ascending, first step is {h}")
    spread = (steps - h).abs().max().item()
    if spread > UNIFORM_GRID_TOL * h:
        raise GridError(f"Time grid is not uniform: steps vary by {spread:.3e} around h = {h:.3e}")
    return h


def rk4_solve(
    rhs: Callable[[float, torch.Tensor], torch.Tensor],
    y0: torch.Tensor,
    grid,
    progress: bool = False,
) -> ODESolution:
    """Classical fourth-order Runge-Kutta for y' = rhs(t, y) on a uniform grid.

    rhs is evaluated at the stage times t, t + h/2, t + h. If it raises
    AmplitudeZeroFlag the integration stops; the solution holds every grid
    point completed so far and the flag.
    """
    grid = torch.as_tensor(grid, dtype=REAL_DTYPE)
    h = check_uniform_grid(grid)
    values = [y0]
    y = y0
    try:
        for n in tqdm(range(grid.shape[0] - 1), disable=not progress):
            t = grid[n].item()
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + (h / 2) * k1)
            k3 = rhs(t + h / 2, y + (h / 2) * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            values.append(y)
    except AmplitudeZeroFlag as flag:
        n_done = len(values)
        return ODESolution(grid[:n_done], torch.stack(values), flag)
    return ODESolution(grid, torch.stack(values), None)


def volterra_heun(kernel_values: TensorType["_n_times"], y0: complex, h: float, progress: bool = False) -> VolterraSolution:
    """Solve y'(t) = -int_0^t k(t - s) y(s) ds with kernel_values[j] = k(j h).

    Memory integrals use the trapezoid rule, time steps Heun's
    predictor-corrector; both are second order, so the scheme is O(h^2)
    overall at O(n^2) cost.
    """
    K = torch.as_tensor(kernel_values, dtype=DTYPE)
    N = K.shape[0]
    Kf = K.flip(0)
    y = torch.zeros(N, dtype=DTYPE)
    dy = torch.zeros(N, dtype=DTYPE)
    y[0] = y0

    def memory(n: int, y_n: torch.Tensor) -> torch.Tensor:
        # trapezoid over s in [0, t_n] with y(t_n) taken as y_n
        if n == 0:
            return torch.zeros((), dtype=DTYPE)
        inner = torch.dot(Kf[N - 1 - n : N - 1], y[:n])
        return h * (inner - 0.5 * K[n] * y[0] + 0.5 * K[0] * y_n)

    for n in tqdm(range(N - 1), disable=not progress):
        dy[n] = -memory(n, y[n])
        predictor = y[n] + h * dy[n]
        slope = -memory(n + 1, predictor)
        y[n + 1] = y[n] + (h / 2) * (dy[n] + slope)
    dy[N - 1] = -memory(N - 1, y[N - 1])
    return VolterraSolution(y, dy)
