"""Run every acceptance check end to end and print a PASS/FAIL table.

    python acceptance_sweep.py --workers 4 --out acceptance.csv
"""

import math
import sys
import time
from typing import Callable, Dict, List, Tuple

import pandas as pd
import torch

from config import SweepArgs
from open_systems import channels, gksl
from open_systems import jaynes_cummings as jc
from open_systems.errors import NotCompletelyPositiveGenerator
from open_systems.random_ops import (generate_channel, generate_density_matrix, generate_gksl_generator)
from open_systems.states import DensityMatrix, bell_state, product_state, project, trace_distance
from parallel_runs import run_jobs
from standard_metrics import (channel_round_trip, error_ratio, fit_exponential_rate, fit_quadratic_decay,
                              max_abs_deviation, max_norm_residual, worst_round_trip)
from utils import format_float, write_csv

# (g, Gamma, Delta)
PARAMETER_SETS = [(1.0, 2.0, 0.0), (1.0, 2.0, 1.0), (0.5, 1.0, -0.7)]
TAUS = [0.0, 0.5, 1.0, 2.0, 5.0]
# (modes, half-width in Gammas)
CONTINUUM_LADDER = [(2000, 40.0), (4000, 80.0)]

CheckResult = Tuple[bool, str]


def _params(g: float, gamma_width: float, delta: float) -> jc.JCParams:
    return jc.JCParams.from_detuning(g, gamma_width, delta)


def check_correlation(args: SweepArgs) -> CheckResult:
    worst = max(
        abs(jc.correlation_f_quadrature(tau, _params(*ps)) - jc.correlation_f(tau, _params(*ps)))
        for ps in PARAMETER_SETS
        for tau in TAUS
    )
    return worst < 1e-6, f"max |f_quad - f| = {format_float(worst)}"


def check_volterra(args: SweepArgs) -> CheckResult:
    passed, details = True, []
    for ps in PARAMETER_SETS:
        p = _params(*ps)
        errors = []
        for steps in (5000, 2500):
            grid = jc.discrete_grid(5.0, steps)
            exact = torch.tensor([jc.c1_exact(t, p) for t in grid.tolist()], dtype=torch.complex128)
            errors.append(max_abs_deviation(jc.c1_volterra(grid, p), exact))
        ratio, order = error_ratio(errors[1], errors[0])
        passed &= errors[0] < 1e-5 and ratio >= 3.5
        details.append(f"{ps}: err={errors[0]:.2e} ratio={ratio:.2f} order={order:.2f}")
    return passed, "; ".join(details)


def check_continuum(args: SweepArgs) -> CheckResult:
    p = _params(1.0, 2.0, 0.0)
    grid = jc.discrete_grid(3.0, 6000)
    exact = torch.tensor([jc.c1_exact(t, p) for t in grid.tolist()], dtype=torch.complex128)
    deviations, drifts = [], []
    # the window grows with N so the mode spacing stays fixed
    for n_modes, halfwidth in CONTINUUM_LADDER:
        solution = jc.simulate_discrete(jc.sample_reservoir(p, n_modes, halfwidth), p, grid)
        deviations.append(max_abs_deviation(solution.c1, exact))
        drifts.append((solution.norm - 1).abs().max().item())
    passed = deviations[0] < 5e-3 and deviations[1] < deviations[0] and max(drifts) < 1e-8
    return passed, f"dev(2000)={deviations[0]:.2e} dev(4000)={deviations[1]:.2e} drift={max(drifts):.1e}"


def check_regime_laws(args: SweepArgs) -> CheckResult:
    p = _params(1.0, 2.0, 0.0)
    short = torch.linspace(0.0, 0.01, 101, dtype=torch.float64)
    c1_short = torch.tensor([jc.c1_exact(t, p) for t in short.tolist()], dtype=torch.complex128)
    k = fit_quadratic_decay(short, c1_short, p.c1_0)
    k_expected = -p.g / (2 * jc.SQRT_2PI)
    long = torch.linspace(4.5, 5.5, 101, dtype=torch.float64)
    c1_long = torch.tensor([jc.c1_exact(t, p) for t in long.tolist()], dtype=torch.complex128)
    rate = fit_exponential_rate(long, c1_long)
    R0 = p.R.real
    rate_expected = 2 * p.g / (jc.SQRT_2PI * (R0 + p.gamma_width))
    short_err, long_err = abs(k / k_expected - 1), abs(rate / rate_expected - 1)
    return short_err < 0.05 and long_err < 0.01, f"short rel err={short_err:.2e}, long rel err={long_err:.2e}"


def check_relaxation(args: SweepArgs) -> CheckResult:
    p = _params(1.0, 2.0, 0.0)
    gamma_inf, _ = jc.asymptotic_rates(p)
    t = 20 / gamma_inf
    distance = trace_distance(jc.rho_interaction(t, p), DensityMatrix(jc.GROUND_STATE))
    return distance < 1e-3, f"t={t:.3f} distance={distance:.2e}"


def check_master_equation(args: SweepArgs) -> CheckResult:
    h = 1e-5
    worst_fd, worst_rk4 = 0.0, 0.0
    for ps in PARAMETER_SETS:
        p = _params(*ps)
        for t in torch.linspace(0.05, 5.0, 100, dtype=torch.float64).tolist():
            central = (jc.rho_interaction(t + h, p).matrix - jc.rho_interaction(t - h, p).matrix) / (2 * h)
            worst_fd = max(worst_fd, max_norm_residual(central, jc.master_rhs(jc.rho_interaction(t, p), t, p)))
        grid = jc.discrete_grid(5.0, 5000)
        numeric, exact = jc.integrate_master(p, grid), jc.trajectory_exact(p, grid)
        worst_rk4 = max(worst_rk4, max(trace_distance(numeric.state(k), exact.state(k)) for k in range(len(grid))))
    return worst_fd < 1e-6 and worst_rk4 < 1e-6, f"fd={worst_fd:.2e} rk4={worst_rk4:.2e}"


def _random_channels(args: SweepArgs) -> List[channels.QuantumChannel]:
    rng = torch.Generator().manual_seed(args.seed)
    return [generate_channel(2 if i % 2 == 0 else 3, generator=rng) for i in range(args.n_channels)]


def check_kraus_round_trip(args: SweepArgs) -> CheckResult:
    channel_list = _random_channels(args)
    reports = [channel_round_trip(channel) for channel in channel_list]
    worst = worst_round_trip(reports)
    rank_ok = all(report.kraus_rank <= channel.dim**2 for report, channel in zip(reports, channel_list))
    passed = worst.round_trip < 1e-10 and worst.completeness < 1e-9 and rank_ok
    return passed, f"round trip={worst.round_trip:.2e} completeness={worst.completeness:.2e}"


def check_dilation(args: SweepArgs) -> CheckResult:
    rng = torch.Generator().manual_seed(args.seed + 1)
    channel_list = _random_channels(args)
    reports = [
        channel_round_trip(channel, [generate_density_matrix(channel.dim, generator=rng) for _ in range(20)])
        for channel in channel_list
    ]
    worst = worst_round_trip(reports)
    rank_ok = all(report.kraus_rank <= channel.dim**2 for report, channel in zip(reports, channel_list))
    passed = worst.unitarity < 1e-10 and worst.dilation < 1e-9 and rank_ok
    return passed, f"unitarity={worst.unitarity:.2e} reproduction={worst.dilation:.2e}"


def check_gksl(args: SweepArgs) -> CheckResult:
    rng = torch.Generator().manual_seed(args.seed + 2)
    worst_residual, worst_a = 0.0, math.inf
    for i in range(args.n_generators):
        G = generate_gksl_generator(2 if i % 2 == 0 else 3, generator=rng)
        worst_residual = max(worst_residual, gksl.gksl_decompose(gksl.superop_from_generator(G)).residual)
        channel_t = gksl.propagator_channel(G, 1e-3)
        if channels.is_cptp(channel_t.choi, G.dim).cp:
            decomposition = gksl.gksl_decompose(gksl.finite_difference_generator(channel_t, 1e-3))
            worst_a = min(worst_a, decomposition.a_min_eig)
    try:
        gksl.gksl_decompose(gksl.Superoperator.from_map(lambda X: X.mT - X, 2))
        transpose_eig = math.inf
    except NotCompletelyPositiveGenerator as e:
        transpose_eig = e.min_eigenvalue
    passed = worst_residual < 1e-9 and worst_a >= -1e-8 and transpose_eig <= -0.5
    return passed, f"residual={worst_residual:.2e} min a eig={worst_a:.2e} transpose eig={transpose_eig:.3f}"


def check_semigroup(args: SweepArgs) -> CheckResult:
    rng = torch.Generator().manual_seed(args.seed + 3)
    worst = 0.0
    for i in range(20):
        G = generate_gksl_generator(2 if i % 2 == 0 else 3, generator=rng)
        t, s = (2 * torch.rand(2, dtype=torch.float64, generator=rng)).tolist()
        worst = max(worst, gksl.semigroup_check(G, t, s))
    return worst < 1e-9, f"max gap={worst:.2e}"


def check_ppt(args: SweepArgs) -> CheckResult:
    rng = torch.Generator().manual_seed(args.seed + 4)
    bell = channels.ppt_min_eig(project(bell_state()), 2, 2)
    products = min(
        channels.ppt_min_eig(product_state(generate_density_matrix(2, generator=rng), generate_density_matrix(2, generator=rng)), 2, 2)
        for _ in range(50)
    )
    return abs(bell + 0.5) < 1e-10 and products >= -1e-12, f"bell={bell:.12f} products min={products:.2e}"


CHECKS: Dict[str, Callable[[SweepArgs], CheckResult]] = {
    "correlation quadrature": check_correlation,
    "volterra order": check_volterra,
    "continuous-mode limit": check_continuum,
    "regime laws": check_regime_laws,
    "relaxation": check_relaxation,
    "master equation": check_master_equation,
    "kraus round trip": check_kraus_round_trip,
    "dilation": check_dilation,
    "gksl decomposition": check_gksl,
    "semigroup law": check_semigroup,
    "ppt criterion": check_ppt,
}


def run_check(job: Tuple[str, SweepArgs]) -> Dict[str, object]:
    name, args = job
    start = time.time()
    passed, detail = CHECKS[name](args)
    return {"check": name, "result": "PASS" if passed else "FAIL", "seconds": round(time.time() - start, 2), "detail": detail}


def sweep(args: SweepArgs) -> pd.DataFrame:
    print(f"Running {len(CHECKS)} acceptance checks on {args.workers} worker(s)", file=sys.stderr)
    rows = run_jobs(run_check, [(name, args) for name in CHECKS], n_workers=args.workers)
    return pd.DataFrame(rows, columns=["check", "result", "seconds", "detail"])


if __name__ == "__main__":
    args = SweepArgs.parse_args()
    args.validate()
    table = sweep(args)
    print(table.to_string(index=False))
    if args.out:
        write_csv(table, args.out)
    sys.exit(0 if (table["result"] == "PASS").all() else 2)
