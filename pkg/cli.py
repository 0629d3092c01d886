"""Command-line front end.

    python cli.py jc simulate|rates|oracle ...
    python cli.py channel verify|kraus|dilate|ppt|selftest ...
    python cli.py gksl decompose|evolve ...

Exit codes: 0 success or certified, 1 usage / input error, 2 mathematical
violation found. Reports go to stdout (or --out), diagnostics to stderr.
"""

import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

import pandas as pd
import torch

from config import (BaseArgs, ChannelArgs, GKSLArgs, JCArgs, OracleArgs, StrictArgumentParser,
                    parse_int_list)
from open_systems import channels, gksl
from open_systems import jaynes_cummings as jc
from open_systems.errors import DimensionError, FormatError, OpenSystemsError, UsageError
from open_systems.random_ops import RandomChannelGenerator, generate_density_matrix
from parallel_runs import run_jobs
from standard_metrics import channel_round_trip, max_abs_deviation, unitarity_residual, worst_round_trip
from utils import format_float, load_density_matrix, read_json, write_csv, write_json

ROUND_TRIP_TOL = 1e-10
NORM_DRIFT_TOL = 1e-8

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


def _params(args: JCArgs) -> jc.JCParams:
    return jc.JCParams.from_detuning(
        g=args.g, gamma_width=args.gamma_width, delta=args.delta, c1_0=args.c1, c0=args.c0, omega_c=args.omega_c
    )


def jc_simulate(args: JCArgs) -> int:
    p = _params(args)
    grid = jc.discrete_grid(args.tmax, args.steps)
    if args.method == "exact":
        trajectory = jc.trajectory_exact(p, grid, picture=args.picture)
    elif args.method == "volterra":
        trajectory = jc.trajectory_volterra(p, grid, progress=args.progress)
    else:
        trajectory = jc.integrate_master(p, grid, picture=args.picture, progress=args.progress)
    write_csv(trajectory.to_frame(), args.out)
    if trajectory.flag is not None:
        print(f"warning: {trajectory.flag}", file=sys.stderr)
        if args.method == "master":
            print(f"integration stopped after {len(trajectory)} of {len(grid)} points", file=sys.stderr)
            return EXIT_VIOLATION
    return EXIT_OK


def jc_rates(args: JCArgs) -> int:
    p = _params(args)
    grid = jc.discrete_grid(args.tmax, args.steps)
    trajectory = jc.trajectory_exact(p, grid)
    frame = pd.DataFrame({"t": trajectory.times.numpy(), "gamma": trajectory.gamma.numpy(), "S": trajectory.S.numpy()})
    if p.is_overdamped_resonant():
        frame["gamma_resonant"] = [jc.gamma_resonant(t, p) for t in grid.tolist()]
    write_csv(frame, args.out)
    gamma_inf, S_inf = jc.asymptotic_rates(p)
    print(f"asymptotic gamma = {format_float(gamma_inf)}, S = {format_float(S_inf)}", file=sys.stderr)
    if trajectory.flag is not None:
        print(f"warning: {trajectory.flag}", file=sys.stderr)
    return EXIT_OK


def _oracle_job(job: Tuple[dict, int, float, float, int]) -> dict:
    fields, n_modes, halfwidth, tmax, steps = job
    p = jc.JCParams.from_detuning(**fields)
    reservoir = jc.sample_reservoir(p, n_modes, halfwidth)
    solution = jc.simulate_discrete(reservoir, p, jc.discrete_grid(tmax, steps))
    drift = (solution.norm - abs(p.c1_0) ** 2).abs().max().item()
    return {"n_modes": n_modes, "c1": solution.c1, "norm_drift": drift}


def jc_oracle(args: OracleArgs) -> int:
    p = _params(args)
    fields = dict(g=args.g, gamma_width=args.gamma_width, delta=args.delta, c1_0=args.c1, c0=args.c0, omega_c=args.omega_c)
    jobs = [(fields, n, args.halfwidth, args.tmax, args.steps) for n in parse_int_list(args.modes)]
    results = run_jobs(_oracle_job, jobs, n_workers=args.workers, show_progress=args.progress)

    grid = jc.discrete_grid(args.tmax, args.steps)
    exact = torch.tensor([jc.c1_exact(t, p) for t in grid.tolist()], dtype=torch.complex128)
    frame = pd.DataFrame({"t": grid.numpy(), "re_c1_exact": exact.real.numpy(), "im_c1_exact": exact.imag.numpy()})
    status = EXIT_OK
    for result in results:
        n = result["n_modes"]
        frame[f"re_c1_N{n}"] = result["c1"].real.numpy()
        frame[f"im_c1_N{n}"] = result["c1"].imag.numpy()
        deviation = max_abs_deviation(result["c1"], exact)
        print(
            f"N={n}: max|c1 - c1_exact| = {format_float(deviation)}, norm drift = {format_float(result['norm_drift'])}",
            file=sys.stderr,
        )
        if result["norm_drift"] > NORM_DRIFT_TOL:
            status = EXIT_VIOLATION
    write_csv(frame, args.out)
    return status


def channel_verify(args: ChannelArgs) -> int:
    d, choi = channels.choi_from_json_loose(read_json(args.file))
    report = channels.is_cptp(choi, d, tol=args.tol)
    write_json({"dim": d, **report._asdict()}, args.out)
    if not report.cp:
        print(f"not completely positive: min choi eigenvalue {format_float(report.min_choi_eig)}", file=sys.stderr)
    if not report.tp:
        print(f"not trace preserving: residual {format_float(report.tp_residual)}", file=sys.stderr)
    return EXIT_OK if report.cp and report.tp else EXIT_VIOLATION


def channel_kraus(args: ChannelArgs) -> int:
    channel = channels.channel_from_json(read_json(args.file))
    kraus = channels.kraus_from_choi(channel)
    write_json(channels.kraus_to_json(kraus), args.out)
    return EXIT_OK


def channel_dilate(args: ChannelArgs) -> int:
    channel = channels.channel_from_json(read_json(args.file))
    dilation = channels.dilate(channel)
    residual = dilation.residual(channel)
    unitarity = unitarity_residual(dilation.U)
    write_json(channels.dilation_to_json(dilation), args.out)
    write_json({"dim": dilation.dim, "dimR": dilation.dim_r, "unitarity_residual": unitarity, "reproduction_residual": residual})
    return EXIT_OK if residual <= args.tol else EXIT_VIOLATION


def channel_ppt(args: ChannelArgs) -> int:
    dim_a, dim_b = parse_int_list(args.dims)
    rho = load_density_matrix(args.file)
    min_eig = channels.ppt_min_eig(rho, dim_a, dim_b)
    entangled = min_eig < -args.tol
    write_json({"dims": [dim_a, dim_b], "min_eig": min_eig, "entangled": entangled}, args.out)
    return EXIT_VIOLATION if entangled else EXIT_OK


def channel_selftest(args: ChannelArgs) -> int:
    stream = RandomChannelGenerator(args.dim, seed=args.seed)
    rng = torch.Generator().manual_seed(args.seed + 1)
    reports = [
        channel_round_trip(next(stream), [generate_density_matrix(args.dim, generator=rng) for _ in range(5)])
        for _ in range(args.count)
    ]
    worst = worst_round_trip(reports)
    write_json(
        {
            "dim": args.dim,
            "count": args.count,
            "seed": args.seed,
            "round_trip": worst.round_trip,
            "completeness": worst.completeness,
            "unitarity": worst.unitarity,
            "dilation": worst.dilation,
            "max_kraus_rank": worst.kraus_rank,
        },
        args.out,
    )
    passed = (
        worst.round_trip < ROUND_TRIP_TOL
        and worst.completeness <= channels.COMPLETENESS_TOL
        and worst.unitarity < ROUND_TRIP_TOL
        and worst.dilation <= args.tol
        and worst.kraus_rank <= args.dim**2
    )
    return EXIT_OK if passed else EXIT_VIOLATION


def gksl_decompose(args: GKSLArgs) -> int:
    L = gksl.superop_from_json(read_json(args.file))
    decomposition = gksl.gksl_decompose(L)
    generator = decomposition.generator
    write_json(
        {
            "dim": generator.dim,
            "gammas": generator.gammas,
            "residual": decomposition.residual,
            "a_min_eig": decomposition.a_min_eig,
            "generator": gksl.generator_to_json(generator),
        },
        args.out,
    )
    return EXIT_OK if decomposition.residual < args.tol else EXIT_VIOLATION


def gksl_evolve(args: GKSLArgs) -> int:
    obj = read_json(args.file)
    if "H" in obj:
        generator = gksl.generator_from_json(obj)
    else:
        generator = gksl.gksl_decompose(gksl.superop_from_json(obj)).generator
    rho0 = load_density_matrix(args.rho0)
    if rho0.dim != generator.dim:
        raise DimensionError(f"--rho0 has dimension {rho0.dim}, generator acts on {generator.dim}")
    times = torch.linspace(0.0, args.tmax, args.steps + 1, dtype=torch.float64)
    states = gksl.evolve_grid(generator, rho0, times.tolist())
    d = generator.dim
    columns: Dict[str, List[float]] = {"t": times.tolist()}
    for i in range(d):
        for j in range(d):
            columns[f"re_rho_{i}{j}"] = [rho.matrix[i, j].real.item() for rho in states]
            columns[f"im_rho_{i}{j}"] = [rho.matrix[i, j].imag.item() for rho in states]
    write_csv(pd.DataFrame(columns), args.out)
    return EXIT_OK


COMMANDS: Dict[str, Dict[str, Tuple[Type[BaseArgs], Callable[..., int]]]] = {
    "jc": {
        "simulate": (JCArgs, jc_simulate),
        "rates": (JCArgs, jc_rates),
        "oracle": (OracleArgs, jc_oracle),
    },
    "channel": {
        "verify": (ChannelArgs, channel_verify),
        "kraus": (ChannelArgs, channel_kraus),
        "dilate": (ChannelArgs, channel_dilate),
        "ppt": (ChannelArgs, channel_ppt),
        "selftest": (ChannelArgs, channel_selftest),
    },
    "gksl": {
        "decompose": (GKSLArgs, gksl_decompose),
        "evolve": (GKSLArgs, gksl_evolve),
    },
}


def build_parser() -> StrictArgumentParser:
    parser = StrictArgumentParser(prog="cli.py", description="Open quantum systems toolkit")
    groups = parser.add_subparsers(dest="group", required=True)
    for group, actions in COMMANDS.items():
        group_parser = groups.add_parser(group)
        action_parsers = group_parser.add_subparsers(dest="action", required=True)
        for action, (args_cls, handler) in actions.items():
            action_parser = action_parsers.add_parser(action)
            args_cls.add_arguments(action_parser)
            action_parser.set_defaults(args_cls=args_cls, handler=handler)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        namespace = build_parser().parse_args(argv)
        args = namespace.args_cls.from_namespace(namespace)
        args.validate(namespace.action)
        return namespace.handler(args)
    except (UsageError, FormatError, DimensionError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OpenSystemsError as e:
        print(f"violation: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
