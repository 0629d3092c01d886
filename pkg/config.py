import argparse
import sys
from dataclasses import dataclass, field, fields
from typing import Any, List, Optional, Sequence

from open_systems.channels import CP_TOL
from open_systems.errors import UsageError
from open_systems.jaynes_cummings import DEFAULT_HALFWIDTH, DEFAULT_OMEGA_C


class StrictArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2."""

    def error(self, message: str):
        raise UsageError(message)


def positional(default: Any = "", help: str = "") -> Any:
    return field(default=default, metadata={"positional": True, "help": help})


@dataclass
class BaseArgs:
    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        for f in fields(cls):
            if f.metadata.get("positional"):
                parser.add_argument(f.name, nargs="?", default=None, help=f.metadata.get("help"))
            elif f.type is bool:
                parser.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, action="store_true", default=None)
            else:
                parser.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=f.type, default=None)

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace) -> "BaseArgs":
        args = cls()
        args.update(namespace)
        return args

    @classmethod
    def parse_args(cls, argv: Optional[Sequence[str]] = None) -> "BaseArgs":
        parser = StrictArgumentParser()
        cls.add_arguments(parser)
        return cls.from_namespace(parser.parse_args(argv))

    def update(self, args: Any) -> None:
        names = {f.name for f in fields(self)}
        for key, value in vars(args).items():
            if key in names and value is not None and value != getattr(self, key):
                print(f"From command line, setting {key} to {value}", file=sys.stderr)
                setattr(self, key, value)

    def validate(self, command: str = "") -> None:
        pass


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise UsageError(message)


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise UsageError(f"Expected comma-separated integers, got {text!r}") from e


@dataclass
class JCArgs(BaseArgs):
    g: float = 1.0
    gamma_width: float = 2.0
    delta: float = 0.0
    omega_c: float = DEFAULT_OMEGA_C
    c1: complex = 1 + 0j
    c0: complex = 0j
    tmax: float = 5.0
    steps: int = 5000
    method: str = "exact"
    picture: str = "interaction"
    out: str = ""
    progress: bool = False

    def validate(self, command: str = "") -> None:
        _require(self.g > 0, f"--g must be positive, got {self.g}")
        _require(self.gamma_width > 0, f"--gamma-width must be positive, got {self.gamma_width}")
        _require(self.omega_c > 0, f"--omega-c must be positive, got {self.omega_c}")
        _require(self.omega_c + self.delta > 0, f"omega0 = omega_c + delta must be positive, got {self.omega_c + self.delta}")
        _require(abs(self.c0) ** 2 + abs(self.c1) ** 2 <= 1 + 1e-12, "|c0|^2 + |c1|^2 must not exceed 1")
        _require(self.tmax > 0, f"--tmax must be positive, got {self.tmax}")
        _require(self.steps >= 1, f"--steps must be at least 1, got {self.steps}")
        _require(self.method in ("exact", "master", "volterra"), f"--method must be exact, master or volterra, got {self.method!r}")
        _require(self.picture in ("interaction", "schrodinger"), f"--picture must be interaction or schrodinger, got {self.picture!r}")
        if self.method == "volterra":
            _require(self.picture == "interaction", "--method volterra only produces interaction-picture states")


@dataclass
class OracleArgs(JCArgs):
    tmax: float = 3.0
    steps: int = 3000
    modes: str = "2000,4000"
    halfwidth: float = DEFAULT_HALFWIDTH
    workers: int = 1

    def validate(self, command: str = "") -> None:
        super().validate(command)
        modes = parse_int_list(self.modes)
        _require(len(modes) > 0 and all(n >= 2 for n in modes), f"--modes needs integers >= 2, got {self.modes!r}")
        _require(self.halfwidth > 0, f"--halfwidth must be positive, got {self.halfwidth}")
        _require(self.workers >= 1, f"--workers must be at least 1, got {self.workers}")


@dataclass
class ChannelArgs(BaseArgs):
    file: str = positional(help="channel or state JSON file")
    tol: float = CP_TOL
    out: str = ""
    dims: str = ""
    dim: int = 2
    count: int = 20
    seed: int = 0

    def validate(self, command: str = "") -> None:
        _require(self.tol > 0, f"--tol must be positive, got {self.tol}")
        if command == "selftest":
            _require(self.dim >= 1, f"--dim must be positive, got {self.dim}")
            _require(self.count >= 1, f"--count must be positive, got {self.count}")
            return
        _require(bool(self.file), f"channel {command} needs an input file")
        if command == "dilate":
            _require(bool(self.out), "channel dilate needs --out")
        if command == "ppt":
            dims = parse_int_list(self.dims)
            _require(len(dims) == 2 and min(dims) >= 1, f"--dims must be 'dA,dB', got {self.dims!r}")


@dataclass
class GKSLArgs(BaseArgs):
    file: str = positional(help="superoperator or generator JSON file")
    rho0: str = ""
    tmax: float = 1.0
    steps: int = 100
    out: str = ""
    tol: float = 1e-9

    def validate(self, command: str = "") -> None:
        _require(bool(self.file), f"gksl {command} needs an input file")
        _require(self.tol > 0, f"--tol must be positive, got {self.tol}")
        if command == "evolve":
            _require(bool(self.rho0), "gksl evolve needs --rho0")
            _require(self.tmax >= 0, f"--tmax must be non-negative, got {self.tmax}")
            _require(self.steps >= 1, f"--steps must be at least 1, got {self.steps}")


@dataclass
class SweepArgs(BaseArgs):
    workers: int = 1
    seed: int = 0
    n_channels: int = 100
    n_generators: int = 50
    out: str = ""

    def validate(self, command: str = "") -> None:
        _require(self.workers >= 1, f"--workers must be at least 1, got {self.workers}")
        _require(self.n_channels >= 1 and self.n_generators >= 1, "sweep sizes must be positive")
