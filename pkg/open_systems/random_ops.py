from dataclasses import dataclass, field
from typing import Any, Generator, Optional

import torch
from torchtyping import TensorType

from open_systems.channels import KrausSet, QuantumChannel, choi_from_kraus
from open_systems.gksl import GKSLGenerator
from open_systems.linalg import DTYPE, REAL_DTYPE
from open_systems.states import DensityMatrix, PureState

_n, _d, _n_ops = None, None, None  # for tensortype vars


def _complex_gaussian(*shape: int, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    re = torch.randn(*shape, dtype=REAL_DTYPE, generator=generator)
    im = torch.randn(*shape, dtype=REAL_DTYPE, generator=generator)
    return torch.complex(re, im) / 2**0.5


def generate_unitary(n: int, generator: Optional[torch.Generator] = None) -> TensorType["_n", "_n"]:
    """Haar-random unitary: QR of a complex Ginibre matrix with the R-diagonal phases divided out."""
    Q, R = torch.linalg.qr(_complex_gaussian(n, n, generator=generator))
    diag = torch.diagonal(R)
    return Q * (diag / diag.abs())[None, :]


def generate_hermitian(d: int, generator: Optional[torch.Generator] = None, scale: float = 1.0) -> TensorType["_d", "_d"]:
    A = _complex_gaussian(d, d, generator=generator)
    return scale * (A + A.mH) / 2


def generate_pure_state(d: int, generator: Optional[torch.Generator] = None) -> PureState:
    return PureState.normalized(_complex_gaussian(d, generator=generator))


def generate_density_matrix(
    d: int, generator: Optional[torch.Generator] = None, rank: Optional[int] = None
) -> DensityMatrix:
    """rho = A A^dag / tr(A A^dag) with A a d x rank Ginibre matrix (full rank by default)."""
    A = _complex_gaussian(d, rank or d, generator=generator)
    rho = A @ A.mH
    return DensityMatrix(rho / torch.trace(rho).real)


def generate_kraus_set(
    d: int, generator: Optional[torch.Generator] = None, n_ops: Optional[int] = None
) -> KrausSet:
    """K_a[m, i] = U[(m a), (i 0)] for a random unitary U on C^d (x) C^n_ops.

    The ancilla starts in e_0, so the columns used form an isometry and the
    Kraus operators are complete.
    """
    n_ops = n_ops or d * d
    U = generate_unitary(d * n_ops, generator=generator)
    block = U.reshape(d, n_ops, d, n_ops)[:, :, :, 0]
    return KrausSet(block.permute(1, 0, 2).contiguous())


def generate_channel(d: int, generator: Optional[torch.Generator] = None, n_ops: Optional[int] = None) -> QuantumChannel:
    return choi_from_kraus(generate_kraus_set(d, generator=generator, n_ops=n_ops))


def generate_gksl_generator(
    d: int, generator: Optional[torch.Generator] = None, n_jumps: Optional[int] = None, rate_scale: float = 1.0
) -> GKSLGenerator:
    n_jumps = n_jumps if n_jumps is not None else d
    H = generate_hermitian(d, generator=generator)
    H = H - torch.trace(H) / d * torch.eye(d, dtype=DTYPE)
    jumps = []
    for _ in range(n_jumps):
        V = _complex_gaussian(d, d, generator=generator)
        gamma = rate_scale * torch.rand(1, dtype=REAL_DTYPE, generator=generator).item()
        jumps.append((V, gamma))
    return GKSLGenerator(d, H, tuple(jumps))


@dataclass
class RandomChannelGenerator(Generator):
    """Endless stream of random CPTP channels on C^dim from a seeded torch.Generator."""

    dim: int
    seed: int = 0
    n_ops: Optional[int] = None

    rng: torch.Generator = field(init=False)

    def __post_init__(self):
        self.rng = torch.Generator().manual_seed(self.seed)

    def send(self, ignored_arg: Any) -> QuantumChannel:
        return generate_channel(self.dim, generator=self.rng, n_ops=self.n_ops)

    def throw(self, type: Any = None, value: Any = None, traceback: Any = None) -> None:
        raise StopIteration
