import math
from dataclasses import dataclass
from typing import Union

import torch
from torchtyping import TensorType

from open_systems.errors import (DimensionError, HermiticityError, NormalizationError,
                                 PositivityError, TraceError)
from open_systems.linalg import (DTYPE, HERMITICITY_TOL, as_matrix, as_vector, basis_vector,
                                 eigh, eigvalsh, identity, kron, max_norm)

_dim = None

TRACE_TOL = 1e-10
PSD_FLOOR = -1e-10
NORM_TOL = 1e-12
# only the ODE integrators build states through DensityMatrix.relaxed
RELAXED_TRACE_TOL = 1e-6

SIGMA_X = torch.tensor([[0, 1], [1, 0]], dtype=DTYPE)
SIGMA_Y = torch.tensor([[0, -1j], [1j, 0]], dtype=DTYPE)
SIGMA_Z = torch.tensor([[1, 0], [0, -1]], dtype=DTYPE)
# |0><1| in the standard basis (index 0 is |0>)
LOWERING = torch.tensor([[0, 1], [0, 0]], dtype=DTYPE)


@dataclass(frozen=True)
class PureState:
    amplitudes: TensorType["_dim"]

    def __post_init__(self):
        amplitudes = as_vector(self.amplitudes)
        norm = torch.linalg.vector_norm(amplitudes).item()
        if abs(norm - 1.0) > NORM_TOL:
            raise NormalizationError(f"State vector has norm {norm!r}, expected 1 within {NORM_TOL:.0e}")
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        v = as_vector(amplitudes)
        return cls(v / torch.linalg.vector_norm(v))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator.

    Each invariant has its own error. Eigenvalues in (PSD_FLOOR, 0) are
    clamped to zero on construction.
    """

    matrix: TensorType["_dim", "_dim"]

    def __post_init__(self):
        rho = as_matrix(self.matrix)
        if rho.shape[0] != rho.shape[1]:
            raise DimensionError(f"Density matrix must be square, got {tuple(rho.shape)}")
        gap = max_norm(rho - rho.mH)
        if gap > HERMITICITY_TOL:
            raise HermiticityError(f"Density matrix is not Hermitian: max|rho - rho^dag| = {gap:.3e}")
        rho = (rho + rho.mH) / 2
        trace = torch.trace(rho).real.item()
        if abs(trace - 1.0) > TRACE_TOL:
            raise TraceError(f"Density matrix has trace {trace!r}, expected 1 within {TRACE_TOL:.0e}")
        spectrum = eigh(rho)
        min_eig = spectrum.eigenvalues[0].item()
        if min_eig < PSD_FLOOR:
            raise PositivityError(f"Density matrix has eigenvalue {min_eig:.3e} below {PSD_FLOOR:.0e}")
        if min_eig < 0:
            clamped = torch.clamp(spectrum.eigenvalues, min=0.0).to(DTYPE)
            V = spectrum.eigenvectors
            rho = V @ torch.diag(clamped) @ V.mH
        object.__setattr__(self, "matrix", rho)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def relaxed(cls, matrix) -> "DensityMatrix":
        """Admit a trace within RELAXED_TRACE_TOL and renormalize it."""
        rho = as_matrix(matrix)
        rho = (rho + rho.mH) / 2
        trace = torch.trace(rho).real.item()
        if abs(trace - 1.0) > RELAXED_TRACE_TOL:
            raise TraceError(f"Density matrix has trace {trace!r}, expected 1 within {RELAXED_TRACE_TOL:.0e}")
        return cls(rho / trace)

    def evolve_unitary(self, U: TensorType["_dim", "_dim"]) -> "DensityMatrix":
        return DensityMatrix(U @ self.matrix @ U.mH)

    def eigenvalues(self) -> TensorType["_dim"]:
        return eigvalsh(self.matrix)


State = Union[DensityMatrix, PureState]


def project(psi: Union[PureState, torch.Tensor]) -> DensityMatrix:
    """|psi><psi| for a normalized psi."""
    if not isinstance(psi, PureState):
        psi = PureState(psi)
    v = psi.amplitudes
    return DensityMatrix(torch.outer(v, v.conj()))


def expectation(state: State, A: TensorType["_dim", "_dim"]) -> complex:
    """<A>_rho = tr(rho A); for a pure state <psi, A psi>."""
    A = as_matrix(A)
    if A.shape != (state.dim, state.dim):
        raise DimensionError(f"Observable of shape {tuple(A.shape)} does not act on dimension {state.dim}")
    if isinstance(state, PureState):
        v = state.amplitudes
        return torch.vdot(v, A @ v).item()
    return torch.trace(state.matrix @ A).item()


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.dim != sigma.dim:
        raise DimensionError(f"Cannot compare states of dimension {rho.dim} and {sigma.dim}")
    diff = rho.matrix - sigma.matrix
    return 0.5 * eigvalsh(diff).abs().sum().item()


def ket(dim: int, k: int) -> PureState:
    return PureState(basis_vector(dim, k))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(identity(dim) / dim)


def bell_state() -> PureState:
    """(|00> + |11>)/sqrt(2)."""
    return PureState(torch.tensor([1, 0, 0, 1], dtype=DTYPE) / math.sqrt(2))


def product_state(rho_a: DensityMatrix, rho_b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(kron(rho_a.matrix, rho_b.matrix))
