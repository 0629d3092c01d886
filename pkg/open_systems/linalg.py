from dataclasses import dataclass
from typing import Literal, Sequence, Union

import numpy as np
import torch
from einops import rearrange
from torchtyping import TensorType

from open_systems.errors import DimensionError, FormatError, HermiticityError

_rows, _cols, _n, _rows_a, _cols_a, _rows_b, _cols_b = None, None, None, None, None, None, None

DTYPE = torch.complex128
REAL_DTYPE = torch.float64

HERMITICITY_TOL = 1e-10
# a pivot within this of the column maximum counts as a tie; the first one wins
PHASE_TIE_TOL = 1e-12
# inputs this close to (anti-)Hermitian take the spectral route in expm
SPECTRAL_EXPM_TOL = 1e-13

MatrixLike = Union[torch.Tensor, np.ndarray, Sequence[Sequence[complex]]]


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: TensorType["_n"]
    eigenvectors: TensorType["_n", "_n"]

    def reconstruct(self) -> TensorType["_n", "_n"]:
        V = self.eigenvectors
        return V @ torch.diag(self.eigenvalues.to(DTYPE)) @ V.mH


def as_matrix(x: MatrixLike) -> TensorType["_rows", "_cols"]:
    m = torch.as_tensor(x, dtype=DTYPE)
    if m.ndim != 2:
        raise DimensionError(f"Expected a 2-d matrix, got shape {tuple(m.shape)}")
    return m


def as_vector(x) -> TensorType["_n"]:
    v = torch.as_tensor(x, dtype=DTYPE)
    if v.ndim != 1:
        raise DimensionError(f"Expected a 1-d vector, got shape {tuple(v.shape)}")
    return v


def check_square(M: torch.Tensor, name: str = "matrix") -> int:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {tuple(M.shape)}")
    return M.shape[0]


def identity(d: int) -> TensorType["_n", "_n"]:
    return torch.eye(d, dtype=DTYPE)


def basis_vector(d: int, k: int) -> TensorType["_n"]:
    e = torch.zeros(d, dtype=DTYPE)
    e[k] = 1.0
    return e


def matrix_unit(d: int, j: int, k: int) -> TensorType["_n", "_n"]:
    E = torch.zeros(d, d, dtype=DTYPE)
    E[j, k] = 1.0
    return E


def adjoint(M: TensorType["_rows", "_cols"]) -> TensorType["_cols", "_rows"]:
    return M.mH


def max_norm(M: torch.Tensor) -> float:
    if M.numel() == 0:
        return 0.0
    return M.abs().max().item()


def is_hermitian(M: torch.Tensor, tol: float = HERMITICITY_TOL) -> bool:
    return M.ndim == 2 and M.shape[0] == M.shape[1] and max_norm(M - M.mH) <= tol


def is_unitary(U: torch.Tensor, tol: float = 1e-10) -> bool:
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return max_norm(U.mH @ U - identity(U.shape[0])) <= tol


def commutator(A: torch.Tensor, B: torch.Tensor) -> torch.Tensor:
    return A @ B - B @ A


def anticommutator(A: torch.Tensor, B: torch.Tensor) -> torch.Tensor:
    return A @ B + B @ A


def kron(
    A: TensorType["_rows_a", "_cols_a"], B: TensorType["_rows_b", "_cols_b"]
) -> torch.Tensor:
    # (A (x) B)[i*rB + k, j*cB + l] = A[i, j] * B[k, l]
    return torch.kron(A.to(DTYPE).contiguous(), B.to(DTYPE).contiguous())


def partial_trace(
    X: torch.Tensor,
    dim_a: int,
    dim_b: int,
    keep: Literal["A", "B"] = "A",
) -> torch.Tensor:
    """Trace out one factor of an operator on C^dim_a (x) C^dim_b.

    tr_B (A (x) B) = A tr(B) and tr_A (A (x) B) = tr(A) B.
    """
    n = dim_a * dim_b
    if X.ndim != 2 or X.shape != (n, n):
        raise DimensionError(f"Expected a {n}x{n} operator for dims ({dim_a}, {dim_b}), got {tuple(X.shape)}")
    blocks = rearrange(X, "(a b) (c d) -> a b c d", a=dim_a, b=dim_b, c=dim_a, d=dim_b)
    if keep == "A":
        return torch.diagonal(blocks, dim1=1, dim2=3).sum(-1)
    elif keep == "B":
        return torch.diagonal(blocks, dim1=0, dim2=2).sum(-1)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def canonicalize_phases(V: TensorType["_rows", "_cols"]) -> TensorType["_rows", "_cols"]:
    """Rotate each column so its largest-magnitude entry is real positive."""
    mags = V.abs()
    is_pivot = mags >= mags.max(dim=0, keepdim=True).values - PHASE_TIE_TOL
    # argmax over a 0/1 mask returns the first pivot row
    idx = is_pivot.to(torch.int64).argmax(dim=0)
    pivots = V[idx, torch.arange(V.shape[1])]
    phases = torch.where(pivots.abs() > 0, pivots / pivots.abs(), torch.ones_like(pivots))
    return V * phases.conj()[None, :]


def eigh(M: TensorType["_n", "_n"], herm_tol: float = HERMITICITY_TOL) -> Spectrum:
    """Ascending eigendecomposition of a Hermitian matrix.

    Inputs within herm_tol of Hermitian are symmetrized first. Eigenvector
    phases are fixed by `canonicalize_phases` so results are reproducible.
    """
    check_square(M)
    gap = max_norm(M - M.mH)
    if gap > herm_tol:
        raise HermiticityError(f"Matrix is not Hermitian: max|M - M^dag| = {gap:.3e} > {herm_tol:.0e}")
    M = (M + M.mH) / 2
    eigenvalues, eigenvectors = torch.linalg.eigh(M)
    return Spectrum(eigenvalues, canonicalize_phases(eigenvectors))


def eigvalsh(M: TensorType["_n", "_n"], herm_tol: float = HERMITICITY_TOL) -> TensorType["_n"]:
    check_square(M)
    gap = max_norm(M - M.mH)
    if gap > herm_tol:
        raise HermiticityError(f"Matrix is not Hermitian: max|M - M^dag| = {gap:.3e} > {herm_tol:.0e}")
    return torch.linalg.eigvalsh((M + M.mH) / 2)


def expm(M: TensorType["_n", "_n"]) -> TensorType["_n", "_n"]:
    """Matrix exponential.

    Hermitian and anti-Hermitian inputs go through the spectral theorem,
    everything else (superoperators e^{tL} are non-normal) through torch's
    scaling-and-squaring implementation.
    """
    check_square(M, "expm argument")
    M = M.to(DTYPE)
    scale = max(1.0, max_norm(M))
    if max_norm(M - M.mH) <= SPECTRAL_EXPM_TOL * scale:
        lam, V = torch.linalg.eigh((M + M.mH) / 2)
        return V @ torch.diag(torch.exp(lam).to(DTYPE)) @ V.mH
    if max_norm(M + M.mH) <= SPECTRAL_EXPM_TOL * scale:
        H = -1j * M
        lam, V = torch.linalg.eigh((H + H.mH) / 2)
        return V @ torch.diag(torch.exp(1j * lam.to(DTYPE))) @ V.mH
    return torch.linalg.matrix_exp(M)


def expm_hermitian(H: TensorType["_n", "_n"], t: float) -> TensorType["_n", "_n"]:
    """Propagator U_t = e^{-itH} of a Hermitian H."""
    spectrum = eigh(H)
    V = spectrum.eigenvectors
    return V @ torch.diag(torch.exp(-1j * t * spectrum.eigenvalues.to(DTYPE))) @ V.mH


def matrix_to_json(M: torch.Tensor) -> dict:
    M = as_matrix(M)
    rows, cols = M.shape
    flat = M.reshape(-1)
    return {
        "rows": rows,
        "cols": cols,
        "entries": [[z.real, z.imag] for z in flat.tolist()],
    }


def matrix_from_json(obj: dict) -> TensorType["_rows", "_cols"]:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
        values = [complex(float(re), float(im)) for re, im in entries]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"Malformed matrix literal: {e}") from e
    if rows <= 0 or cols <= 0:
        raise DimensionError(f"Matrix dimensions must be positive, got {rows}x{cols}")
    if len(values) != rows * cols:
        raise DimensionError(f"Matrix literal has {len(values)} entries, expected {rows}x{cols}={rows * cols}")
    return torch.tensor(values, dtype=DTYPE).reshape(rows, cols)
