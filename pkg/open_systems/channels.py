"""Quantum channels on C^d.

Choi convention: v = sum_j e_j (x) e_j (unnormalized) and

    C = (Phi (x) id)(|v><v|) = sum_jk Phi(|e_j><e_k|) (x) |e_j><e_k|

with the OUTPUT factor first, so C[(m j), (n k)] = Phi(E_jk)[m, n]. Many
references use the transposed ordering (input factor first); every function
here, and every file this package writes, uses output-first.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple, Union

import torch
from einops import rearrange
from torchtyping import TensorType

from open_systems.errors import (CompletenessError, CompletePositivityError, DimensionError,
                                 FormatError, HermiticityError, IsometryError, TraceError)
from open_systems.linalg import (DTYPE, as_matrix, as_vector, basis_vector, eigh, eigvalsh,
                                 identity, kron, matrix_from_json, matrix_to_json, matrix_unit,
                                 max_norm, partial_trace)
from open_systems.states import DensityMatrix, PureState

_n_ops, _d, _dd, _big, _k = None, None, None, None, None

CP_TOL = 1e-9
COMPLETENESS_TOL = 1e-9
# relative to the largest choi eigenvalue
KRAUS_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10
# Gram-Schmidt candidates with a smaller residual are skipped
GS_SKIP_TOL = 1e-8
UNITARY_TOL = 1e-9


@dataclass(frozen=True)
class KrausSet:
    operators: TensorType["_n_ops", "_d", "_d"]

    def __post_init__(self):
        ops = self.operators
        if not isinstance(ops, torch.Tensor):
            ops = torch.stack([as_matrix(K) for K in ops])
        ops = ops.to(DTYPE)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] == 0:
            raise DimensionError(f"Kraus operators must be a non-empty stack of square matrices, got {tuple(ops.shape)}")
        d = ops.shape[1]
        if ops.shape[0] > d * d:
            raise DimensionError(f"{ops.shape[0]} Kraus operators exceed d^2 = {d * d}")
        gap = completeness_residual(ops)
        if gap > COMPLETENESS_TOL:
            raise CompletenessError(f"sum_a K_a^dag K_a differs from I by {gap:.3e} (tol {COMPLETENESS_TOL:.0e})")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def __len__(self) -> int:
        return self.operators.shape[0]

    def __iter__(self):
        return iter(self.operators)


class CPTPReport(NamedTuple):
    cp: bool
    tp: bool
    min_choi_eig: float
    tp_residual: float


@dataclass(frozen=True)
class QuantumChannel:
    dim: int
    choi: TensorType["_dd", "_dd"]

    def __post_init__(self):
        choi = as_matrix(self.choi)
        d = self.dim
        if d <= 0 or choi.shape != (d * d, d * d):
            raise DimensionError(f"Choi matrix for d={d} must be {d * d}x{d * d}, got {tuple(choi.shape)}")
        report = is_cptp(choi, d, tol=CP_TOL)
        if not report.cp:
            raise CompletePositivityError(
                f"Choi matrix has eigenvalue {report.min_choi_eig:.3e} below -{CP_TOL:.0e}",
                min_eigenvalue=report.min_choi_eig,
            )
        if not report.tp:
            raise TraceError(f"Channel is not trace preserving: |tr_out(C) - I| = {report.tp_residual:.3e}")
        object.__setattr__(self, "choi", (choi + choi.mH) / 2)

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        return apply(self, rho)

    def apply_operator(self, X: TensorType["_d", "_d"]) -> TensorType["_d", "_d"]:
        """Linear extension of the channel to arbitrary d x d operators."""
        d = self.dim
        blocks = rearrange(self.choi, "(m j) (n k) -> m j n k", m=d, j=d, n=d, k=d)
        return torch.einsum("mjnk,jk->mn", blocks, X.to(DTYPE))


@dataclass(frozen=True)
class Dilation:
    """Unitary U on system (x) ancilla with Tr_R[U (X (x) |Omega><Omega|) U^dag] = Phi(X).

    The composite index is i * dim_r + r (system major).
    """

    dim: int
    dim_r: int
    omega: PureState
    U: TensorType["_big", "_big"]

    def __post_init__(self):
        n = self.dim * self.dim_r
        if self.U.shape != (n, n):
            raise DimensionError(f"Dilation unitary must be {n}x{n}, got {tuple(self.U.shape)}")
        if self.omega.dim != self.dim_r:
            raise DimensionError(f"Ancilla state has dimension {self.omega.dim}, expected {self.dim_r}")
        gap = max_norm(self.U.mH @ self.U - identity(n))
        if gap > UNITARY_TOL:
            raise IsometryError(f"Dilation operator is not unitary: |U^dag U - I| = {gap:.3e}")

    def reduce_operator(self, X: TensorType["_d", "_d"]) -> TensorType["_d", "_d"]:
        v = self.omega.amplitudes
        joint = kron(X, torch.outer(v, v.conj()))
        return partial_trace(self.U @ joint @ self.U.mH, self.dim, self.dim_r, keep="A")

    def reduce(self, rho: DensityMatrix) -> DensityMatrix:
        return DensityMatrix.relaxed(self.reduce_operator(rho.matrix))

    def residual(self, channel: QuantumChannel) -> float:
        """Max-norm deviation from `channel` over all matrix units E_jk."""
        d = self.dim
        return max(
            max_norm(self.reduce_operator(matrix_unit(d, j, k)) - channel.apply_operator(matrix_unit(d, j, k)))
            for j in range(d)
            for k in range(d)
        )


def completeness_residual(operators: TensorType["_n_ops", "_d", "_d"]) -> float:
    d = operators.shape[-1]
    total = torch.einsum("aji,ajk->ik", operators.conj(), operators)
    return max_norm(total - identity(d))


def choi_matrix_from_operators(operators: TensorType["_n_ops", "_d", "_d"]) -> TensorType["_dd", "_dd"]:
    """sum_a |w_a><w_a| with w_a = (K_a (x) I) v, without any validation."""
    # (K (x) I) v has component (m, j) equal to K[m, j]
    w = rearrange(operators.to(DTYPE), "a m j -> a (m j)")
    return torch.einsum("ax,ay->xy", w, w.conj())


def choi_from_kraus(kraus: Union[KrausSet, Sequence[torch.Tensor], torch.Tensor]) -> QuantumChannel:
    if not isinstance(kraus, KrausSet):
        kraus = KrausSet(kraus)
    return QuantumChannel(kraus.dim, choi_matrix_from_operators(kraus.operators))


def kraus_from_choi(channel: QuantumChannel, tol: float = KRAUS_TOL) -> KrausSet:
    """Kraus operators from the spectral decomposition of the choi matrix.

    Eigenvalues at or below tol * lambda_max are dropped; operators come out
    in descending eigenvalue order, each with its largest-magnitude entry
    real positive.
    """
    d = channel.dim
    spectrum = eigh(channel.choi)
    lam = spectrum.eigenvalues.flip(0)
    vecs = spectrum.eigenvectors.flip(1)
    if lam[-1].item() < -CP_TOL:
        raise CompletePositivityError(
            f"Choi matrix has eigenvalue {lam[-1].item():.3e} below -{CP_TOL:.0e}", min_eigenvalue=lam[-1].item()
        )
    keep = lam > tol * lam[0]
    lam, vecs = lam[keep], vecs[:, keep]
    # eigh fixes each eigenvector's largest entry real positive; the sqrt(lambda) scaling keeps it so
    ops = rearrange(vecs * lam.sqrt().to(DTYPE)[None, :], "(m n) a -> a m n", m=d, n=d)
    assert ops.shape[0] <= d * d, f"Kraus rank {ops.shape[0]} exceeds d^2 = {d * d}"
    return KrausSet(ops)


def is_cptp(choi_candidate: TensorType["_dd", "_dd"], d: int, tol: float = CP_TOL) -> CPTPReport:
    C = as_matrix(choi_candidate)
    if C.shape != (d * d, d * d):
        raise DimensionError(f"Choi candidate for d={d} must be {d * d}x{d * d}, got {tuple(C.shape)}")
    gap = max_norm(C - C.mH)
    if gap > tol:
        raise HermiticityError(f"Choi candidate is not Hermitian: max|C - C^dag| = {gap:.3e}")
    min_eig = eigvalsh(C, herm_tol=tol)[0].item()
    tp_residual = max_norm(partial_trace(C, d, d, keep="B") - identity(d))
    return CPTPReport(cp=min_eig >= -tol, tp=tp_residual <= tol, min_choi_eig=min_eig, tp_residual=tp_residual)


def apply(channel: QuantumChannel, rho: DensityMatrix) -> DensityMatrix:
    if rho.dim != channel.dim:
        raise DimensionError(f"Channel on dimension {channel.dim} cannot act on a state of dimension {rho.dim}")
    # channels are trace preserving only to CP_TOL
    return DensityMatrix.relaxed(channel.apply_operator(rho.matrix))


def extend_isometry(V_cols: Union[TensorType["_big", "_k"], List[torch.Tensor]]) -> TensorType["_big", "_big"]:
    """Complete k orthonormal columns in C^N to an N x N unitary.

    The inputs become the first k columns unchanged; the rest come from
    Gram-Schmidt over e_0, e_1, ... in order.
    """
    if isinstance(V_cols, torch.Tensor):
        V = V_cols.to(DTYPE)
    else:
        V = torch.stack([as_vector(v) for v in V_cols], dim=1)
    if V.ndim != 2 or V.shape[1] > V.shape[0]:
        raise IsometryError(f"Cannot complete {tuple(V.shape)} columns to a unitary")
    N, k = V.shape
    gap = max_norm(V.mH @ V - identity(k))
    if gap > ORTHONORMAL_TOL:
        raise IsometryError(f"Supplied columns are not orthonormal: |V^dag V - I| = {gap:.3e}")

    columns = [V[:, i] for i in range(k)]
    for j in range(N):
        if len(columns) == N:
            break
        Q = torch.stack(columns, dim=1)
        c = basis_vector(N, j)
        for _ in range(2):
            c = c - Q @ (Q.mH @ c)
        r = torch.linalg.vector_norm(c).item()
        if r < GS_SKIP_TOL:
            continue
        columns.append(c / r)
    assert len(columns) == N, f"Gram-Schmidt produced {len(columns)} of {N} columns"
    return torch.stack(columns, dim=1)


def orthonormalize_columns(V: TensorType["_big", "_k"]) -> TensorType["_big", "_k"]:
    """Nearest isometry V (V^dag V)^{-1/2} to columns that are nearly orthonormal."""
    gram = eigh(V.mH @ V)
    if gram.eigenvalues[0].item() < GS_SKIP_TOL:
        raise IsometryError("Columns are linearly dependent and have no nearest isometry")
    inv_sqrt = gram.eigenvalues.rsqrt().to(DTYPE)
    return V @ (gram.eigenvectors * inv_sqrt[None, :]) @ gram.eigenvectors.mH


def dilate(channel: QuantumChannel) -> Dilation:
    """Unitary dilation with the minimal ancilla (dimension = Kraus rank)."""
    d = channel.dim
    K = kraus_from_choi(channel).operators
    n_r = K.shape[0]
    # V (e_i (x) Omega) = sum_a K_a e_i (x) e_a
    isometry = rearrange(K, "a m i -> (m a) i")
    # V^dag V = sum_a K_a^dag K_a is the identity only to COMPLETENESS_TOL
    W = extend_isometry(orthonormalize_columns(isometry))

    omega_slots = [i * n_r for i in range(d)]
    free_slots = [s for s in range(d * n_r) if s % n_r != 0]
    U = torch.zeros_like(W)
    U[:, omega_slots] = W[:, :d]
    U[:, free_slots] = W[:, d:]
    return Dilation(dim=d, dim_r=n_r, omega=PureState(basis_vector(n_r, 0)), U=U)


def partial_transpose(rho: Union[DensityMatrix, torch.Tensor], dim_a: int, dim_b: int) -> TensorType["_dd", "_dd"]:
    """Transpose the second tensor factor."""
    X = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    if X.shape != (dim_a * dim_b, dim_a * dim_b):
        raise DimensionError(f"Operator of shape {tuple(X.shape)} does not split as {dim_a}x{dim_b}")
    blocks = rearrange(X, "(a b) (c d) -> a b c d", a=dim_a, b=dim_b, c=dim_a, d=dim_b)
    return rearrange(blocks.permute(0, 3, 2, 1), "a b c d -> (a b) (c d)")


def ppt_min_eig(rho: Union[DensityMatrix, torch.Tensor], dim_a: int, dim_b: int) -> float:
    """Smallest eigenvalue of the partial transpose; negative certifies entanglement."""
    return eigvalsh(partial_transpose(rho, dim_a, dim_b))[0].item()


def identity_channel(d: int) -> QuantumChannel:
    return choi_from_kraus(identity(d)[None])


def unitary_channel(V: TensorType["_d", "_d"]) -> QuantumChannel:
    return choi_from_kraus(as_matrix(V)[None])


def amplitude_damping(p: float) -> QuantumChannel:
    """Decay |1> -> |0> with probability p."""
    K0 = torch.tensor([[1, 0], [0, (1 - p) ** 0.5]], dtype=DTYPE)
    K1 = torch.tensor([[0, p**0.5], [0, 0]], dtype=DTYPE)
    return choi_from_kraus(torch.stack([K0, K1]))


def depolarizing(p: float, d: int = 2) -> QuantumChannel:
    """rho -> (1 - p) rho + p I/d."""
    v = identity(d).reshape(-1)
    choi = (1 - p) * torch.outer(v, v) + p * identity(d * d) / d
    return QuantumChannel(d, choi)


def transpose_choi(d: int) -> TensorType["_dd", "_dd"]:
    """Choi matrix of X -> X^T: the swap operator. Positive but not completely positive."""
    I = identity(d)
    return rearrange(torch.einsum("mk,jn->mjnk", I, I), "m j n k -> (m j) (n k)")


def compose(outer: QuantumChannel, inner: QuantumChannel) -> QuantumChannel:
    """The channel X -> outer(inner(X))."""
    if outer.dim != inner.dim:
        raise DimensionError(f"Cannot compose channels on dimensions {outer.dim} and {inner.dim}")
    A, B = kraus_from_choi(outer).operators, kraus_from_choi(inner).operators
    products = rearrange(torch.einsum("amk,bkn->abmn", A, B), "a b m n -> (a b) m n")
    return QuantumChannel(outer.dim, choi_matrix_from_operators(products))


def channel_from_json(obj: dict) -> QuantumChannel:
    """Parse {"dim", "kraus": [...]} or {"dim", "choi": ...}."""
    d = _dim_from_json(obj)
    if "kraus" in obj:
        return choi_from_kraus(kraus_operators_from_json(obj))
    if "choi" in obj:
        return QuantumChannel(d, matrix_from_json(obj["choi"]))
    raise FormatError("Channel file needs a 'kraus' or a 'choi' entry")


def _dim_from_json(obj: dict) -> int:
    try:
        d = int(obj["dim"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"Channel file needs an integer 'dim': {e}") from e
    if d <= 0:
        raise DimensionError(f"'dim' must be positive, got {d}")
    return d


def kraus_operators_from_json(obj: dict) -> TensorType["_n_ops", "_d", "_d"]:
    d = _dim_from_json(obj)
    entries = obj["kraus"]
    if not isinstance(entries, list) or not entries or not all(isinstance(K, dict) for K in entries):
        raise FormatError("'kraus' must be a non-empty list of matrix literals")
    ops = torch.stack([matrix_from_json(K) for K in entries])
    if ops.shape[1:] != (d, d):
        raise DimensionError(f"Kraus operators have shape {tuple(ops.shape[1:])}, expected {d}x{d}")
    return ops


def choi_from_json_loose(obj: dict) -> Tuple[int, torch.Tensor]:
    """(dim, choi) from a channel file without validating the channel."""
    d = _dim_from_json(obj)
    if "kraus" in obj:
        return d, choi_matrix_from_operators(kraus_operators_from_json(obj))
    if "choi" in obj:
        return d, matrix_from_json(obj["choi"])
    raise FormatError("Channel file needs a 'kraus' or a 'choi' entry")


def kraus_to_json(kraus: KrausSet) -> dict:
    return {"dim": kraus.dim, "kraus": [matrix_to_json(K) for K in kraus.operators]}


def dilation_to_json(dilation: Dilation) -> dict:
    return {
        "dim": dilation.dim,
        "dimR": dilation.dim_r,
        "omega": [[z.real, z.imag] for z in dilation.omega.amplitudes.tolist()],
        "U": matrix_to_json(dilation.U),
    }
