"""Superoperators, Markovian semigroups and the GKSL normal form.

vec stacks COLUMNS: vec(X)[k * d + j] = X[j, k], so that X -> A X B is the
matrix (B^T (x) A) acting on vec(X). Every superoperator matrix in this
package uses that convention.
"""

from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import torch
from einops import rearrange
from torchtyping import TensorType

from open_systems.channels import QuantumChannel
from open_systems.errors import (DimensionError, DomainError, FormatError, HermiticityError,
                                 NormalizationError, NotCompletelyPositiveGenerator,
                                 NotTracePreserving)
from open_systems.linalg import (DTYPE, HERMITICITY_TOL, as_matrix, eigh, expm, identity, kron,
                                 matrix_from_json, matrix_to_json, matrix_unit, max_norm)
from open_systems.states import DensityMatrix

_d, _dd, _n_ops = None, None, None

GAMMA_FLOOR = -1e-12
GENERATOR_TRACE_TOL = 1e-10
TRACE_ANNIHILATION_TOL = 1e-8
HERMITICITY_PRESERVING_TOL = 1e-8
CP_GENERATOR_TOL = 1e-8
BASIS_TOL = 1e-12


def vec(X: TensorType["_d", "_d"]) -> TensorType["_dd"]:
    return X.mT.reshape(-1)


def unvec(v: TensorType["_dd"], d: int) -> TensorType["_d", "_d"]:
    return v.reshape(d, d).mT


def sandwich(A: TensorType["_d", "_d"], B: TensorType["_d", "_d"]) -> TensorType["_dd", "_dd"]:
    """Matrix of X -> A X B."""
    return kron(B.mT, A)


@dataclass(frozen=True)
class Superoperator:
    dim: int
    matrix: TensorType["_dd", "_dd"]

    def __post_init__(self):
        M = as_matrix(self.matrix)
        if M.shape != (self.dim**2, self.dim**2):
            raise DimensionError(f"Superoperator on d={self.dim} must be {self.dim**2}x{self.dim**2}, got {tuple(M.shape)}")
        object.__setattr__(self, "matrix", M)

    def __call__(self, X: TensorType["_d", "_d"]) -> TensorType["_d", "_d"]:
        return unvec(self.matrix @ vec(X.to(DTYPE)), self.dim)

    @classmethod
    def from_map(cls, fn: Callable[[torch.Tensor], torch.Tensor], d: int) -> "Superoperator":
        """Tabulate a linear map on the matrix units, column by column in vec order."""
        columns = [vec(fn(matrix_unit(d, col % d, col // d)).to(DTYPE)) for col in range(d * d)]
        return cls(d, torch.stack(columns, dim=1))


@dataclass(frozen=True)
class GKSLGenerator:
    """L X = -i[H, X] + sum_l gamma_l (V_l X V_l^dag - 1/2 {V_l^dag V_l, X}); hbar = 1."""

    dim: int
    H: TensorType["_d", "_d"]
    jumps: Tuple[Tuple[torch.Tensor, float], ...] = field(default=())

    def __post_init__(self):
        d = self.dim
        H = as_matrix(self.H)
        if H.shape != (d, d):
            raise DimensionError(f"Hamiltonian must be {d}x{d}, got {tuple(H.shape)}")
        gap = max_norm(H - H.mH)
        if gap > HERMITICITY_TOL:
            raise HermiticityError(f"Hamiltonian is not Hermitian: max|H - H^dag| = {gap:.3e}")
        jumps = []
        for V, gamma in self.jumps:
            V = as_matrix(V)
            if V.shape != (d, d):
                raise DimensionError(f"Jump operator must be {d}x{d}, got {tuple(V.shape)}")
            gamma = float(gamma)
            if gamma < GAMMA_FLOOR:
                raise DomainError(f"Jump rate {gamma!r} is negative")
            jumps.append((V, max(gamma, 0.0)))
        object.__setattr__(self, "H", (H + H.mH) / 2)
        object.__setattr__(self, "jumps", tuple(jumps))

        L = self._matrix()
        residual = max_norm(vec(identity(d)).conj() @ L)
        if residual > GENERATOR_TRACE_TOL * max(1.0, max_norm(L)):
            raise NotTracePreserving(f"Generator does not annihilate the trace: {residual:.3e}", residual=residual)

    def _matrix(self) -> TensorType["_dd", "_dd"]:
        d = self.dim
        I = identity(d)
        L = -1j * (sandwich(self.H, I) - sandwich(I, self.H))
        for V, gamma in self.jumps:
            VdV = V.mH @ V
            L = L + gamma * (sandwich(V, V.mH) - 0.5 * sandwich(VdV, I) - 0.5 * sandwich(I, VdV))
        return L

    @property
    def gammas(self) -> List[float]:
        return [gamma for _, gamma in self.jumps]

    def max_rate(self) -> float:
        return max(self.gammas, default=0.0)


@dataclass(frozen=True)
class OperatorBasis:
    """Orthonormal basis of d x d matrices under tr(F_i^dag F_j); the last element is I/sqrt(d)."""

    dim: int
    F: TensorType["_n_ops", "_d", "_d"]

    def __post_init__(self):
        d = self.dim
        F = self.F.to(DTYPE)
        if F.shape != (d * d, d, d):
            raise DimensionError(f"Operator basis for d={d} must have shape ({d * d}, {d}, {d}), got {tuple(F.shape)}")
        gram = torch.einsum("aij,bij->ab", F.conj(), F)
        gap = max_norm(gram - identity(d * d))
        if gap > BASIS_TOL:
            raise NormalizationError(f"Operator basis is not orthonormal: |Gram - I| = {gap:.3e}")
        traces = torch.einsum("aii->a", F)
        if max_norm(traces[:-1]) > BASIS_TOL or abs(traces[-1].item() - d**0.5) > BASIS_TOL:
            raise NormalizationError("Operator basis must be traceless except for a final I/sqrt(d)")
        object.__setattr__(self, "F", F)


class Decomposition(NamedTuple):
    generator: GKSLGenerator
    a_matrix: TensorType["_n_ops", "_n_ops"]
    residual: float
    a_min_eig: float


def gell_mann_basis(d: int) -> OperatorBasis:
    """Generalized Gell-Mann matrices, normalized, followed by I/sqrt(d)."""
    symmetric, antisymmetric, diagonal = [], [], []
    for j in range(d):
        for k in range(j + 1, d):
            E_jk, E_kj = matrix_unit(d, j, k), matrix_unit(d, k, j)
            symmetric.append((E_jk + E_kj) / 2**0.5)
            antisymmetric.append((-1j * E_jk + 1j * E_kj) / 2**0.5)
    for l in range(1, d):
        D = torch.zeros(d, d, dtype=DTYPE)
        D[:l, :l] = identity(l)
        D[l, l] = -l
        diagonal.append(D / (l * (l + 1)) ** 0.5)
    return OperatorBasis(d, torch.stack(symmetric + antisymmetric + diagonal + [identity(d) / d**0.5]))


def superop_from_generator(G: GKSLGenerator) -> Superoperator:
    return Superoperator(G.dim, G._matrix())


def superop_to_choi(S: Superoperator) -> TensorType["_dd", "_dd"]:
    # S[(n m), (k j)] = Phi(E_jk)[m, n] = C[(m j), (n k)]
    d = S.dim
    return rearrange(S.matrix, "(n m) (k j) -> (m j) (n k)", n=d, m=d, k=d, j=d)


def superop_from_choi(choi: TensorType["_dd", "_dd"], d: int) -> Superoperator:
    return Superoperator(d, rearrange(choi, "(m j) (n k) -> (n m) (k j)", n=d, m=d, k=d, j=d))


def propagator(G: GKSLGenerator, t: float) -> Superoperator:
    if t < 0:
        raise DomainError(f"Semigroup is only defined for t >= 0, got t = {t}")
    return Superoperator(G.dim, expm(t * superop_from_generator(G).matrix))


def propagator_channel(G: GKSLGenerator, t: float) -> QuantumChannel:
    return QuantumChannel(G.dim, superop_to_choi(propagator(G, t)))


def evolve(G: GKSLGenerator, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """rho(t) = e^{tL} rho(0)."""
    if rho0.dim != G.dim:
        raise DimensionError(f"Generator on dimension {G.dim} cannot evolve a state of dimension {rho0.dim}")
    return DensityMatrix.relaxed(propagator(G, t)(rho0.matrix))


def evolve_grid(G: GKSLGenerator, rho0: DensityMatrix, times: Sequence[float]) -> List[DensityMatrix]:
    return [evolve(G, rho0, t) for t in times]


def semigroup_check(G: GKSLGenerator, t: float, s: float) -> float:
    """max-norm of e^{(t+s)L} - e^{tL} e^{sL}."""
    joint = propagator(G, t + s).matrix
    split = propagator(G, t).matrix @ propagator(G, s).matrix
    return max_norm(joint - split)


def finite_difference_generator(channel_t: QuantumChannel, t: float) -> Superoperator:
    """(Phi_t - id)/t for a small-time channel Phi_t."""
    if t <= 0:
        raise DomainError(f"Finite-difference step must be positive, got {t}")
    d = channel_t.dim
    S = superop_from_choi(channel_t.choi, d).matrix
    return Superoperator(d, (S - identity(d * d)) / t)


def _check_preconditions(L: Superoperator):
    d = L.dim
    residual = max_norm(vec(identity(d)).conj() @ L.matrix)
    if residual > TRACE_ANNIHILATION_TOL:
        raise NotTracePreserving(f"Superoperator does not annihilate the trace: {residual:.3e}", residual=residual)
    gap = max(
        max_norm(L(matrix_unit(d, j, k)).mH - L(matrix_unit(d, k, j))) for j in range(d) for k in range(d)
    )
    if gap > HERMITICITY_PRESERVING_TOL:
        raise HermiticityError(f"Superoperator does not preserve Hermiticity: {gap:.3e}")


def gksl_decompose(L: Superoperator, basis: Optional[OperatorBasis] = None) -> Decomposition:
    """Bring a trace-annihilating, Hermiticity-preserving L into GKSL form.

    L is expanded as sum_ij c_ij F_i X F_j^dag by solving the d^4 linear system
    on the products F_i (.) F_j^dag. With n the index of I/sqrt(d):
      a   = c[:n, :n]
      F   = (1/sqrt d) sum_{i<n} c_in F_i
      H   = -(F - F^dag)/(2i)            (traceless)
      V_l = sum_i U_il F_i, gamma_l = D_l for a = U D U^dag.
    Every one of the d^2 - 1 jumps is returned, including zero rates.
    """
    d = L.dim
    basis = basis or gell_mann_basis(d)
    if basis.dim != d:
        raise DimensionError(f"Basis for d={basis.dim} cannot expand a superoperator on d={d}")
    _check_preconditions(L)

    F = basis.F
    n = d * d - 1
    columns = [sandwich(F[i], F[j].mH).reshape(-1) for i in range(d * d) for j in range(d * d)]
    system = torch.stack(columns, dim=1)
    c = torch.linalg.solve(system, L.matrix.reshape(-1)).reshape(d * d, d * d)

    a = c[:n, :n]
    a = (a + a.mH) / 2
    F_mean = torch.einsum("i,imn->mn", c[:n, n], F[:n]) / d**0.5
    H = -(F_mean - F_mean.mH) / 2j

    # trace preservation: Re F + c_nn/(2d) I = -1/2 sum_ij a_ij F_j^dag F_i
    G = (F_mean + F_mean.mH) / 2 + (c[n, n].real / (2 * d)) * identity(d)
    consistency = max_norm(G + 0.5 * torch.einsum("ij,jba,ibc->ac", a, F[:n].conj(), F[:n]))
    if consistency > TRACE_ANNIHILATION_TOL * max(1.0, max_norm(L.matrix)):
        raise NotTracePreserving(f"Re F is inconsistent with trace preservation: {consistency:.3e}", residual=consistency)

    spectrum = eigh(a, herm_tol=CP_GENERATOR_TOL)
    min_eig = spectrum.eigenvalues[0].item()
    if min_eig < -CP_GENERATOR_TOL:
        raise NotCompletelyPositiveGenerator(
            f"Coefficient matrix has eigenvalue {min_eig:.3e}; the semigroup is not completely positive",
            min_eigenvalue=min_eig,
        )
    rates = torch.clamp(spectrum.eigenvalues, min=0.0)
    jump_ops = torch.einsum("il,imn->lmn", spectrum.eigenvectors, F[:n])
    generator = GKSLGenerator(d, H, tuple((V, rate.item()) for V, rate in zip(jump_ops, rates)))
    residual = max_norm(superop_from_generator(generator).matrix - L.matrix)
    return Decomposition(generator, a, residual, min_eig)


def generator_to_json(G: GKSLGenerator) -> dict:
    return {
        "dim": G.dim,
        "H": matrix_to_json(G.H),
        "jumps": [{"V": matrix_to_json(V), "gamma": gamma} for V, gamma in G.jumps],
    }


def generator_from_json(obj: dict) -> GKSLGenerator:
    try:
        d = int(obj["dim"])
        H = matrix_from_json(obj["H"])
        jumps = tuple((matrix_from_json(j["V"]), float(j["gamma"])) for j in obj.get("jumps", []))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"Malformed generator file: {e}") from e
    return GKSLGenerator(d, H, jumps)


def superop_from_json(obj: dict) -> Superoperator:
    """Accepts {"dim", "superop": matrix} or a generator file."""
    if "superop" in obj:
        try:
            d = int(obj["dim"])
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"Superoperator file needs an integer 'dim': {e}") from e
        return Superoperator(d, matrix_from_json(obj["superop"]))
    if "H" in obj:
        return superop_from_generator(generator_from_json(obj))
    raise FormatError("Expected a 'superop' matrix or a generator with 'H' and 'jumps'")


def superop_to_json(S: Superoperator) -> dict:
    return {"dim": S.dim, "superop": matrix_to_json(S.matrix)}
