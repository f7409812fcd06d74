"""Truncated Fock-space operators and the superoperators of the laser models.

Operators on the operator space are represented as sparse matrices acting on
column-stacked vectors: ``vec(X)[m*dim + n] = X[n, m]``.  With that convention
``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as sparse_norm

from .model import ConfigError, ModelParams

# Flipped only by the validation negative control.
_SPOST_ROW_STACKED = False


@contextlib.contextmanager
def _mismatched_vectorization():
    """Build right-multiplication superoperators with the row-stacking formula.

    Debug aid: Liouvillians built inside this context are inconsistent with
    ``vec``/``unvec`` and must fail the trace-preservation check.
    """
    global _SPOST_ROW_STACKED
    old = _SPOST_ROW_STACKED
    _SPOST_ROW_STACKED = True
    try:
        yield
    finally:
        _SPOST_ROW_STACKED = old


def default_dim(mu: float) -> int:
    """Truncation heuristic: Poissonian tail beyond 8 standard deviations."""
    return int(math.ceil(mu + 8 * math.sqrt(mu) + 10))


@dataclass(frozen=True)
class FockSpace:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ConfigError(f"Fock dimension must be an integer >= 2, got {self.dim!r}")

    @classmethod
    def for_mean(cls, mu: float) -> "FockSpace":
        return cls(default_dim(mu))

    @property
    def superdim(self) -> int:
        return self.dim * self.dim

    def basis_index(self, n: int, m: int) -> int:
        """Position of ``|n><m|`` in a column-stacked vector."""
        return m * self.dim + n


@dataclass(frozen=True, eq=False)
class FockOperator:
    space: FockSpace
    matrix: sp.csr_matrix

    def __post_init__(self):
        if self.matrix.shape != (self.space.dim, self.space.dim):
            raise ConfigError(
                f"operator shape {self.matrix.shape} does not match dim={self.space.dim}")
        object.__setattr__(self, "matrix", sp.csr_matrix(self.matrix, dtype=complex))

    def dag(self) -> "FockOperator":
        return FockOperator(self.space, self.matrix.conj().T.tocsr())

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        _check_same_space(self.space, other.space)
        return FockOperator(self.space, self.matrix @ other.matrix)

    def __mul__(self, scalar) -> "FockOperator":
        return FockOperator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __add__(self, other: "FockOperator") -> "FockOperator":
        _check_same_space(self.space, other.space)
        return FockOperator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return self + (-1) * other

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self.matrix - self.matrix.conj().T
        scale = max(1.0, sparse_norm(self.matrix))
        return sparse_norm(diff) <= tol * scale


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Sparse linear map on column-stacked operators.

    ``leak`` is the Frobenius norm of matrix elements discarded at the
    truncation edge (already multiplied by any scalar coefficient).
    """

    space: FockSpace
    matrix: sp.csr_matrix
    leak: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.space.superdim
        if self.matrix.shape != (n, n):
            raise ConfigError(f"superoperator shape {self.matrix.shape} != ({n}, {n})")
        object.__setattr__(self, "matrix", sp.csr_matrix(self.matrix, dtype=complex))

    def __call__(self, X) -> np.ndarray:
        if isinstance(X, FockOperator):
            X = X.toarray()
        X = np.asarray(X)
        if X.shape != (self.space.dim, self.space.dim):
            raise ConfigError(f"operand shape {X.shape} does not match dim={self.space.dim}")
        return unvec(self.matrix @ vec(X), self.space.dim)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        _check_same_space(self.space, other.space)
        return Superoperator(self.space, self.matrix + other.matrix, self.leak + other.leak)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return self + (-1) * other

    def __mul__(self, scalar) -> "Superoperator":
        return Superoperator(self.space, self.matrix * scalar, abs(scalar) * self.leak)

    __rmul__ = __mul__

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _check_same_space(a: FockSpace, b: FockSpace):
    if a != b:
        raise ConfigError(f"dimension mismatch: {a.dim} vs {b.dim}")


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def basis_operator(space: FockSpace, n: int, m: int) -> np.ndarray:
    """Dense ``|n><m|``."""
    X = np.zeros((space.dim, space.dim), dtype=complex)
    X[n, m] = 1.0
    return X


# --- operators -------------------------------------------------------------

def make_annihilation(space: FockSpace) -> FockOperator:
    d = space.dim
    a = sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, shape=(d, d), format="csr")
    return FockOperator(space, a)


def make_identity(space: FockSpace) -> FockOperator:
    return FockOperator(space, sp.identity(space.dim, format="csr"))


def number_operator(space: FockSpace) -> FockOperator:
    """``a^dag a``, built as an exact integer diagonal."""
    n = np.arange(space.dim, dtype=float)
    return FockOperator(space, sp.diags(n, 0, format="csr"))


def collision_hamiltonian(space: FockSpace) -> FockOperator:
    """``a^dag a^dag a a``, diagonal with entries n(n-1)."""
    n = np.arange(space.dim, dtype=float)
    return FockOperator(space, sp.diags(n * (n - 1), 0, format="csr"))


# --- superoperators --------------------------------------------------------

def spre(A: FockOperator) -> sp.csr_matrix:
    """Left multiplication ``X -> A X``."""
    return sp.kron(sp.identity(A.space.dim), A.matrix, format="csr")


def spost(B: FockOperator) -> sp.csr_matrix:
    """Right multiplication ``X -> X B``."""
    if _SPOST_ROW_STACKED:
        return sp.kron(sp.identity(B.space.dim), B.matrix.T, format="csr")
    return sp.kron(B.matrix.T, sp.identity(B.space.dim), format="csr")


def anticommutator_superop(A: FockOperator) -> Superoperator:
    """``B -> (A^dag A B + B A^dag A)/2``."""
    AdA = A.dag() @ A
    return Superoperator(A.space, 0.5 * (spre(AdA) + spost(AdA)))


def dissipator(A: FockOperator) -> Superoperator:
    """Lindblad dissipator ``B -> A B A^dag - (A^dag A B + B A^dag A)/2``."""
    jump = spre(A) @ spost(A.dag())
    return Superoperator(A.space, jump) - anticommutator_superop(A)


def hamiltonian_superop(H: FockOperator) -> Superoperator:
    """Coherent evolution ``B -> -i [H, B]``; ``H`` must be Hermitian."""
    if not H.is_hermitian():
        raise ConfigError("Hamiltonian must be Hermitian")
    return Superoperator(H.space, -1j * (spre(H) - spost(H)))


def inverse_gain_anticommutator(space: FockSpace) -> Superoperator:
    """Exact inverse of ``B -> (a a^dag B + B a a^dag)/2`` on the untruncated basis.

    Diagonal on ``|n><m|`` with eigenvalue ``2/(n+m+2)``.
    """
    d = space.dim
    n, m = _basis_grids(d)
    return Superoperator(space, sp.diags(2.0 / (n + m + 2)))


def gain_superop(space: FockSpace) -> Superoperator:
    """Pump term ``D[a^dag] A[a^dag]^{-1}``.

    On the basis it maps ``|n><m|`` to
    ``2 sqrt((n+1)(m+1))/(n+m+2) |n+1><m+1| - |n><m|``.  Raising terms that
    would leave the space are dropped; their Frobenius norm is ``leak``.
    """
    d = space.dim
    n, m = _basis_grids(d)
    up = 2.0 * np.sqrt((n + 1.0) * (m + 1.0)) / (n + m + 2.0)
    inside = (n + 1 < d) & (m + 1 < d)
    cols = np.arange(d * d)[inside]
    rows = (m[inside] + 1) * d + (n[inside] + 1)
    raise_part = sp.csr_matrix((up[inside], (rows, cols)), shape=(d * d, d * d))
    matrix = raise_part - sp.identity(d * d, format="csr")
    leak = float(np.sqrt(np.sum(up[~inside] ** 2)))
    return Superoperator(space, matrix, leak, label="gain")


def _basis_grids(d: int):
    """(n, m) of every column-stacked position."""
    idx = np.arange(d * d)
    return idx % d, idx // d


# --- Liouvillian builders --------------------------------------------------

def _resolve_space(params: ModelParams, space: FockSpace | None) -> FockSpace:
    return space if space is not None else FockSpace.for_mean(params.mu)


def build_standard_laser(params: ModelParams, space: FockSpace | None = None) -> Superoperator:
    """``kappa*mu*gain + kappa*D[a]``; only kappa and mu are used."""
    space = _resolve_space(params, space)
    a = make_annihilation(space)
    L = params.kappa * params.mu * gain_superop(space) + params.kappa * dissipator(a)
    return Superoperator(space, L.matrix, L.leak, label="standard")


def build_atom_laser(params: ModelParams, space: FockSpace | None = None) -> Superoperator:
    """Standard laser plus the collisional term ``-iC[a^dag a^dag a a, .]``."""
    space = _resolve_space(params, space)
    L = build_standard_laser(params, space)
    if params.C != 0:
        L = L + hamiltonian_superop(params.C * collision_hamiltonian(space))
    return Superoperator(space, L.matrix, L.leak, label="atom")


def build_feedback_laser(params: ModelParams, space: FockSpace | None = None) -> Superoperator:
    """Atom laser with QND measurement back-action and Markovian feedback.

    The two commutator terms are merged into one Hamiltonian with coefficient
    ``C - N sqrt(lam/nu)``, so at exact cancellation it vanishes identically.
    """
    if params.lam > 0 and params.nu == 0:
        raise ConfigError("feedback strength lam > 0 requires measurement strength nu > 0")
    space = _resolve_space(params, space)
    L = build_standard_laser(params, space)
    N = params.N
    shear = params.C - (N * math.sqrt(params.lam / params.nu) if params.lam > 0 else 0.0)
    if shear != 0:
        L = L + hamiltonian_superop(shear * collision_hamiltonian(space))
    if N > 0:
        diffusion = N * (1 + params.lam / (params.eta * params.nu))
        L = L + diffusion * dissipator(number_operator(space))
    return Superoperator(space, L.matrix, L.leak, label="feedback")


def build_liouvillian(params: ModelParams, space: FockSpace | None = None) -> Superoperator:
    """Pick the simplest builder that represents ``params``."""
    if params.has_feedback:
        return build_feedback_laser(params, space)
    if params.chi > 0:
        return build_atom_laser(params, space)
    return build_standard_laser(params, space)
