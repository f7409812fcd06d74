"""Stationary state, rotating-frame frequency and coherence time of a Liouvillian.

The coherence function is computed from ``sigma(t) = exp(L t)(a rho_ss)``.
Every Liouvillian built here is phase covariant, so ``a rho_ss`` only explores
one coherence sector of the operator space; both the resolvent and the
time-domain paths work on the connected block of ``L`` that contains it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components

from .fock import FockSpace, Superoperator, build_liouvillian, make_annihilation, unvec, vec
from .model import ModelParams, SolverError

TAIL_TOL = 1e-8
IM_RE_TOL = 0.05
DECAY_TOL = 1e-4
RESOLVENT = "resolvent"
TIME_DOMAIN = "time-domain"
ANALYTIC_BRANCH = "analytic-branch"
ANALYTIC_QUADRATURE = "analytic-quadrature"


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Operator on a truncated Fock space.

    With ``is_state=True`` the matrix must be Hermitian, unit-trace and
    numerically positive; propagated operators such as ``a rho`` are stored
    with ``is_state=False``.
    """

    space: FockSpace
    matrix: np.ndarray
    is_state: bool = True

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=complex)
        if M.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {M.shape} does not match dim={self.space.dim}")
        object.__setattr__(self, "matrix", M)
        if self.is_state:
            if np.max(np.abs(M - M.conj().T)) > 1e-10:
                raise ValueError("state is not Hermitian")
            if abs(np.trace(M) - 1) > 1e-10:
                raise ValueError(f"state trace {np.trace(M)} != 1")
            if np.linalg.eigvalsh(M).min() < -1e-8:
                raise ValueError("state is not positive")

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix))

    def mean_number(self) -> float:
        p = self.populations()
        return float(np.dot(np.arange(p.size), p))

    def number_variance(self) -> float:
        p = self.populations()
        n = np.arange(p.size)
        mean = np.dot(n, p)
        return float(np.dot((n - mean) ** 2, p))

    def tail_population(self, levels: int = 3) -> float:
        return float(np.sum(np.abs(self.populations()[-levels:])))


@dataclass(frozen=True)
class LinewidthResult:
    tau_coh: float
    ell: float
    omega0: float
    method: str
    diagnostics: dict = field(default_factory=dict)
    flags: tuple = ()

    @classmethod
    def from_tau(cls, tau_coh, omega0, method, diagnostics=None, flags=()):
        tau_coh = float(tau_coh)
        return cls(tau_coh, 1.0 / tau_coh, float(omega0), method,
                   dict(diagnostics or {}), tuple(flags))

    def to_dict(self) -> dict:
        return {
            "tau_coh": self.tau_coh,
            "ell": self.ell,
            "omega0": _json_float(self.omega0),
            "method": self.method,
            "diagnostics": {k: _json_value(v) for k, v in self.diagnostics.items()},
            "flags": list(self.flags),
        }


def _json_float(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _json_value(v):
    if isinstance(v, LinewidthResult):
        return v.to_dict()
    if isinstance(v, (float, np.floating)):
        return _json_float(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    return v


# --- steady state ----------------------------------------------------------

def steady_state(L: Superoperator, refine_steps: int = 3) -> DensityOperator:
    """Stationary state with the ``|0><0|`` equation replaced by the trace."""
    d = L.space.dim
    n2 = d * d
    trace_idx = np.arange(d) * (d + 1)
    M = L.matrix.tolil(copy=True)
    M[0, :] = 0
    M[0, trace_idx] = 1.0
    M = M.tocsc()
    b = np.zeros(n2, dtype=complex)
    b[0] = 1.0
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise SolverError(f"steady-state system is singular (non-unique stationary state?): {exc}")
    x = lu.solve(b)
    scale = max(1.0, spla.norm(L.matrix, 1))
    for _ in range(refine_steps):
        if np.linalg.norm(L.matrix @ x) <= 1e-10 * scale:
            break
        x = x + lu.solve(b - M @ x)
    if not np.all(np.isfinite(x)):
        raise SolverError("steady-state solve produced non-finite values")
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = np.linalg.norm(L.matrix @ vec(rho))
    if residual > 1e-8 * scale:
        raise SolverError(f"steady-state residual {residual:.3e} exceeds tolerance")
    return DensityOperator(L.space, rho)


def steady_state_residual(L: Superoperator, rho: DensityOperator) -> float:
    return float(np.linalg.norm(L.matrix @ vec(rho.matrix)))


# --- coherence function ingredients ----------------------------------------

def _coherence_setup(L: Superoperator, rho: DensityOperator):
    """Initial vector ``vec(a rho)``, the functional ``Tr[a^dag .]`` and ``<n>``."""
    a = make_annihilation(L.space).matrix
    v0 = vec(a @ rho.matrix)
    # Tr[a^dag X] = sum_{n,m} conj(a)[n, m] X[n, m]
    functional = vec(a.conj().toarray())
    nbar = complex(np.dot(functional, v0)).real
    if not nbar > 0:
        raise SolverError("vanishing mean number: coherence function undefined")
    return v0, functional, nbar


def connected_block(L: Superoperator, v: np.ndarray) -> np.ndarray:
    """Indices of the connected components of ``L``'s graph touched by ``v``.

    The span of these basis vectors is invariant under ``L``, so restricting
    ``L`` to it is exact for anything propagated from ``v``.
    """
    G = abs(L.matrix)
    _, labels = connected_components(G + G.T, directed=False)
    touched = np.unique(labels[np.flatnonzero(v)])
    return np.flatnonzero(np.isin(labels, touched))


def rotation_frequency(L: Superoperator, rho: DensityOperator) -> float:
    """Initial phase-rotation rate ``Im Tr[a^dag L(a rho)] / Tr[a^dag a rho]``."""
    v0, functional, nbar = _coherence_setup(L, rho)
    return float((np.dot(functional, L.matrix @ v0) / nbar).imag)


class _Resolvent:
    """Solves ``(L - i w) X = a rho`` on the reachable block for varying ``w``."""

    def __init__(self, L: Superoperator, rho: DensityOperator):
        v0, functional, self.nbar = _coherence_setup(L, rho)
        idx = connected_block(L, v0)
        self.block = L.matrix[idx][:, idx].tocsc()
        self.b = v0[idx]
        self.f = functional[idx]
        self.eye = sp.identity(idx.size, dtype=complex, format="csc")
        self.size = idx.size

    def tau(self, omega: float):
        A = self.block - 1j * omega * self.eye
        try:
            X = spla.splu(A).solve(self.b)
        except RuntimeError as exc:
            raise SolverError(f"resolvent is singular at omega={omega}: {exc}")
        residual = np.linalg.norm(A @ X - self.b) / np.linalg.norm(self.b)
        return -np.dot(self.f, X) / (2 * self.nbar), residual


def _zero_imaginary_frequency(res: _Resolvent, omega0: float, tau0: complex) -> float:
    """Frequency near ``omega0`` where ``Im tau(omega)`` changes sign."""
    f = lambda w: res.tau(w)[0].imag  # noqa: E731
    # For a Lorentzian centred at W, Im tau(w) has the sign of (W - w).
    direction = 1.0 if tau0.imag > 0 else -1.0
    step = 0.25 / abs(tau0.real)
    f0 = tau0.imag
    for k in range(60):
        w = omega0 + direction * step * 2.0**k
        fw = f(w)
        if np.sign(fw) != np.sign(f0):
            lo, hi = sorted((omega0, w))
            return brentq(f, lo, hi, xtol=1e-14 * max(1.0, abs(omega0)), rtol=1e-13)
    raise SolverError("could not bracket a zero of Im tau(omega0)")


def coherence_time_resolvent(L: Superoperator, rho: DensityOperator, omega0: float,
                             im_tol: float = IM_RE_TOL) -> LinewidthResult:
    """Coherence time from ``-Tr[a^dag (L - i w0)^{-1} a rho] / (2 <n>)``.

    If the trace has ``|Im|/|Re| > im_tol`` the rotating-frame frequency is
    re-estimated as the zero of ``Im tau`` closest to ``omega0`` and the
    result is flagged.
    """
    res = _Resolvent(L, rho)
    tau, residual = res.tau(omega0)
    flags = []
    diagnostics = {"dim": L.space.dim, "block_size": res.size, "omega0_initial": omega0,
                   "im_re_initial": abs(tau.imag) / abs(tau.real) if tau.real else math.inf}
    omega = omega0
    if tau.real != 0 and abs(tau.imag) > im_tol * abs(tau.real):
        flags.append("omega0_reestimated")
        omega = _zero_imaginary_frequency(res, omega0, tau)
        tau, residual = res.tau(omega)
    if not tau.real > 0:
        raise SolverError(f"non-positive coherence time {tau} (omega0={omega}): "
                          "wrong rotating frame or non-decaying g1")
    im_re = abs(tau.imag) / tau.real
    if im_re > im_tol:
        raise SolverError(f"coherence time is not real: |Im/Re| = {im_re:.3g}")
    diagnostics.update(im_re=im_re, residual_norm=residual)
    return LinewidthResult.from_tau(tau.real, omega, RESOLVENT, diagnostics, flags)


# --- time domain ---------------------------------------------------------

def _block_system(L: Superoperator, rho: DensityOperator, omega_frame: float):
    """Real form ``[Re y, Im y]`` of the rotating-frame ODE on the reachable block."""
    v0, functional, nbar = _coherence_setup(L, rho)
    idx = connected_block(L, v0)
    A = L.matrix[idx][:, idx] - 1j * omega_frame * sp.identity(idx.size)
    R = sp.bmat([[A.real, -A.imag], [A.imag, A.real]], format="csc")
    y0 = np.concatenate([v0[idx].real, v0[idx].imag])
    return R, y0, functional[idx], nbar, idx


def _to_complex(y: np.ndarray) -> np.ndarray:
    half = y.shape[0] // 2
    return y[:half] + 1j * y[half:]


def _edge_positions(space: FockSpace, idx: np.ndarray) -> np.ndarray:
    """Positions within ``idx`` that touch the top Fock level."""
    d = space.dim
    n, m = idx % d, idx // d
    return np.flatnonzero((n == d - 1) | (m == d - 1))


def g1_trajectory(L: Superoperator, rho: DensityOperator, t_grid, omega_frame: float = 0.0,
                  rtol: float = 1e-8, atol: float = 1e-12, leak_tol: float = 1e-6) -> np.ndarray:
    """First-order coherence ``g1(t) = Tr[a^dag e^{Lt}(a rho)] / Tr[a^dag a rho]``.

    The ODE is integrated in a frame rotating at ``omega_frame`` (Radau IIA,
    adaptive) and the result is returned in the lab frame.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at 0")
    A, y0, f, nbar, idx = _block_system(L, rho, omega_frame)
    sol = solve_ivp(lambda t, y: A @ y, (0.0, t_grid[-1]), y0, method="Radau",
                    t_eval=t_grid, rtol=rtol, atol=atol * np.abs(y0).max(), jac=A)
    if not sol.success:
        raise SolverError(f"time-domain integration failed: {sol.message}")
    sigma = _to_complex(sol.y)
    sigma0 = _to_complex(y0)
    edge = _edge_positions(L.space, idx)
    if edge.size:
        leak = np.abs(sigma[edge]).max() / np.abs(sigma0).max()
        if leak > leak_tol:
            raise SolverError(f"coherence leaked to the truncation edge ({leak:.2e})")
    g = f @ sigma
    g = g / g[0]  # t_grid[0] == 0, so this is Tr[a^dag a rho] and g1(0) == 1 exactly
    return g * np.exp(1j * omega_frame * t_grid)


def decay_horizon(L: Superoperator, rho: DensityOperator, omega_frame: float = 0.0,
                  threshold: float = 1e-5, t_max: float = 1e8) -> float:
    """First time at which ``|g1|`` falls below ``threshold``."""
    A, y0, f, nbar, _ = _block_system(L, rho, omega_frame)
    norm = abs(np.dot(f, _to_complex(y0)))

    def below(t, y):
        return abs(np.dot(f, _to_complex(y))) / norm - threshold

    below.terminal = True
    below.direction = -1
    sol = solve_ivp(lambda t, y: A @ y, (0.0, t_max), y0, method="Radau", events=below,
                    rtol=1e-6, atol=1e-12 * np.abs(y0).max(), jac=A)
    if sol.status != 1 or not sol.t_events[0].size:
        raise SolverError("coherence function did not decay below threshold")
    return float(sol.t_events[0][0])


def coherence_time_timedomain(g1, t_grid, omega0: float = math.nan,
                              decay_tol: float = DECAY_TOL) -> LinewidthResult:
    """``tau = 1/2 int |g1(t)| dt`` by composite Simpson quadrature on ``t_grid``."""
    g1 = np.asarray(g1)
    t_grid = np.asarray(t_grid, dtype=float)
    if g1.shape != t_grid.shape:
        raise ValueError("g1 and t_grid must have the same length")
    end = abs(g1[-1])
    if end >= decay_tol:
        raise SolverError(f"|g1| = {end:.2e} at the end of the grid; extend the grid")
    tau = 0.5 * simpson(np.abs(g1), x=t_grid)
    return LinewidthResult.from_tau(tau, omega0, TIME_DOMAIN,
                                    {"points": int(t_grid.size), "g1_end": float(end)})


def coherence_time_ode(L: Superoperator, rho: DensityOperator, omega_frame: float = 0.0,
                       n_points: int = 4001) -> LinewidthResult:
    """Time-domain coherence time on an automatically chosen uniform grid."""
    t_end = decay_horizon(L, rho, omega_frame)
    t_grid = np.linspace(0.0, t_end, n_points)
    g1 = g1_trajectory(L, rho, t_grid, omega_frame)
    result = coherence_time_timedomain(g1, t_grid, omega_frame)
    result.diagnostics.update(dim=L.space.dim, t_end=t_end)
    return result


# --- end-to-end ------------------------------------------------------------

def linewidth_numeric(params: ModelParams, dim: int | None = None, timedomain: bool = False,
                      tail_tol: float = TAIL_TOL, strict_tail: bool = True) -> LinewidthResult:
    """Build the Liouvillian for ``params`` and evaluate the resolvent linewidth.

    With ``timedomain=True`` the quantum-regression integral is computed as
    well and attached under ``diagnostics["timedomain"]``.
    """
    space = FockSpace(dim) if dim is not None else FockSpace.for_mean(params.mu)
    L = build_liouvillian(params, space)
    rho = steady_state(L)
    tail = rho.tail_population()
    flags = []
    if tail > tail_tol:
        if strict_tail:
            raise SolverError(f"top-level population {tail:.2e} exceeds {tail_tol:.0e}; "
                              "increase the Fock dimension")
        flags.append("tail_population_exceeded")
    omega0 = rotation_frequency(L, rho)
    result = coherence_time_resolvent(L, rho, omega0)
    diagnostics = dict(result.diagnostics)
    diagnostics.update(tail_population=tail, leak_norm=L.leak,
                       steady_state_residual=steady_state_residual(L, rho),
                       mean_number=rho.mean_number())
    if timedomain:
        td = coherence_time_ode(L, rho, result.omega0)
        diagnostics["timedomain"] = td
        diagnostics["timedomain_rel_diff"] = abs(td.tau_coh - result.tau_coh) / result.tau_coh
    return LinewidthResult(result.tau_coh, result.ell, result.omega0, result.method,
                           diagnostics, tuple(flags) + result.flags)
