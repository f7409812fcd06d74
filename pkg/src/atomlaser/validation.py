"""Built-in oracle checks, shared by the test-suite and ``atomlaser validate``."""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.stats import poisson

from .fock import (FockOperator, FockSpace, build_atom_laser, build_feedback_laser,
                   build_standard_laser, dissipator, gain_superop, make_annihilation,
                   _mismatched_vectorization)
from .liouville import linewidth_numeric, steady_state
from .model import ModelParams


def gain_by_quadrature(space: FockSpace, nodes: int = 64) -> np.ndarray:
    """``int_0^inf dq D[a^dag exp(-q a a^dag / 2)]`` restricted to ``space``.

    Operators live on one extra Fock level so that every retained level sees
    its exact ``a a^dag`` eigenvalue; the result is projected back, which
    drops the out-of-space raising elements.  With ``u = exp(-q/2)`` the
    integrand is a polynomial in ``u`` of degree < 2*dim, so Gauss-Legendre
    with ``nodes >= dim`` is exact up to rounding.
    """
    d = space.dim
    big = FockSpace(d + 1)
    a = make_annihilation(big).toarray()
    aad = a @ a.conj().T
    evals, evecs = np.linalg.eigh(aad)
    s, w = np.polynomial.legendre.leggauss(nodes)
    u, wu = 0.5 * (s + 1), 0.5 * w
    total = np.zeros((big.superdim, big.superdim), dtype=complex)
    for uk, wk in zip(u, wu):
        q = -2.0 * np.log(uk)
        damp = (evecs * np.exp(-0.5 * q * evals)) @ evecs.conj().T
        jump = FockOperator(big, a.conj().T @ damp)
        total += (wk * 2.0 / uk) * dissipator(jump).toarray()
    keep = np.array([m * (d + 1) + n for m in range(d) for n in range(d)])
    return total[np.ix_(keep, keep)]


def gain_identity_error(dim: int = 20, nodes: int = 64) -> float:
    space = FockSpace(dim)
    return float(np.linalg.norm(gain_superop(space).toarray() - gain_by_quadrature(space, nodes)))


def trace_leak(L) -> float:
    """``max |Tr L(|n><m|)|`` over basis operators away from the top level."""
    d = L.space.dim
    trace_row = np.zeros(d * d)
    trace_row[np.arange(d) * (d + 1)] = 1.0
    traces = L.matrix.T @ trace_row
    n, m = np.arange(d * d) % d, np.arange(d * d) // d
    interior = (n < d - 1) & (m < d - 1)
    return float(np.max(np.abs(traces[interior])))


def poisson_tv_distance(rho, mu: float) -> float:
    p = rho.populations()
    q = poisson.pmf(np.arange(p.size), mu)
    # Mass of the Poisson law beyond the truncation counts as disagreement.
    return 0.5 * (float(np.sum(np.abs(p - q))) + float(poisson.sf(p.size - 1, mu)))


def coherent_state(space: FockSpace, alpha: complex) -> np.ndarray:
    a = make_annihilation(space).toarray()
    vac = np.zeros(space.dim, dtype=complex)
    vac[0] = 1.0
    ket = scipy.linalg.expm(alpha * a.conj().T) @ vac
    ket /= np.linalg.norm(ket)
    return np.outer(ket, ket.conj())


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _check_gain_identity():
    err = gain_identity_error(20)
    return err < 1e-8, f"Frobenius error {err:.2e} (dim=20, tol 1e-8)"


def _check_trace_preservation():
    space = FockSpace(30)
    p = ModelParams(mu=10, chi=5, nu=3, lam=2, eta=0.8)
    worst = max(trace_leak(build(p, space)) for build in
                (build_standard_laser, build_atom_laser, build_feedback_laser))
    return worst < 1e-12, f"max interior trace leak {worst:.2e} (tol 1e-12)"


def _check_poisson_steady_state():
    p = ModelParams(mu=10)
    rho = steady_state(build_standard_laser(p))
    tv = poisson_tv_distance(rho, 10)
    return tv < 1e-6, f"TV distance to Poisson(10) {tv:.2e} (tol 1e-6)"


def _check_resolvent_vs_timedomain():
    worst = 0.0
    for chi in (0.0, 10.0):
        r = linewidth_numeric(ModelParams(mu=30, chi=chi), timedomain=True)
        worst = max(worst, r.diagnostics["timedomain_rel_diff"])
    return worst < 0.02, f"max relative tau difference {worst:.2e} at mu=30 (tol 2e-2)"


CHECKS: dict[str, Callable] = {
    "gain-identity": _check_gain_identity,
    "trace-preservation": _check_trace_preservation,
    "poisson-steady-state": _check_poisson_steady_state,
    "resolvent-vs-timedomain": _check_resolvent_vs_timedomain,
}


def run_checks(mismatched_vectorization: bool = False) -> list:
    ctx = _mismatched_vectorization() if mismatched_vectorization else contextlib.nullcontext()
    results = []
    with ctx:
        for name, fn in CHECKS.items():
            try:
                ok, detail = fn()
            except Exception as exc:  # a crashing oracle is a failed oracle
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(Check(name, bool(ok), detail))
    return results

