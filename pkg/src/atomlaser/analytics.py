"""Closed-form phase moments and linewidths from the linearized Q-function theory."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .liouville import ANALYTIC_BRANCH, ANALYTIC_QUADRATURE, LinewidthResult
from .model import ConfigError, ModelParams

SHEAR_VALIDITY = 0.4  # (chi - sqrt(nu*lam))^2 < 0.4*mu stands in for "<< 4 mu"
EFFICIENCY_VALIDITY = 25.0  # eta*mu > 25 stands in for ">> 1"


@dataclass(frozen=True)
class PhaseMoments:
    t: float
    covar_nphi: float
    var_phi: float


def phase_moments_nofb(t, params: ModelParams) -> PhaseMoments:
    """Number-phase covariance and phase variance without feedback."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    k, mu, chi = params.kappa, params.mu, params.chi
    decay = np.expm1(-k * t)  # e^{-kt} - 1, accurate at small t
    covar = 0.5 * chi * decay
    var = chi**2 / (2 * mu) * (decay + k * t) + k * t / (2 * mu)
    return PhaseMoments(_scalar(t), _scalar(covar), _scalar(var))


def phase_variance_fb(t, params: ModelParams):
    """Phase variance with QND measurement and feedback."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    k, mu, eta = params.kappa, params.mu, params.eta
    shear = (params.chi - math.sqrt(params.nu * params.lam)) ** 2
    var = (shear / (2 * mu) * (np.expm1(-k * t) + k * t)
           + (2 + params.nu + params.lam / eta) * k * t / (4 * mu))
    return _scalar(var)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def linewidth_quadrature(variance_fn, params: ModelParams) -> LinewidthResult:
    """``tau = 1/2 int_0^inf exp(-dV(t)/2) dt`` for a Gaussian phase.

    The integral is taken numerically up to ``T = 50/kappa``; beyond that the
    variance is linear to within ``e^{-50}`` and the tail is added in closed
    form.
    """
    T = 50.0 / params.kappa
    f = lambda t: math.exp(-0.5 * float(variance_fn(t)))  # noqa: E731
    # Geometric sub-intervals resolve collapse times much shorter than 1/kappa.
    edges = [0.0] + [T * 2.0**-k for k in range(40, -1, -1)]
    body = sum(quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
               for lo, hi in zip(edges[:-1], edges[1:]))
    v_T, v_2T = float(variance_fn(T)), float(variance_fn(2 * T))
    slope = (v_2T - v_T) / T
    if not slope > 0:
        raise ValueError("phase variance does not grow without bound; coherence time is infinite")
    tail = 2.0 / slope * math.exp(-0.5 * v_T)
    return LinewidthResult.from_tau(0.5 * (body + tail), math.nan, ANALYTIC_QUADRATURE,
                                    {"tail_fraction": tail / (body + tail)})


def linewidth_quadrature_nofb(params: ModelParams) -> LinewidthResult:
    return linewidth_quadrature(lambda t: phase_moments_nofb(t, params).var_phi, params)


def linewidth_quadrature_fb(params: ModelParams) -> LinewidthResult:
    return linewidth_quadrature(lambda t: phase_variance_fb(t, params), params)


@dataclass(frozen=True)
class NoFeedbackBranches:
    small_chi: float
    large_chi: float
    crossover_chi: float
    selected: float


def linewidth_branches_nofb(params: ModelParams) -> NoFeedbackBranches:
    """Weak- and strong-interaction limits of the no-feedback linewidth."""
    k, mu, chi = params.kappa, params.mu, params.chi
    small = k * (1 + chi**2) / (2 * mu)
    large = 2 * k * chi / math.sqrt(2 * math.pi * mu)
    crossover = crossover_chi(mu)
    return NoFeedbackBranches(small, large, crossover, small if chi < crossover else large)


def crossover_chi(mu: float) -> float:
    """Interaction strength at which the two no-feedback branches meet."""
    return math.sqrt(8 * mu / math.pi)


def feedback_validity(params: ModelParams) -> dict:
    shear = (params.chi - math.sqrt(params.nu * params.lam)) ** 2
    return {
        "small_shear": shear < SHEAR_VALIDITY * params.mu,
        "efficient_detection": params.eta * params.mu > EFFICIENCY_VALIDITY,
    }


def linewidth_fb(params: ModelParams) -> LinewidthResult:
    """Feedback linewidth ``(kappa/4mu)[2 + nu + lam/eta + 2(chi - sqrt(nu lam))^2]``.

    Inputs outside the regime where the formula holds are flagged, not rejected.
    """
    k, mu = params.kappa, params.mu
    shear = (params.chi - math.sqrt(params.nu * params.lam)) ** 2
    ell = k / (4 * mu) * (2 + params.nu + params.lam / params.eta + 2 * shear)
    validity = feedback_validity(params)
    flags = tuple(f"invalid_{name}" for name, ok in validity.items() if not ok)
    return LinewidthResult(1.0 / ell, ell, math.nan, ANALYTIC_BRANCH, validity, flags)


@dataclass(frozen=True)
class OptimalFeedback:
    lam: float
    nu: float
    ell_min_coeff: float

    def ell_min(self, kappa: float, mu: float) -> float:
        return kappa / (2 * mu) * self.ell_min_coeff


def optimal_feedback(chi: float, eta: float) -> OptimalFeedback:
    """Feedback and measurement strengths minimizing the feedback linewidth.

    Requires ``2 sqrt(eta) chi > 1``; below that threshold feedback cannot
    narrow the line and ``ConfigError`` is raised.
    """
    if not 0 < eta <= 1:
        raise ConfigError("eta must lie in (0, 1]")
    if not 2 * math.sqrt(eta) * chi > 1:
        raise ConfigError(f"self-energy not dominant: 2*sqrt(eta)*chi = "
                          f"{2 * math.sqrt(eta) * chi:.3g} <= 1")
    lam = math.sqrt(eta) * chi - 0.5
    return OptimalFeedback(lam, lam / eta, 1 + chi / math.sqrt(eta) - 1 / (4 * eta))


def reduction_factor_limit(mu: float) -> float:
    """Large-chi ratio of no-feedback to optimal-feedback linewidth (eta=1)."""
    return math.sqrt(8 * mu / math.pi)
