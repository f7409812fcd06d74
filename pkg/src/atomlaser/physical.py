"""Laboratory parameters -> model rates (SI units throughout)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError

HBAR = 1.054571817e-34  # J s
AMU = 1.66053906660e-27  # kg

TF_VALIDITY = 10.0  # N a_s / a_ho must exceed this for Thomas-Fermi
FAR_DETUNED = 10.0  # |Delta| / Gamma
SMALL_PHASE = 0.1  # sqrt(mu) * theta


def _require_positive(**values):
    for name, v in values.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ConfigError(f"{name} must be a positive finite number, got {v!r}")


@dataclass(frozen=True)
class CondensateLabParams:
    scattering_length: float
    atom_mass: float
    atom_number: float
    trap_freqs: tuple

    def __post_init__(self):
        freqs = tuple(float(w) for w in self.trap_freqs)
        if len(freqs) != 3:
            raise ConfigError("trap_freqs needs three angular frequencies")
        object.__setattr__(self, "trap_freqs", freqs)
        _require_positive(scattering_length=self.scattering_length, atom_mass=self.atom_mass,
                          atom_number=self.atom_number)
        for w in freqs:
            _require_positive(trap_freq=w)

    @property
    def omega_bar(self) -> float:
        return float(np.prod(self.trap_freqs)) ** (1 / 3)

    @property
    def oscillator_length(self) -> float:
        return math.sqrt(HBAR / (self.atom_mass * self.omega_bar))

    @property
    def tf_parameter(self) -> float:
        return self.atom_number * self.scattering_length / self.oscillator_length

    @property
    def tf_valid(self) -> bool:
        return self.tf_parameter > TF_VALIDITY

    @property
    def coupling(self) -> float:
        """Contact interaction ``g = 4 pi hbar^2 a_s / m``."""
        return 4 * math.pi * HBAR**2 * self.scattering_length / self.atom_mass

    @property
    def chemical_potential(self) -> float:
        return 0.5 * HBAR * self.omega_bar * (15 * self.tf_parameter) ** 0.4

    @property
    def peak_density(self) -> float:
        return self.chemical_potential / self.coupling

    @property
    def tf_radii(self) -> tuple:
        return tuple(math.sqrt(2 * self.chemical_potential / (self.atom_mass * w**2))
                     for w in self.trap_freqs)

    def density(self, x, y, z):
        """Thomas-Fermi density (atoms per m^3)."""
        wx, wy, wz = self.trap_freqs
        V = 0.5 * self.atom_mass * (wx**2 * x**2 + wy**2 * y**2 + wz**2 * z**2)
        return np.maximum(self.chemical_potential - V, 0.0) / self.coupling


def _ellipsoid_integrals(p: CondensateLabParams, order: int):
    """Integrals of ``n`` and ``n^2`` over the Thomas-Fermi ellipsoid.

    Nested Gauss-Legendre in Cartesian coordinates: the z and y limits follow
    the ellipsoid surface so the integrand is smooth inside every interval.
    """
    Rx, Ry, Rz = p.tf_radii
    s, w = np.polynomial.legendre.leggauss(order)
    x = Rx * s
    wx = Rx * w
    cx = np.sqrt(np.clip(1 - (x / Rx) ** 2, 0, None))
    y = Ry * cx[:, None] * s[None, :]
    wy = Ry * cx[:, None] * w[None, :]
    cy = np.sqrt(np.clip(1 - (x[:, None] / Rx) ** 2 - (y / Ry) ** 2, 0, None))
    z = Rz * cy[..., None] * s
    wz = Rz * cy[..., None] * w
    n = p.density(x[:, None, None], y[..., None], z)
    weights = wx[:, None, None] * wy[..., None] * wz
    return float(np.sum(weights * n)), float(np.sum(weights * n**2))


@dataclass(frozen=True)
class CollisionStrength:
    C: float
    quartic_integral: float
    closed_form_quartic: float
    tf_parameter: float
    tf_valid: bool


def tf_quartic_integral(p: CondensateLabParams, order: int = 48) -> float:
    """``int |psi|^4 d^3r`` for the normalized Thomas-Fermi mode (m^-3)."""
    norm, quartic = _ellipsoid_integrals(p, order)
    return quartic / norm**2


def collision_strength_tf(p: CondensateLabParams, order: int = 48) -> CollisionStrength:
    """Collisional self-energy rate ``C = (2 pi hbar a_s / m) int |psi|^4`` in s^-1."""
    quartic = tf_quartic_integral(p, order)
    closed = 4 / 7 * p.peak_density / p.atom_number
    C = 2 * math.pi * HBAR * p.scattering_length / p.atom_mass * quartic
    return CollisionStrength(C, quartic, closed, p.tf_parameter, p.tf_valid)


@dataclass(frozen=True)
class ProbeLabParams:
    probe_frequency: float
    beam_area: float
    detuning: float
    natural_linewidth: float
    saturation_intensity: float
    beam_power: float = 0.0

    def __post_init__(self):
        _require_positive(probe_frequency=self.probe_frequency, beam_area=self.beam_area,
                          detuning=self.detuning, natural_linewidth=self.natural_linewidth,
                          saturation_intensity=self.saturation_intensity)
        if not (math.isfinite(self.beam_power) and self.beam_power >= 0):
            raise ConfigError("beam_power must be >= 0")

    @property
    def far_detuned(self) -> bool:
        return self.detuning / self.natural_linewidth > FAR_DETUNED


def beam_covers_condensate(probe: ProbeLabParams, condensate: CondensateLabParams) -> bool:
    """True if the beam area exceeds the largest condensate cross-section."""
    Rx, Ry, Rz = condensate.tf_radii
    return probe.beam_area > math.pi * max(Rx * Ry, Ry * Rz, Rx * Rz)


@dataclass(frozen=True)
class ProbePhaseShift:
    theta: float
    sqrt_mu_theta: float
    small_phase: bool


def probe_phase_shift(p: ProbeLabParams, mu: float = 1.0) -> ProbePhaseShift:
    """Single-atom probe phase shift ``hbar w_p Gamma^2 / (8 A Delta I_sat)``."""
    theta = (HBAR * p.probe_frequency * p.natural_linewidth**2
             / (8 * p.beam_area * p.detuning * p.saturation_intensity))
    root = math.sqrt(mu) * theta
    return ProbePhaseShift(theta, root, root < SMALL_PHASE)


@dataclass(frozen=True)
class MeasurementStrength:
    N: float
    nu: float | None = None


def measurement_strength(p: ProbeLabParams, theta: float, kappa: float | None = None,
                         mu: float | None = None) -> MeasurementStrength:
    """Back-action rate ``N = P theta^2 / (hbar w_p)`` and, given kappa and mu, ``nu``."""
    N = p.beam_power * theta**2 / (HBAR * p.probe_frequency)
    nu = None if kappa is None or mu is None else dimensionless_bridge(0.0, N, kappa, mu)[1]
    return MeasurementStrength(N, nu)


def required_beam_power(p: ProbeLabParams, theta: float, N_target: float) -> float:
    """Probe power giving measurement rate ``N_target``."""
    _require_positive(theta=theta)
    return HBAR * p.probe_frequency * N_target / theta**2


def spontaneous_loss_ratio(p: ProbeLabParams, chi: float, mu: float) -> float:
    """Spontaneous-emission loss over output loss, far-detuned limit.

    ``2 chi I_sat A / (hbar w_p Gamma mu)``; only meaningful when
    ``p.far_detuned`` holds.
    """
    return (2 * chi * p.saturation_intensity * p.beam_area
            / (HBAR * p.probe_frequency * p.natural_linewidth * mu))


def dimensionless_bridge(C: float, N: float, kappa: float, mu: float) -> tuple:
    """``(chi, nu) = (4 mu C / kappa, 4 mu N / kappa)``."""
    _require_positive(kappa=kappa)
    return 4 * mu * C / kappa, 4 * mu * N / kappa
