"""Model parameters and error types shared by every module."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid model or run configuration."""


class SolverError(RuntimeError):
    """A numerical solve failed or produced an unphysical result."""


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless inputs of the atom-laser master equation.

    ``lam`` is the feedback strength (``lambda`` is reserved in Python).
    The collision rate ``C`` and measurement rate ``N`` are derived as
    ``C = chi*kappa/(4*mu)`` and ``N = nu*kappa/(4*mu)``.
    """

    kappa: float = 1.0
    mu: float = 60.0
    chi: float = 0.0
    nu: float = 0.0
    lam: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        for name in ("kappa", "mu", "chi", "nu", "lam", "eta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite number, got {value!r}")
        if self.kappa <= 0:
            raise ConfigError("kappa must be > 0")
        if self.mu <= 0:
            raise ConfigError("mu must be > 0")
        if self.chi < 0 or self.nu < 0 or self.lam < 0:
            raise ConfigError("chi, nu and lam must be >= 0")
        if not 0 < self.eta <= 1:
            raise ConfigError("eta must lie in (0, 1]")

    @property
    def C(self) -> float:
        return self.chi * self.kappa / (4 * self.mu)

    @property
    def N(self) -> float:
        return self.nu * self.kappa / (4 * self.mu)

    @classmethod
    def from_rates(cls, kappa, mu, C=0.0, N=0.0, lam=0.0, eta=1.0) -> "ModelParams":
        """Build from the dimensional rates ``C`` and ``N`` (units of kappa)."""
        if kappa <= 0:
            raise ConfigError("kappa must be > 0")
        return cls(kappa=kappa, mu=mu, chi=4 * mu * C / kappa,
                   nu=4 * mu * N / kappa, lam=lam, eta=eta)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    @property
    def has_feedback(self) -> bool:
        return self.nu > 0 or self.lam > 0
