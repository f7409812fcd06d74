"""Linewidth of a single-mode atom laser with collisions and QND feedback."""

from .analytics import (linewidth_branches_nofb, linewidth_fb, linewidth_quadrature,
                        linewidth_quadrature_fb, linewidth_quadrature_nofb, optimal_feedback,
                        phase_moments_nofb, phase_variance_fb)
from .fock import (FockOperator, FockSpace, Superoperator, build_atom_laser,
                   build_feedback_laser, build_liouvillian, build_standard_laser, gain_superop)
from .liouville import (DensityOperator, LinewidthResult, coherence_time_resolvent,
                        coherence_time_timedomain, g1_trajectory, linewidth_numeric,
                        rotation_frequency, steady_state)
from .model import ConfigError, ModelParams, SolverError

__version__ = "0.1.0"
