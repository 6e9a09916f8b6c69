"""Spectral toolkit for arrays of Schrodinger potential wells on a line.

Computes band structure and the essential-spectrum threshold of a periodic
well array, finds bound states created by local well displacements through
the Birman-Schwinger block operator and through a direct grid eigensolver,
and numerically verifies the convexity / mollifier / shift identities that
drive the existence argument.
"""

from .bs_solver import (BracketError, BSBlockOperator, ConvergenceError, QuadratureGrid,
                        SpectralResult, assemble_block, assemble_operator, build_grid,
                        make_trial_vector, principal_eigenvalue, solve_ground_state,
                        trial_functional)
from .checks import (ConvexityReport, ShiftIdentityReport, mollifier_defect,
                     mollifier_defect_from_matrix, mollifier_weights, shift_identities,
                     verify_convexity)
from .config import ConfigError, RunConfig
from .direct_solver import (DirectNumerics, GridHamiltonian, assemble_hamiltonian,
                            binding_energy_direct, default_box, ground_energy,
                            lowest_eigenvalues)
from .floquet import (BandStructure, ConfigurationError, FiberProblem, ThresholdError,
                      assemble_fiber, count_gaps, essential_threshold, lowest_band)
from .geometry import (ArrayGeometry, GeometryError, ShiftData, WellProfile, aspect_ok,
                       build_array, make_profile, relative_shifts, shift_well)
from .specialfn import (KernelParams, bessel_k_scaled, log_convexity_ratio,
                        resolvent_kernel, resolvent_kernel_deriv)

__version__ = "0.1.0"
