"""Rotating vortex patches of the 2D Euler equations.

Geometry of star-shaped patches, Newtonian potential evaluators, the
variational identities of rigid rotation, an explicit patch-to-disk
transport map with Wasserstein bounds, m-fold V-state continuation, and an
empirical verification harness for the asymptotic estimates.
"""

from .geometry import (AsymmetryResult, EllipsePatch, PatchError, PolarPatch,
                       RotatingState, area, asymmetry_origin, cosine_patch,
                       disk_patch, eta_inverse, f_accumulated,
                       fraenkel_asymmetry, mass_center, normalize_area,
                       second_moment_excess)
from .identities import (IdentityReport, identity_torsion,
                         identity_torsion_ellipse, identity_velocity,
                         identity_velocity_ellipse, torsion_deficit_bound)
from .potential import (QuadratureConfig, RadialProfile, g_profile,
                        grad_phi_m, grad_phi_m_monotone, grad_stream,
                        phi_r_prime, series_kernel, stream_value,
                        torsion_solve)
from .transport import (TransportParams, TransportReport, default_params,
                        discrete_ot_lower_bound, loeper_check, transport_cost,
                        transport_map, pushforward_check)
from .vstates import (Branch, SolverConfig, boundary_residual, burbea_omega,
                      continue_branch, newton_solve)
from .bounds import (BoundReport, appendix_inequality_probe, ellipse_states,
                     linfty_scan, omega_gap_scan, outmost_scan)

__version__ = "0.1.0"
