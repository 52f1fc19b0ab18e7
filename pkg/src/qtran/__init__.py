"""Time-dependent quantum transport through open device regions.

Reduced single-electron density-matrix dynamics with wide-band leads:
equilibrium preparation, switch-on transients, dissipators (adiabatic and
exact wide-band forms, complete second-order closure), Landauer steady
states, and a discretized-lead reference propagator for validation.
"""

from .constants import HBAR_EV_FS, MICROAMP_PER_NATURAL
from .errors import (ConfigError, DegenerateFermiLevel, DegenerateSpectrum,
                     DimensionTooLarge, GridTooCoarse, JumpDiscontinuity,
                     KernelNonConvergent, NegativeLinewidth,
                     NonDiagonalizable, NonFinite, NotPSD, NotPSDWarning,
                     NumericError, OutOfTableRange, ParseError,
                     QtranError, QtranIOError, QuadratureNotConverged,
                     SingularResolvent, SpectrumOnAxis, StateCorrupt,
                     ValidationError)
from .ground_state import (GroundState, ground_state_density,
                           ground_state_density_closed,
                           occupation_single_site, retarded_gf0)
from .linalg import (EigenDecomposition, eig, expm, log_kernel, osc_kernel,
                     resolvent_integral_log, resolvent_integral_osc)
from .model import (LEADS, BiasProfile, DeviceModel, InducedFockRule,
                    LeadBias, bias_at, bias_phase, build_chain,
                    build_single_site, h_at, linewidth_from_surface_gf,
                    smooth_step_bias, zero_bias)
from .cso import (CausalityTransforms, causality_transforms, cso_q,
                  cso_q_expanded, effective_hamiltonian)
from .wbl import (PPlusExactTracker, WblEngine, WblState, dissipator,
                  k_lead, make_state, p_minus, p_plus_adiabatic,
                  p_plus_exact, wbl_steady_current, wbl_steady_density)
from .propagate import SimState, TraceRecord, init_sim, run, step_rk4
from .steady import (LeadLevelSet, sigma_lorentzian_sum, steady_current,
                     transmission_from_level_sets, transmission_wbl,
                     transmission_wbl_std)
from .oracle import (DiscretizedLead, compare_schemes, compare_to_wbl,
                     discretize_lead, propagate_full)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
