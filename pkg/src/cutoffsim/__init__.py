"""cutoffsim: exact mixing curves, hitting-time moments, and coupling
simulations for a family of Markov chains with abrupt convergence.

The heavy replica loops run in a compiled extension when it is built
(``cutoffsim.backends.BACKEND_NAME == "native"``) and in vectorized
numpy otherwise; both produce identical samples.
"""

from .backends import BACKEND_NAME, available_backends, get_backend
from .coupling import (CoalescenceStats, coalescence_tail, cylinder_coupling,
                       default_window_scale, independent_coupling,
                       sandwich_coupling)
from .evolution import (MixingProfile, TvCurve, evolve, mixing_profile,
                        tv_curve, tv_curve_until, tv_distance)
from .fitting import CutoffFit, fit_cutoff
from .hitting import (DriftDiagnostic, HittingMoments, McSample,
                      bd_hitting_moments, bd_visit_moments, cantelli_check,
                      cylinder_hitting_moments, linear_solve_hitting,
                      mc_hitting, quasi_determinism_ratio,
                      strong_drift_diagnostic)
from .models import (ChainModel, Family, LumpMap, ModelSpec, build_model,
                     check_distribution, delta_distribution, lump,
                     project_distribution, stationary, transition_row)
from .nested import (NestedFamily, count_rising_ge, diffusive_linear_family,
                     family_for, first_rising_sequence_length,
                     fit_ising_tail_constant, h_concentration,
                     hypothesis_report, top_in_at_random_hitting, zeta_moments)

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME", "available_backends", "get_backend",
    "CoalescenceStats", "coalescence_tail", "cylinder_coupling",
    "default_window_scale", "independent_coupling", "sandwich_coupling",
    "MixingProfile", "TvCurve", "evolve", "mixing_profile", "tv_curve",
    "tv_curve_until", "tv_distance",
    "CutoffFit", "fit_cutoff",
    "DriftDiagnostic", "HittingMoments", "McSample", "bd_hitting_moments",
    "bd_visit_moments", "cantelli_check", "cylinder_hitting_moments",
    "linear_solve_hitting", "mc_hitting", "quasi_determinism_ratio",
    "strong_drift_diagnostic",
    "ChainModel", "Family", "LumpMap", "ModelSpec", "build_model",
    "check_distribution", "delta_distribution", "lump",
    "project_distribution", "stationary", "transition_row",
    "NestedFamily", "count_rising_ge", "diffusive_linear_family",
    "family_for", "first_rising_sequence_length", "fit_ising_tail_constant",
    "h_concentration", "hypothesis_report", "top_in_at_random_hitting",
    "zeta_moments",
]
