"""Transition densities and bound checks for radial pure-jump Levy semigroups."""

import os

__version__ = "0.1.0"

from .errors import (BoxTooSmall, LevykError, NumericFailure, PreconditionFailed,  # noqa: E402
                     RangeError, ValidationError)
from .profiles import (KappaClass, KappaVariant, LevyModel, ProfileSpec,  # noqa: E402
                       levy_density, profile_eval, small_jump_second_moment, tail_mass)
from .reports import ConditionReport, Verdict, growth_verdict  # noqa: E402
from .exponent import (ExponentTable, TimeScale, build_psi, check_condition_21,  # noqa: E402
                       check_condition_E, check_weak_scaling, default_t_grid,
                       drift_correction, exponent_table, h_of_t, psi_inverse, re_phi)
from .convolution import (CompoundPoisson, ConvPower, FClass, FCase, FReason,  # noqa: E402
                          check_condition_31, check_condition_C, check_condition_P,
                          classify_F, compound_poisson, conv_power,
                          subadditivity_threshold, truncated_measure, verify_lemma32)
from .density import (DensityGrid, Flag, LogSymbol, Method, SmallJumpSymbol,  # noqa: E402
                      density_fourier, density_split, semigroup_check,
                      small_jump_density)
from .bounds import (BoundReport, DichotomyReport, DichotomyVerdict,  # noqa: E402
                     default_dichotomy_pair, dichotomy_experiment, oracle_far_ratio,
                     verify_min_form, verify_theorem_12, verify_theorem_13,
                     verify_theorem_14)


def schema_dir():
    """Directory holding the JSON schemas of every emitted report."""
    return os.path.join(os.path.dirname(__file__), "schemas")
