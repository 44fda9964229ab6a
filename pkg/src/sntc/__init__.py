"""Continuation and codimension-two test functions for saddle-node/transcritical interactions."""

from .errors import *  # noqa: F401,F403
from .system import SystemDef, ParamPoint, eval_rhs, eval_jacobian, fd_check, fd_sweep, numeric_system  # noqa: F401
from .models import KooiParams, NormalFormId, get_system, normal_form, oracle_fold_curve  # noqa: F401
from .continuation import (  # noqa: F401
    ContinuationSettings,
    Curve,
    BranchPoint,
    continue_equilibrium,
    continue_fold_curve,
    continue_tc_curve,
    continue_hopf_curve,
    fold_seed,
    tc_seed,
    hopf_seed,
)
from .testfunctions import SpecialPoint, alpha_sntc, beta_cusp, classify_codim2  # noqa: F401
from .integrate import integrate, Trajectory, Section, estimate_period  # noqa: F401

__version__ = "0.1.0"
