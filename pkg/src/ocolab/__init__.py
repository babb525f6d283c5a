"""Online convex optimization under contamination.

Learners share a ``start`` / ``predict`` / ``observe`` contract; instance
generators and the harness reproduce the contaminated exp-concave, strongly
convex and least-squares experiments plus an adaptive adversary for ONS.
"""

from .algorithms import OGD, ONS, ConOGD, ConONS, Hybrid
from .bounds import con_ogd_bound, con_ons_bound, hybrid_bound, ons_lower_bound
from .core import (
    CLEAN,
    ClassTag,
    FeasibleRegion,
    NotStartedError,
    OnlineLearner,
    ProblemBounds,
    RunRecord,
    diameter,
    gamma_from,
    regret_curve,
)
from .harness import ExperimentConfig, SummaryStats, emit_csv, make_learner, run_grid, run_single
from .instances import (
    certify_exp_concave,
    contamination_count,
    diagnostics,
    make_exp1,
    make_exp2,
    make_exp3,
    make_ons_adversary,
)
from .linalg import PsdTracker, generalized_projection, min_eigenvalue
from .universal import Maler, MetaGrad

__version__ = "0.1.0"

__all__ = [
    "OGD",
    "ONS",
    "ConOGD",
    "ConONS",
    "Hybrid",
    "MetaGrad",
    "Maler",
    "CLEAN",
    "ClassTag",
    "FeasibleRegion",
    "NotStartedError",
    "OnlineLearner",
    "ProblemBounds",
    "RunRecord",
    "diameter",
    "gamma_from",
    "regret_curve",
    "PsdTracker",
    "generalized_projection",
    "min_eigenvalue",
    "make_exp1",
    "make_exp2",
    "make_exp3",
    "make_ons_adversary",
    "contamination_count",
    "certify_exp_concave",
    "diagnostics",
    "ExperimentConfig",
    "SummaryStats",
    "run_single",
    "run_grid",
    "emit_csv",
    "make_learner",
    "con_ons_bound",
    "con_ogd_bound",
    "hybrid_bound",
    "ons_lower_bound",
]
