"""Convex optimization from comparison feedback.

The learner never sees function values, only the outcomes of comparisons
between points it queries. Normalized gradient descent runs on the
directions those outcomes reveal.
"""
from .errors import ParameterError
from .harness import ExperimentConfig, SweepConfig, run_experiment, run_sweep
from .objectives import (
    Objective,
    custom_objective,
    fd_gradient,
    make_l2l1,
    make_objective,
    make_quadratic,
    make_sinsum,
)
from .optimizers import (
    PhaseSchedule,
    SmoothParams,
    Trace,
    batched_ngd_run,
    battling_ngd_run,
    expected_queries,
    params_smooth,
    params_strong,
    phased_run,
    pngd_run,
)
from .oracles import ComparisonOracle, Feedback, QueryLedger, resample_count
from .querysets import (
    StructuredQuerySet,
    build_query_set,
    extract_gradient_estimates,
    hypercube_vertices,
    neighbors,
)
from .vectorspace import Domain, project, sample_sphere

__version__ = "0.1.0"
