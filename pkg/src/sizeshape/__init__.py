"""Bayesian size-and-shape regression with latent rotations, fitted by Gibbs sampling."""

__version__ = "0.1.0"

from .diagnostics import PosteriorSummary, coverage_report, summarize
from .geometry import (
    SizeAndShape,
    decompose,
    helmert_submatrix,
    helmertize,
    rotation_from_angle,
    rotation_from_euler,
    ss_distance,
)
from .identification import IdentificationPolicy, constraint_rotation, identify_draw
from .model import (
    Dataset,
    ParamState,
    Priors,
    complete_data_loglik,
    design_matrix,
    mean_configuration,
    trace_invariance_check,
)
from .sampler import Chain, SamplerConfig, gibbs_run
from .synthetic import ScenarioSpec, default_scenario, generate
