"""Locality diagnostics for high-dimensional sampling and inference."""

from ._core import (
    CriterionResult,
    DeltaBound,
    DependencyGraph,
    GaussianModel,
    GLChain,
    InequalityReport,
    LocalityCertificate,
    LocalityError,
    Model,
    __version__,
    banded_graph,
    certify_locality,
    cli,
    complete_graph,
    delta_diag_dominant,
    delta_graphical,
    diffusion_decay_bound,
    empirical_w1_1d,
    fit_score_matching,
    gaussian_chain,
    gaussian_w1_1d,
    lattice_graph,
    li_series_bound_check,
    model_from_json,
    run_criterion,
    sample_model,
    verify_marginal_inequality,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
