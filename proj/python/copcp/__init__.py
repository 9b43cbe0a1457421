"""Copula-calibrated conformal prediction for multi-target regression.

Hyper-rectangle prediction regions for multi-output regressors: per-target
normalized nonconformity scores are calibrated jointly through an
independent, Gumbel or empirical copula.
"""

from ._copcp import (
    ConformalPredictor,
    CopcpError,
    CopulaModel,
    Dataset,
    FittedModel,
    GumbelFit,
    RegressorSpec,
    coverage,
    default_epsilon_grid,
    ecdf_eval,
    ecdf_quantile,
    efficiency_median_volume,
    empirical_epsilon_t,
    fit,
    fit_gumbel,
    frechet_bounds,
    gumbel_density,
    gumbel_epsilon_t,
    independent_epsilon_t,
    kendall_tau,
    load_csv,
    make_folds,
    normalized_score,
    p_value,
    pseudo_observations,
    run_cli,
    run_experiment,
    score_matrix,
    standard_score,
    synth_dataset,
    validity_curve,
    validity_gap,
    write_csv,
)

__version__ = "0.1.0"
