"""Variational-Bayes laboratory for one-hidden-layer network regression.

The package fits mean-field variational posteriors for logistic-activation
networks under four prior families, measures how the fitted posteriors
concentrate around the data-generating network as the sample size grows,
and independently verifies the supporting analytic identities and bounds
with quadrature and Monte Carlo oracles.

Layout: core_model (networks, data), priors_sieves (priors, growing
parameter boxes, tail bounds), meanfield_vi (variational families, KL
closed forms), elbo_trainer (reparameterized ELBO, Adam), divergence_metrics
(Hellinger/KL/L2 and posterior tail mass), lemma_oracle (independent
verification suite), experiment_harness (sweeps, rate fits, reports),
cli (command-line front end).
"""

from .core_model import (
    ModelDims,
    NetworkParams,
    RegressionDataset,
    embed_teacher,
    make_teacher,
    network_eval,
    simulate_dataset,
)
from .divergence_metrics import (
    QuadratureRule,
    TailMassEstimate,
    averaged_density_hellinger,
    default_rule,
    gauss_legendre_rule,
    hellinger_true_vs_model,
    kl_true_vs_model,
    predictor_l2_error,
    vb_predictor,
    vp_tail_mass,
)
from .elbo_trainer import (
    FitResult,
    TrainConfig,
    TrainingDivergenceError,
    elbo_estimate,
    fit,
)
from .experiment_harness import (
    ExperimentRecord,
    RateEstimate,
    SweepConfig,
    SweepResult,
    TeacherSpec,
    emit_report,
    estimate_delta,
    load_config,
    run_single,
    run_sweep,
)
from .lemma_oracle import LemmaReport, default_lemma_suite
from .meanfield_vi import (
    GaussianFactor,
    InverseGammaFactor,
    MeanFieldPosterior,
    load_posterior,
    save_posterior,
)
from .priors_sieves import PriorSpec, SieveSpec, sieve_bounds

__version__ = "0.1.0"

__all__ = [
    "ModelDims",
    "NetworkParams",
    "RegressionDataset",
    "embed_teacher",
    "make_teacher",
    "network_eval",
    "simulate_dataset",
    "QuadratureRule",
    "TailMassEstimate",
    "averaged_density_hellinger",
    "default_rule",
    "gauss_legendre_rule",
    "hellinger_true_vs_model",
    "kl_true_vs_model",
    "predictor_l2_error",
    "vb_predictor",
    "vp_tail_mass",
    "FitResult",
    "TrainConfig",
    "TrainingDivergenceError",
    "elbo_estimate",
    "fit",
    "ExperimentRecord",
    "RateEstimate",
    "SweepConfig",
    "SweepResult",
    "TeacherSpec",
    "emit_report",
    "estimate_delta",
    "load_config",
    "run_single",
    "run_sweep",
    "LemmaReport",
    "default_lemma_suite",
    "GaussianFactor",
    "InverseGammaFactor",
    "MeanFieldPosterior",
    "load_posterior",
    "save_posterior",
    "PriorSpec",
    "SieveSpec",
    "sieve_bounds",
]
