"""Mixture complexity: a continuous cluster count for Gaussian mixtures,
its hierarchical decomposition, and gradual clustering-change detection."""

__version__ = "0.1.0"

from .errors import (
    DataFormatError,
    DegenerateModelError,
    FitFailureError,
    InsufficientDataError,
    InvalidInputError,
    MixcompError,
    NumericalDomainError,
    StepFailureError,
)
from .mixture import (
    GaussianComponent,
    MixtureModel,
    WeightedDataset,
    latent_entropy,
    log_density,
    mc,
    responsibilities,
)
from .em import (
    Criterion,
    FitConfig,
    FittedModel,
    complete_log_likelihood,
    em_fit,
    fit_weights,
    observed_log_likelihood,
    score,
)
from .sdms import SdmsConfig, TrackResult, change_code_length, sdms_step, track_mc
from .decomp import (
    FuzzyCMeansConfig,
    Hierarchy,
    McDecomposition,
    decompose,
    fuzzy_cmeans,
    track_decomposition,
    upper_model,
)
from .detect import AlertConfig, AlertMode, EvalResult, detect_changes, evaluate
from .data import StreamSpec, gen_imbalance_gaussian, gen_move_gaussian, ingest_csv
