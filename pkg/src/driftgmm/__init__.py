"""Online Gaussian-mixture classification for drifting data streams."""
from .adaptation import create_gaussian, gaussian_close, non_severe_adaptation, update_gaussian
from .detector import EDDM, Level
from .evaluation import (RunResult, accuracy_over_time, cv_keep_mask, gmean, prequential_run, stream_cv)
from .gmm import Gaussian, GmmModel, NumericError, density, fit_em, log_likelihood, select_k_and_fit, train_initial
from .learner import LearnerConfig, Mechanism, OnlineGmmLearner, Phase, ablation_config
from .noise import ValidationWindow, filter_training_set, is_noisy, kdn
from .pool import ModelPool
from .stats import friedman_nemenyi, wilcoxon_signed_rank
from .streams import BUILTIN_NAMES, ConceptSchedule, Stream, builtin_schedule, generate, load_csv, severity

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES", "ConceptSchedule", "EDDM", "Gaussian", "GmmModel", "LearnerConfig", "Level", "Mechanism",
    "ModelPool", "NumericError", "OnlineGmmLearner", "Phase", "RunResult", "Stream", "ValidationWindow",
    "ablation_config", "accuracy_over_time", "builtin_schedule", "create_gaussian", "cv_keep_mask", "density",
    "filter_training_set", "fit_em", "friedman_nemenyi", "gaussian_close", "generate", "gmean", "is_noisy", "kdn",
    "load_csv", "log_likelihood", "non_severe_adaptation", "prequential_run", "select_k_and_fit", "severity",
    "stream_cv", "train_initial", "update_gaussian", "wilcoxon_signed_rank",
]
