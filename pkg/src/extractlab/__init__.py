"""A desk-scale laboratory for model-extraction attacks and stateful defenses.

The attack side steals a classifier through a budgeted prediction API by
searching the latent space of a frozen generative prior with Bayesian
optimization, maximizing the label diversity of small query clouds. The
defense side inspects the query stream with a spatial consensus check
and a temporal feature-drift check, withholding answers it distrusts.
Everything is seeded and reproducible down to the file level.
"""

from .attack import (
    AttackConfig,
    CheckpointRecord,
    OracleSession,
    OUTCOME_SERVED,
    QueryResult,
    RunMetrics,
    observe_objective,
    run_latent_attack,
    run_pixel_noise_baseline,
    run_proxy_baseline,
    run_random_latent_baseline,
    vicinal_sample,
)
from .bayesopt import (
    AcquisitionConfig,
    GaussianProcess,
    RandomEmbedding,
    propose_candidate,
)
from .config import DEFAULTS, effective_config, load_config, parse_config, serialize_config
from .data import Dataset, generate_mixture_dataset, load_tabular, sample_mixture
from .defense import (
    BenignStreamReport,
    DefenseModeResult,
    DefenseReport,
    DefenseThresholds,
    InspectionDecision,
    PradaLiteInspector,
    StatefulInspector,
    calibrate_thresholds,
    consensus_score,
    consensus_scores,
    drift_score,
    evaluate_defense,
    jarque_bera_statistic,
    prada_lite,
    run_benign_stream,
    sliding_drift_scores,
)
from .exceptions import (
    ArchitectureError,
    BudgetExceededError,
    ChecksumError,
    ConfigError,
    DegenerateDisplacementError,
    DimensionMismatchError,
    ExtractLabError,
    GenerationError,
    InvalidDistributionError,
    InvalidInputError,
    ModelFormatError,
    NumericalError,
    TrainingDivergedError,
)
from .generator import LatentDecoder, build_seeded_prior, train_world_prior
from .harness import (
    AblationCheckFailure,
    World,
    ablation_scenario,
    attack_scenario,
    build_world,
    calibrate_scenario,
    defend_scenario,
    report_scenario,
    train_victim_scenario,
)
from .models import NeuralClassifier, accuracy, agreement, one_hot, train_ensemble
from .numerics import (
    cholesky_factor,
    cholesky_solve,
    cosine_similarity,
    shannon_entropy,
    softmax,
    softmax_rows,
)
from .rng import SeededRng, derive_seed
from .serialization import (
    load_classifier,
    load_decoder,
    save_classifier,
    save_decoder,
)

__version__ = "0.1.0"

__all__ = [
    "AblationCheckFailure",
    "AcquisitionConfig",
    "ArchitectureError",
    "AttackConfig",
    "BenignStreamReport",
    "BudgetExceededError",
    "CheckpointRecord",
    "ChecksumError",
    "ConfigError",
    "DEFAULTS",
    "Dataset",
    "DefenseModeResult",
    "DefenseReport",
    "DefenseThresholds",
    "DegenerateDisplacementError",
    "DimensionMismatchError",
    "ExtractLabError",
    "GaussianProcess",
    "GenerationError",
    "InspectionDecision",
    "InvalidDistributionError",
    "InvalidInputError",
    "LatentDecoder",
    "ModelFormatError",
    "NeuralClassifier",
    "NumericalError",
    "OUTCOME_SERVED",
    "OracleSession",
    "PradaLiteInspector",
    "QueryResult",
    "RandomEmbedding",
    "RunMetrics",
    "SeededRng",
    "StatefulInspector",
    "TrainingDivergedError",
    "World",
    "ablation_scenario",
    "accuracy",
    "agreement",
    "attack_scenario",
    "build_seeded_prior",
    "build_world",
    "calibrate_scenario",
    "calibrate_thresholds",
    "cholesky_factor",
    "cholesky_solve",
    "consensus_score",
    "consensus_scores",
    "cosine_similarity",
    "defend_scenario",
    "derive_seed",
    "drift_score",
    "effective_config",
    "evaluate_defense",
    "generate_mixture_dataset",
    "jarque_bera_statistic",
    "load_classifier",
    "load_config",
    "load_decoder",
    "load_tabular",
    "observe_objective",
    "one_hot",
    "parse_config",
    "prada_lite",
    "propose_candidate",
    "report_scenario",
    "run_benign_stream",
    "run_latent_attack",
    "run_pixel_noise_baseline",
    "run_proxy_baseline",
    "run_random_latent_baseline",
    "sample_mixture",
    "save_classifier",
    "save_decoder",
    "serialize_config",
    "shannon_entropy",
    "sliding_drift_scores",
    "softmax",
    "softmax_rows",
    "train_ensemble",
    "train_victim_scenario",
    "train_world_prior",
    "vicinal_sample",
]
