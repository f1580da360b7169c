"""Loss-guided stability selection for sparse linear models."""

__version__ = "0.1.0"

from .boosting import BoostConfig, BoostModel, fit_boost, selected_set
from .datagen import (
    Dataset,
    GroundTruth,
    Partition,
    ScenarioConfig,
    draw_subsample,
    generate_classification,
    generate_regression,
    make_partitions,
    make_scenario_partitions,
    rng_stream,
)
from .errors import ConfigError, DataError, LGSSError, SelectionError, UnderdeterminedError
from .estimators import FittedSubmodel, evaluate_loss, fit_reduced, fit_with_fallback
from .losses import LOGISTIC, SQUARED, LogisticLoss, SquaredLoss, get_loss
from .stabsel import (
    GridSpec,
    PssConfig,
    SelectionProfile,
    StabSelConfig,
    StableModel,
    aggregate,
    loss_guided_select,
    pfer_bound,
    pss_exhaustive,
    pss_meta_stable,
    pss_stepwise,
    run_stability_selection,
    stable_by_rank,
    stable_by_threshold,
)
