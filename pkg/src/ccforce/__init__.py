"""Contact-conditional force estimation from robot signals and vision-style cues."""

from .config import ConfigError, ExperimentConfig
from .contact import (
    ContactClassifier,
    ContactClassifierParams,
    aggregate_crowd_labels,
    contact_from_force,
    debounce,
    predict_contact,
    train_contact_classifier,
)
from .estimators import (
    MethodArtifacts,
    estimate_force_contact_conditional,
    estimate_force_fullvision,
    estimate_force_posdiff,
    run_method,
    smooth_force,
)
from .eval import (
    EvalReport,
    classification_metrics,
    data_efficiency_sweep,
    nrmse,
    rmse_normalized_position,
    run_benchmark,
    stiffness_error_report,
)
from .simulator import MATERIALS, REALISTIC, SILICONE, MaterialProfile, NoiseProfile, Scene, simulate_demonstration
from .stiffness import (
    FitError,
    FullVisionScaler,
    LocalStiffnessRegressor,
    PosDiffRegressor,
    fit_fullvision_scale,
    fit_posdiff,
    fit_stiffness,
)
from .types import (
    C_FS_K_FS,
    C_V_K_FS,
    C_V_K_PSM,
    F_PSM,
    FULLVISION,
    METHOD_TAGS,
    POSDIFF,
    ContactSignal,
    Demonstration,
    ForceSeries,
    NormalizedPositionSeries,
    PosDiffModel,
    StereoKeypoints,
    StiffnessModel,
)

__version__ = "0.1.0"
