"""Keypoint-to-position regressors: a two-view FCN and a GraphSAGE-style GNN."""

from .estimator import FCNPositionRegressor, GNNPositionRegressor, position_dataset
from .graph import GraphSpec, build_tool_graph
from .normalize import PositionNormalizer, normalize_positions, rescale_to_test_range
from .training import (
    PositionEstimatorParams,
    TrainingConfig,
    fine_tune,
    gradient_check,
    predict,
    train_estimator,
)
