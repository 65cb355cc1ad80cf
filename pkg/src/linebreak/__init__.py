"""Line Break detection and prediction from football tracking and event data."""
from .domain import LabeledPass, OrderedSquads, PassEvent, Pitch, Position, TrackingFrame
from .features import FEATURE_NAMES, N_FEATURES, extract_features
from .gbdt import TrainConfig, TreeEnsemble, cross_validate, train
from .labeler import label_dataset, label_pass

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES", "N_FEATURES", "LabeledPass", "OrderedSquads", "PassEvent", "Pitch", "Position",
    "TrackingFrame", "TrainConfig", "TreeEnsemble", "cross_validate", "extract_features", "label_dataset",
    "label_pass", "train",
]
