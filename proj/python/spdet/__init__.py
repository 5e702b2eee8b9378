"""Pedestrian detection with spatially pooled covariance and LBP channels."""

from ._spdet import (
    InvalidInput,
    IoError,
    Model,
    channel_count,
    channels,
    iou,
    lamr,
    pauc_risk,
    read_pnm,
    window_features,
)

__all__ = [
    "InvalidInput",
    "IoError",
    "Model",
    "channel_count",
    "channels",
    "iou",
    "lamr",
    "pauc_risk",
    "read_pnm",
    "window_features",
]
