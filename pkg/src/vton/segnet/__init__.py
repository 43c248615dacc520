from .blocks import RSU, ConfigurationError, ConvBlock, RSUSpec
from .losses import LossError, seg_loss, seg_loss_torch
from .model import BodySegNet, SaliencyOutput, U2NetSpec, build_model, rsu_forward, u2net_forward
from .saliency import binarize, mask_iou, metric_mae, metric_max_fbeta
from .train import (
    SegTrainConfig,
    TrainingDiverged,
    load_seg_model,
    save_seg_checkpoint,
    train_segmentation,
)

__all__ = [
    "RSU",
    "RSUSpec",
    "ConvBlock",
    "ConfigurationError",
    "BodySegNet",
    "U2NetSpec",
    "SaliencyOutput",
    "build_model",
    "u2net_forward",
    "rsu_forward",
    "seg_loss",
    "seg_loss_torch",
    "LossError",
    "binarize",
    "metric_mae",
    "metric_max_fbeta",
    "mask_iou",
    "SegTrainConfig",
    "train_segmentation",
    "TrainingDiverged",
    "save_seg_checkpoint",
    "load_seg_model",
]
