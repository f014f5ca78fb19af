"""Training, evaluation, checkpointing and gradient checks for the detector."""

from .checkpoint import ModelParams, load_model, load_params, save_params
from .gradcheck import GradCheckReport, check_module, grad_check
from .metrics import MetricsReport, accuracy, roc_auc
from .model import Detector, ModelConfig, prepare_clip
from .perturb import KINDS, LEVELS, perturb, perturb_video
from .training import TrainConfig, evaluate, finetune, predict, pretrain

__all__ = [
    "Detector", "GradCheckReport", "KINDS", "LEVELS", "MetricsReport", "ModelConfig", "ModelParams",
    "TrainConfig", "accuracy", "check_module", "evaluate", "finetune", "grad_check", "load_model",
    "load_params", "perturb", "perturb_video", "predict", "prepare_clip", "pretrain", "roc_auc", "save_params",
]
