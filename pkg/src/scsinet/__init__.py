"""Scalable CSI feedback: one shared transformer core, swappable antenna and
payload branches, a 2-bit quantized bottleneck, and a DFT-codebook baseline."""

from .config import Hyperparams, TrainConfig, desk_profile, full_profile
from .dataset import Dataset, EigenSample, normalize_sample, read_dataset, write_dataset
from .metrics import SgcsResult, multi_payload_loss, sgcs
from .model import (
    BranchConfig,
    NoBranchError,
    ScsiNet,
    build_model,
    load_checkpoint,
    partial_load,
    save_checkpoint,
)

__all__ = [
    "BranchConfig",
    "Dataset",
    "EigenSample",
    "Hyperparams",
    "NoBranchError",
    "ScsiNet",
    "SgcsResult",
    "TrainConfig",
    "build_model",
    "desk_profile",
    "full_profile",
    "load_checkpoint",
    "multi_payload_loss",
    "normalize_sample",
    "partial_load",
    "read_dataset",
    "save_checkpoint",
    "sgcs",
    "write_dataset",
]
