# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModularNetConfig, layer_parameter_counts
from .networks import NETWORKS, bind, get_network
from .params import ModelParams, init_params
from .scoring import (
    GatingSet,
    baseline_labelembed_score,
    dense_equivalent,
    feature_table,
    features,
    gate,
    gate_table,
    modular_forward,
    score,
    score_array,
    score_matrix,
    variant_no_joint_score,
    variant_task_agnostic_score,
)

MODEL_KINDS = ("tmn", "ablation_a", "ablation_b", "labelembed")

__all__ = [
    "MODEL_KINDS",
    "NETWORKS",
    "GatingSet",
    "ModelParams",
    "ModularNetConfig",
    "baseline_labelembed_score",
    "bind",
    "dense_equivalent",
    "feature_table",
    "features",
    "gate",
    "gate_table",
    "get_network",
    "init_params",
    "layer_parameter_counts",
    "load_checkpoint",
    "modular_forward",
    "save_checkpoint",
    "score",
    "score_array",
    "score_matrix",
    "variant_no_joint_score",
    "variant_task_agnostic_score",
]
