# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

from .loop import EpochLog, TrainConfig, fit, write_epoch_log
from .loss import cross_entropy_loss, softmax_cross_entropy
from .sampling import ALL, concept_drop, sample_negatives

__all__ = [
    "ALL",
    "EpochLog",
    "TrainConfig",
    "concept_drop",
    "cross_entropy_loss",
    "fit",
    "sample_negatives",
    "softmax_cross_entropy",
    "write_epoch_log",
]
