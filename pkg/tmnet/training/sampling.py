# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import logging

from ..data.dataset import ConceptPair
from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

ALL = "all"


def drop_count(count, fraction):
    return int(fraction * count + 0.5)


def concept_drop(train_pairs, fraction, rng):
    """Random subset of the training pairs left out for one epoch"""

    if not 0 <= fraction < 1:
        raise ConfigError(f"concept drop fraction {fraction} outside [0, 1)")
    train_pairs = [ConceptPair(*p) for p in train_pairs]
    picked = rng.choice(len(train_pairs), drop_count(len(train_pairs), fraction), replace=False)
    return {train_pairs[i] for i in sorted(picked)}


def sample_negatives(true_pair, train_pairs, dropped, k, rng):
    """Draws k distinct training pairs other than the true pair and the
    dropped ones; ``"all"`` returns the whole pool"""

    true_pair = ConceptPair(*true_pair)
    pool = [
        pair
        for pair in (p if type(p) is ConceptPair else ConceptPair(*p) for p in train_pairs)
        if pair != true_pair and pair not in dropped
    ]
    if k == ALL:
        return pool
    if k < 1:
        raise ConfigError(f"need at least one negative, got {k}")
    if k > len(pool):
        raise ConfigError(f"{k} negatives requested from a pool of {len(pool)} pairs")
    return [pool[i] for i in rng.choice(len(pool), k, replace=False)]
