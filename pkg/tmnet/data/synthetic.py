# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

"""Desk-scale contextual composition data.

Every object and attribute gets a latent vector, and an image feature is a
fixed random projection of ``[u; v; u * v]`` squashed through ``tanh`` plus
gaussian noise. The product term makes the appearance of an attribute depend
on the object it is attached to.
"""

import logging
import numpy as np

from collections import namedtuple

from .dataset import ConceptPair, Dataset, SampleSet, SplitSpec, Vocab
from ..exceptions import ConfigError

logger = logging.getLogger(__name__)


class SynthConfig(
    namedtuple(
        "SynthConfig",
        [
            "objects",
            "attributes",
            "latent_dim",
            "feature_dim",
            "samples_per_pair",
            "eval_samples_per_pair",
            "noise",
            "unseen_fraction",
            "seed",
        ],
    )
):
    __slots__ = ()

    def __new__(
        cls,
        objects=20,
        attributes=15,
        latent_dim=12,
        feature_dim=64,
        samples_per_pair=20,
        eval_samples_per_pair=5,
        noise=0.1,
        unseen_fraction=0.2,
        seed=0,
    ):
        return super().__new__(
            cls,
            objects,
            attributes,
            latent_dim,
            feature_dim,
            samples_per_pair,
            eval_samples_per_pair,
            noise,
            unseen_fraction,
            seed,
        )

    @classmethod
    def from_section(cls, section):
        return cls(**{k: section[k] for k in cls._fields if k in section})

    def validate(self):
        for field in (
            "objects",
            "attributes",
            "latent_dim",
            "feature_dim",
            "samples_per_pair",
            "eval_samples_per_pair",
        ):
            value = getattr(self, field)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{field} must be a positive integer, got {value!r}")
        if self.noise < 0:
            raise ConfigError(f"noise must not be negative, got {self.noise}")
        if not 0 < self.unseen_fraction < 1:
            raise ConfigError(
                f"unseen_fraction must be in (0, 1), got {self.unseen_fraction}"
            )
        return self


def _pick_unseen(cfg, rng):
    """Marks pairs unseen in random order as long as every object and
    attribute keeps at least one seen pair"""

    total = cfg.objects * cfg.attributes
    target = int(round(cfg.unseen_fraction * total))
    if target < 1:
        raise ConfigError(
            f"unseen_fraction {cfg.unseen_fraction} leaves no unseen pair out of {total}"
        )

    per_object = np.full(cfg.objects, cfg.attributes)
    per_attribute = np.full(cfg.attributes, cfg.objects)
    unseen = set()
    for flat in rng.permutation(total):
        if len(unseen) == target:
            break
        o, a = divmod(int(flat), cfg.attributes)
        if per_object[o] > 1 and per_attribute[a] > 1:
            per_object[o] -= 1
            per_attribute[a] -= 1
            unseen.add(ConceptPair(o, a))

    if len(unseen) < target:
        raise ConfigError(
            "Cannot hold out {} of {} pairs while covering every object and attribute".format(
                target, total
            )
        )
    return unseen


def generate_synthetic(cfg):
    """Draws a complete dataset, deterministic given ``cfg.seed``.

    Validation and test hold every pair (the same unseen pairs in both),
    training only the seen ones.
    """

    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    p = cfg.latent_dim
    u = rng.standard_normal((cfg.objects, p))
    v = rng.standard_normal((cfg.attributes, p))
    projection = rng.normal(0.0, np.sqrt(1.0 / (3 * p)), (cfg.feature_dim, 3 * p))

    unseen = _pick_unseen(cfg, rng)
    pairs = [ConceptPair(o, a) for o in range(cfg.objects) for a in range(cfg.attributes)]
    train_pairs = [pair for pair in pairs if pair not in unseen]
    eval_pairs = [(pair, pair in unseen) for pair in pairs]

    vocab = Vocab(
        ["obj{:02d}".format(i) for i in range(cfg.objects)],
        ["attr{:02d}".format(i) for i in range(cfg.attributes)],
    )
    splits = SplitSpec(train_pairs, eval_pairs, eval_pairs)
    splits.validate(vocab)

    def draw(split, split_pairs, count):
        labels = [pair for pair in split_pairs for _ in range(count)]
        o = np.array([pair.object_id for pair in labels], dtype=np.intp)
        a = np.array([pair.attribute_id for pair in labels], dtype=np.intp)
        latent = np.concatenate([u[o], v[a], u[o] * v[a]], axis=1)
        features = np.tanh(latent @ projection.T)
        features += cfg.noise * rng.standard_normal(features.shape)
        ids = ["{}-{:06d}".format(split, i + 1) for i in range(len(labels))]
        return SampleSet(ids, features, labels)

    samples = {
        "train": draw("train", train_pairs, cfg.samples_per_pair),
        "val": draw("val", pairs, cfg.eval_samples_per_pair),
        "test": draw("test", pairs, cfg.eval_samples_per_pair),
    }

    logger.info(
        "Generated %i seen and %i unseen pairs, %i train samples",
        len(train_pairs),
        len(unseen),
        len(samples["train"]),
    )
    return Dataset(vocab, samples, splits)
