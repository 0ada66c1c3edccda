# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import logging
import numpy as np
import time

from collections import namedtuple

from .loss import candidate_scores, softmax_cross_entropy
from .sampling import ALL, concept_drop, drop_count, sample_negatives
from ..data.tsv import format_float
from ..evaluation import auc, calibration_sweep, score_split
from ..exceptions import ConfigError, ContractError, NumericError, ProtocolError
from ..model import bind
from ..numeric import AdamState, GradTape, adam_step

logger = logging.getLogger(__name__)

# Upper bound on the triplets recorded on one tape; larger batches are split
# and their gradients summed
CHUNK_TRIPLETS = 16384

EpochLog = namedtuple(
    "EpochLog", ["epoch", "loss", "train_acc", "dropped", "wall_time", "val_auc"]
)


class TrainConfig(
    namedtuple(
        "TrainConfig",
        [
            "lr_feat",
            "lr_gate",
            "batch",
            "negatives",
            "concept_drop",
            "epochs",
            "seed",
            "finetune_embeddings",
        ],
    )
):
    __slots__ = ()

    def __new__(
        cls,
        lr_feat=0.001,
        lr_gate=0.01,
        batch=256,
        negatives=600,
        concept_drop=0.05,
        epochs=30,
        seed=0,
        finetune_embeddings=True,
    ):
        return super().__new__(
            cls,
            lr_feat,
            lr_gate,
            batch,
            negatives,
            concept_drop,
            epochs,
            seed,
            finetune_embeddings,
        )

    @classmethod
    def from_sections(cls, train, model):
        return cls(
            train["lr_feat"],
            train["lr_gate"],
            train["batch"],
            train["negatives"],
            train["concept_drop"],
            train["epochs"],
            train["seed"],
            model["finetune_embeddings"],
        ).validate()

    def validate(self):
        if self.lr_feat <= 0 or self.lr_gate <= 0:
            raise ConfigError("learning rates must be positive")
        if not isinstance(self.batch, int) or self.batch < 1:
            raise ConfigError(f"batch size must be a positive integer, got {self.batch!r}")
        if self.negatives != ALL and (
            not isinstance(self.negatives, int) or self.negatives < 1
        ):
            raise ConfigError(f"negatives must be 'all' or at least 1, got {self.negatives!r}")
        if not 0 <= self.concept_drop < 1:
            raise ConfigError(f"concept_drop {self.concept_drop} outside [0, 1)")
        if not isinstance(self.epochs, int) or self.epochs < 0:
            raise ConfigError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        return self


def _negatives_for(cfg, train_pairs):
    pool = len(train_pairs) - drop_count(len(train_pairs), cfg.concept_drop) - 1
    if pool < 1:
        raise ConfigError(f"no negative left among {len(train_pairs)} training pairs")
    if cfg.negatives != ALL and cfg.negatives > pool:
        logger.warning(
            "%i negatives requested but only %i pairs are available, using all of them",
            cfg.negatives,
            pool,
        )
        return ALL
    return cfg.negatives


def _top1_hits(values, mask):
    """Rows whose first entry beats every other real entry; a tie is a miss"""

    if values.shape[1] == 1:
        return values.shape[0]
    if mask is not None:
        values = np.where(mask, values, -np.inf)
    return int(np.sum(values[:, 0] > values[:, 1:].max(axis=1)))


def _batch_gradients(params, trainable, x, candidates):
    """Loss, gradients and number of correct top-1 predictions of one batch,
    the true pair being the first candidate of every sample"""

    network = params.network
    size = len(candidates)
    rows = max(1, CHUNK_TRIPLETS // max(len(c) for c in candidates))

    total = 0.0
    correct = 0
    grads = {}
    for start in range(0, size, rows):
        part = candidates[start : start + rows]
        tape = GradTape()
        p = bind(tape, params, trainable)
        scores, mask = candidate_scores(
            tape, p, network, x[start : start + rows], part
        )
        loss = softmax_cross_entropy(tape, scores, np.zeros(len(part), dtype=np.intp), mask)

        weight = len(part) / size
        for name, grad in tape.backward(loss, weight).items():
            if name in grads:
                grads[name] += grad
            else:
                grads[name] = grad
        total += loss.value[0, 0] * weight

        correct += _top1_hits(scores.value, mask)
    return total, grads, correct


def _validation_auc(params, dataset):
    try:
        return auc(calibration_sweep(score_split(params, dataset, "val"), 1))
    except (ContractError, ProtocolError) as e:
        logger.debug("No validation AUC: %s", e)
        return float("nan")


def fit(model_kind, params, dataset, cfg, on_epoch=None):
    """Trains ``params`` on the train split of ``dataset``.

    Returns the parameters of the epoch with the best validation AUC@1 (the
    last epoch when there is no usable validation split) and one
    :class:`EpochLog` per epoch. ``on_epoch`` is called with the log and the
    parameters at the end of every epoch.
    """

    if model_kind != params.kind:
        raise ContractError(f"'{model_kind}' training given '{params.kind}' parameters")
    cfg.validate()
    if not cfg.epochs:
        return params, []

    vocab, samples, splits = dataset
    train = samples["train"]
    train_pairs = splits.train_pairs
    negatives = _negatives_for(cfg, train_pairs)

    trainable = set(params.names)
    if not cfg.finetune_embeddings:
        trainable -= {"object_embedding", "attribute_embedding"}
    groups = []
    for name, lr in (("gating", cfg.lr_gate), ("feature", cfg.lr_feat)):
        names = [n for n in params.group(name) if n in trainable]
        if names:
            groups.append((names, AdamState(lr)))

    rng = np.random.default_rng(cfg.seed)
    features, labels = train.features, train.labels
    logs = []
    best, best_auc = params, -np.inf

    for epoch in range(1, cfg.epochs + 1):
        started = time.monotonic()
        dropped = concept_drop(train_pairs, cfg.concept_drop, rng)
        kept = [i for i, label in enumerate(labels) if label not in dropped]
        order = rng.permutation(kept)

        total, correct = 0.0, 0
        try:
            for start in range(0, len(order), cfg.batch):
                batch = order[start : start + cfg.batch]
                candidates = [
                    [labels[i]] + sample_negatives(labels[i], train_pairs, dropped, negatives, rng)
                    for i in batch
                ]
                loss, grads, hits = _batch_gradients(
                    params, trainable, features[batch], candidates
                )

                updates = {}
                for names, state in groups:
                    new, _ = adam_step(
                        {n: params[n] for n in names}, {n: grads[n] for n in names}, state
                    )
                    updates.update(new)
                params = params.replace(updates)
                total += loss * len(batch)
                correct += hits
        except NumericError as e:
            logger.error("Training diverged in epoch %i: %s", epoch, e)
            raise NumericError(e.primitive, f"non-finite value in epoch {epoch}") from e

        val_auc = _validation_auc(params, dataset)
        log = EpochLog(
            epoch,
            total / max(len(order), 1),
            correct / max(len(order), 1),
            sorted(dropped),
            time.monotonic() - started,
            val_auc,
        )
        logs.append(log)
        logger.info(
            "Epoch %i: loss %.4f, train accuracy %.4f, validation AUC %.4f",
            epoch,
            log.loss,
            log.train_acc,
            val_auc,
        )

        if np.isnan(val_auc):
            best = params
        elif val_auc > best_auc:
            best, best_auc = params, val_auc

        if on_epoch is not None:
            on_epoch(log, params)

    return best, logs


def write_epoch_log(path, logs):
    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        for log in logs:
            f.write(
                "{}\t{}\t{}\t{}\n".format(
                    log.epoch,
                    format_float(log.loss),
                    format_float(log.train_acc),
                    format_float(log.val_auc),
                )
            )
