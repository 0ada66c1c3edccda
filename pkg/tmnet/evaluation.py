# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

"""Generalized zero-shot evaluation.

A calibration bias ``b`` is added to the score of every unseen candidate. For
each sample there is a single bias where its top-k correctness flips, so the
seen/unseen accuracy curve is computed exactly from these thresholds instead of
a sampled grid. Every point holds the accuracies at its own bias: each critical
bias (where exact ties are broken by candidate index, as in
:func:`predict_topk`), one bias inside each gap between them, and the ``-inf``
and ``+inf`` limits where only seen or only unseen pairs win.
"""

import logging
import numpy as np

from collections import namedtuple

from .data.dataset import ConceptPair
from .data.tsv import format_float
from .exceptions import ContractError, ProtocolError

logger = logging.getLogger(__name__)

BestMetrics = namedtuple("BestMetrics", ["seen", "unseen", "harmonic_mean"])


class ScoreMatrix:
    """Scores of samples (rows) against candidate pairs (columns).

    ``targets`` holds the column of each sample's true pair.
    """

    def __init__(self, scores, unseen_mask, targets, ids=None, pairs=None):
        scores = np.array(scores, dtype=np.float64)
        unseen_mask = np.array(unseen_mask, dtype=bool).reshape(-1)
        targets = np.array(targets, dtype=np.intp).reshape(-1)

        if scores.ndim != 2 or not scores.size:
            raise ContractError(f"score matrix of shape {scores.shape}")
        if not np.all(np.isfinite(scores)):
            raise ContractError("non-finite score")
        n, count = scores.shape
        if unseen_mask.shape != (count,):
            raise ContractError(f"{unseen_mask.size} mask entries for {count} candidates")
        if targets.shape != (n,) or targets.min() < 0 or targets.max() >= count:
            raise ContractError("every sample needs one true pair among the candidates")

        if ids is None:
            ids = [str(i) for i in range(n)]
        if pairs is None:
            pairs = [ConceptPair(0, j) for j in range(count)]
        if len(ids) != n or len(pairs) != count:
            raise ContractError("ids or pairs do not match the score matrix")

        for array in (scores, unseen_mask, targets):
            array.setflags(write=False)
        self.__scores = scores
        self.__mask = unseen_mask
        self.__targets = targets
        self.__ids = list(ids)
        self.__pairs = [ConceptPair(*p) for p in pairs]

    @classmethod
    def from_scores(cls, scores, pairs, unseen_mask, labels, ids=None):
        """Builds a matrix from model scores and the true pair of each sample"""

        columns = {}
        for j, pair in enumerate(pairs):
            pair = ConceptPair(*pair)
            if pair in columns:
                raise ContractError(f"candidate {pair} listed twice")
            columns[pair] = j
        try:
            targets = [columns[ConceptPair(*label)] for label in labels]
        except KeyError as e:
            raise ContractError(f"true pair {e.args[0]} is not a candidate") from e
        return cls(scores, unseen_mask, targets, ids, pairs)

    scores = property(lambda self: self.__scores)
    unseen_mask = property(lambda self: self.__mask)
    targets = property(lambda self: self.__targets)
    ids = property(lambda self: list(self.__ids))
    pairs = property(lambda self: list(self.__pairs))
    shape = property(lambda self: self.__scores.shape)

    @property
    def unseen_samples(self):
        """Whether each sample's true pair is unseen"""
        return self.__mask[self.__targets]

    def shifted(self, constant):
        return ScoreMatrix(
            self.__scores + constant, self.__mask, self.__targets, self.__ids, self.__pairs
        )


class CalibrationCurve:
    """Seen and unseen top-k accuracy at increasing calibration biases"""

    def __init__(self, k, biases, seen, unseen):
        self.__k = k
        self.__biases = np.array(biases, dtype=np.float64)
        self.__seen = np.array(seen, dtype=np.float64)
        self.__unseen = np.array(unseen, dtype=np.float64)
        if not (self.__biases.shape == self.__seen.shape == self.__unseen.shape):
            raise ContractError("curve columns differ in length")
        if not len(self.__biases):
            raise ContractError("empty calibration curve")

    k = property(lambda self: self.__k)
    biases = property(lambda self: self.__biases)
    seen = property(lambda self: self.__seen)
    unseen = property(lambda self: self.__unseen)

    @property
    def points(self):
        return list(zip(self.__biases.tolist(), self.__seen.tolist(), self.__unseen.tolist()))

    def __len__(self):
        return len(self.__biases)


def predict_topk(scores_row, bias, unseen_mask, k):
    """Candidate indices of the k highest biased scores, lowest index first
    among equals. An infinite bias ranks one group entirely above the other."""

    scores_row = np.asarray(scores_row, dtype=np.float64).reshape(-1)
    unseen_mask = np.asarray(unseen_mask, dtype=bool).reshape(-1)
    if k < 1 or k > scores_row.size:
        raise ContractError(f"top-{k} out of {scores_row.size} candidates")

    if np.isinf(bias):
        group = unseen_mask if bias < 0 else ~unseen_mask
        order = np.lexsort((np.arange(scores_row.size), -scores_row, group))
    else:
        biased = scores_row + np.where(unseen_mask, bias, 0.0)
        order = np.argsort(-biased, kind="stable")
    return order[:k].tolist()


def _kth_in_rows(values, m):
    """The m-th (1-based) largest value of each row, ``-inf`` where a row has
    fewer than m entries"""

    n, width = values.shape
    result = np.full(n, -np.inf)
    if not width:
        return result
    ordered = -np.sort(-values, axis=1)
    valid = m <= width
    rows = np.nonzero(valid)[0]
    result[rows] = ordered[rows, m[rows] - 1]
    return result


def sample_thresholds(matrix, k):
    """Bias at which each sample's top-k correctness flips.

    A seen-labeled sample is correct below its threshold, an unseen-labeled
    one above it. ``+inf`` and ``-inf`` stand for always or never.
    """

    scores, mask, targets = matrix.scores, matrix.unseen_mask, matrix.targets
    n = scores.shape[0]
    rows = np.arange(n)
    columns = np.arange(scores.shape[1])
    true = scores[rows, targets][:, None]
    unseen_sample = mask[targets]

    # competitors of the same group ranked above the true pair whatever the bias
    ahead = (scores > true) | ((scores == true) & (columns[None, :] < targets[:, None]))
    same_group = mask[None, :] == unseen_sample[:, None]
    m = k - (ahead & same_group).sum(axis=1)

    thresholds = np.empty(n)
    seen_scores = scores[:, ~mask]
    unseen_scores = scores[:, mask]

    s = ~unseen_sample
    if s.any():
        rival = _kth_in_rows(unseen_scores[s], np.maximum(m[s], 1))
        b = np.full(rival.shape, np.inf)
        found = np.isfinite(rival)
        b[found] = true[s, 0][found] - rival[found]
        thresholds[s] = np.where(m[s] <= 0, -np.inf, b)

    u = unseen_sample
    if u.any():
        rival = _kth_in_rows(seen_scores[u], np.maximum(m[u], 1))
        b = np.full(rival.shape, -np.inf)
        found = np.isfinite(rival)
        b[found] = rival[found] - true[u, 0][found]
        thresholds[u] = np.where(m[u] <= 0, np.inf, b)

    return thresholds, unseen_sample


def _correct_at_own_threshold(matrix, thresholds, k):
    """Top-k correctness of each sample at exactly its own threshold, with the
    arithmetic and tie-break of :func:`predict_topk`. An infinite threshold
    stands for a sample that is always or never correct."""

    scores, mask, targets = matrix.scores, matrix.unseen_mask, matrix.targets
    unseen_sample = mask[targets]
    correct = np.where(unseen_sample, thresholds == -np.inf, thresholds == np.inf)

    rows = np.nonzero(np.isfinite(thresholds))[0]
    if rows.size:
        columns = np.arange(scores.shape[1])
        biased = scores[rows] + np.where(mask[None, :], thresholds[rows, None], 0.0)
        true = biased[np.arange(rows.size), targets[rows]][:, None]
        ahead = (biased > true) | (
            (biased == true) & (columns[None, :] < targets[rows, None])
        )
        correct[rows] = ahead.sum(axis=1) < k
    return correct


def _count_ties(sorted_values, probes):
    return np.searchsorted(sorted_values, probes, side="right") - np.searchsorted(
        sorted_values, probes, side="left"
    )


def calibration_sweep(matrix, k):
    """Exact seen/unseen accuracy curve over every critical bias"""

    if k < 1:
        raise ContractError(f"invalid k {k}")
    thresholds, unseen_sample = sample_thresholds(matrix, k)
    if unseen_sample.all() or not unseen_sample.any():
        raise ProtocolError("both seen-labeled and unseen-labeled samples are required")
    at_threshold = _correct_at_own_threshold(matrix, thresholds, k)

    critical = np.unique(thresholds[np.isfinite(thresholds)])
    between = critical[:-1] + np.diff(critical) / 2
    # adjacent floats have nothing in between
    between = between[(between > critical[:-1]) & (between < critical[1:])]
    probes = np.sort(np.concatenate([[-np.inf, np.inf], critical, between]))

    seen_t = np.sort(thresholds[~unseen_sample])
    unseen_t = np.sort(thresholds[unseen_sample])
    seen_tied = np.sort(thresholds[~unseen_sample & at_threshold])
    unseen_tied = np.sort(thresholds[unseen_sample & at_threshold])

    # seen-labeled samples are correct below their threshold, unseen-labeled
    # ones above it, and both at it when the tie-break favours the true pair
    seen_ok = len(seen_t) - np.searchsorted(seen_t, probes, side="right")
    seen_ok += _count_ties(seen_tied, probes)
    unseen_ok = np.searchsorted(unseen_t, probes, side="left")
    unseen_ok += _count_ties(unseen_tied, probes)

    curve = CalibrationCurve(
        k, probes, seen_ok / len(seen_t), unseen_ok / len(unseen_t)
    )
    logger.debug("Top-%i sweep over %i critical biases", k, len(critical))
    return curve


def auc(curve):
    """Area under the seen accuracy as a function of the unseen accuracy.

    Trapezoids over the operating points, with ``(0, max seen)`` and
    ``(max unseen, 0)`` added at both ends.
    """

    unseen, seen = curve.unseen, curve.seen
    order = np.lexsort((-seen, unseen))
    x = np.concatenate([[0.0], unseen[order], [unseen.max()]])
    y = np.concatenate([[seen.max()], seen[order], [0.0]])
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def harmonic_mean(seen, unseen):
    total = seen + unseen
    return np.where(total > 0, 2.0 * seen * unseen / np.where(total > 0, total, 1.0), 0.0)


def best_metrics(curve):
    return BestMetrics(
        float(curve.seen.max()),
        float(curve.unseen.max()),
        float(harmonic_mean(curve.seen, curve.unseen).max()),
    )


def closed_world_accuracy(matrix, k=1):
    """Top-k accuracy of unseen-labeled samples among unseen candidates only"""

    mask, targets = matrix.unseen_mask, matrix.targets
    unseen_sample = mask[targets]
    if not unseen_sample.any():
        raise ProtocolError("no unseen-labeled sample")

    scores = matrix.scores[unseen_sample]
    rows_targets = targets[unseen_sample]
    true = scores[np.arange(len(rows_targets)), rows_targets][:, None]
    columns = np.arange(scores.shape[1])
    ahead = (scores > true) | ((scores == true) & (columns[None, :] < rows_targets[:, None]))
    ahead &= mask[None, :]
    return float(np.mean(ahead.sum(axis=1) < k))


def evaluate(matrix, topk=3):
    """Curves for k = 1..topk and the summary record.

    The best seen, unseen and harmonic mean values come from the top-1 curve.
    """

    curves = {k: calibration_sweep(matrix, k) for k in range(1, topk + 1)}
    best = best_metrics(curves[1])

    summary = {f"auc@{k}": auc(curve) for k, curve in curves.items()}
    summary["best_seen"] = best.seen
    summary["best_unseen"] = best.unseen
    summary["best_hm"] = best.harmonic_mean
    summary["closed_world"] = closed_world_accuracy(matrix)

    logger.info(
        "AUC@1 %.4f, best seen %.4f, best unseen %.4f, best HM %.4f",
        summary["auc@1"],
        best.seen,
        best.unseen,
        best.harmonic_mean,
    )
    return summary, curves


def score_split(params, dataset, split):
    """Scores a split's samples against the train pairs and its unseen pairs"""

    from .model import score_array

    vocab, samples, splits = dataset
    if split not in samples:
        raise ContractError(f"no '{split}' samples")
    pairs, mask = splits.candidates(split)
    subset = samples[split]
    scores = score_array(params, subset.features, pairs)
    return ScoreMatrix.from_scores(scores, pairs, mask, subset.labels, subset.ids)


def write_curve(path, curve):
    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        f.write("bias\tseen_acc\tunseen_acc\n")
        for bias, seen, unseen in curve.points:
            f.write(f"{format_float(bias)}\t{format_float(seen)}\t{format_float(unseen)}\n")


def write_summary(path, summary):
    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        f.write("metric\tvalue\n")
        for name, value in summary.items():
            f.write(f"{name}\t{format_float(value)}\n")
