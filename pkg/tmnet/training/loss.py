# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import numpy as np

from ..data.dataset import ConceptPair
from ..exceptions import ContractError
from ..model import bind
from ..numeric import GradTape, as_matrix


def softmax_cross_entropy(tape, scores, targets, mask=None):
    """Mean of ``logsumexp(row) - row[target]`` over the rows of ``scores``"""

    return tape.mean(
        tape.sub(tape.logsumexp(scores, mask), tape.pick(scores, targets))
    )


def candidate_targets(labels, candidates):
    """Position of each true pair in its candidate list"""

    targets = []
    for label, pairs in zip(labels, candidates):
        label = ConceptPair(*label)
        positions = [i for i, pair in enumerate(pairs) if ConceptPair(*pair) == label]
        if len(positions) != 1:
            raise ContractError(
                f"true pair {label} found {len(positions)} times among the candidates"
            )
        targets.append(positions[0])
    return np.array(targets, dtype=np.intp)


def candidate_scores(tape, p, network, x, candidates):
    """Scores of each sample against its own candidates, as a row per sample
    padded to the longest list, with the mask of the real entries"""

    columns = {}
    index = []
    for pairs in candidates:
        index.extend(columns.setdefault(tuple(pair), len(columns)) for pair in pairs)
    counts = [len(pairs) for pairs in candidates]

    images = network.encode_images(tape, p, tape.constant(x))
    encoded = network.encode_pairs(tape, p, [ConceptPair(*pair) for pair in columns])
    flat = network.scores(
        tape,
        p,
        images,
        encoded,
        np.repeat(np.arange(len(candidates), dtype=np.intp), counts),
        np.array(index, dtype=np.intp),
    )

    width = max(counts)
    if all(c == width for c in counts):
        return tape.reshape(flat, len(candidates), width), None

    mask = np.zeros((len(candidates), width), dtype=bool)
    gather = np.zeros((len(candidates), width), dtype=np.intp)
    start = 0
    for row, count in enumerate(counts):
        mask[row, :count] = True
        gather[row, :count] = np.arange(start, start + count)
        start += count
    padded = tape.take_rows(flat, gather.reshape(-1))
    return tape.reshape(padded, len(candidates), width), mask


def cross_entropy_loss(params, features, labels, candidates):
    """Mean per-sample cross-entropy of the true pair among its candidates"""

    x = as_matrix(np.asarray(features, dtype=np.float64))
    if x.shape[0] != len(candidates) or len(labels) != len(candidates):
        raise ContractError("one label and one candidate list per sample are required")
    targets = candidate_targets(labels, candidates)

    tape = GradTape(record=False)
    p = bind(tape, params)
    scores, mask = candidate_scores(tape, p, params.network, x, candidates)
    return float(softmax_cross_entropy(tape, scores, targets, mask).value[0, 0])
