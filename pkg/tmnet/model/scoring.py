# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import logging
import numpy as np

from .networks import bind
from ..data.dataset import ConceptPair, SampleSet
from ..exceptions import ContractError, DimensionError
from ..numeric import GradTape, as_matrix

logger = logging.getLogger(__name__)

# Triplets evaluated per tape when scoring many samples against many pairs
CHUNK_TRIPLETS = 16384


class GatingSet:
    """Gates of every layer of one pair.

    ``layer(i)`` is the ``M(i-1) x M(i)`` matrix whose column j holds the
    weights of the edges entering module j of layer i.
    """

    def __init__(self, config, flat):
        flat = np.array(flat, dtype=np.float64).reshape(-1)
        if flat.size != config.gate_size:
            raise DimensionError(
                "gate", f"{flat.size} gates for a layout of {config.gate_size}"
            )
        flat.setflags(write=False)
        self.__config = config
        self.__flat = flat

    config = property(lambda self: self.__config)
    flat = property(lambda self: self.__flat)

    @classmethod
    def from_layers(cls, config, layers):
        flat = [np.asarray(g, dtype=np.float64).T.reshape(-1) for g in layers]
        return cls(config, np.concatenate(flat))

    def layer(self, index):
        if not 1 <= index <= self.__config.layers:
            raise ContractError(f"layer {index} outside 1..{self.__config.layers}")
        block = self.__config.gate_layout[index - 1]
        values = self.__flat[block.offset : block.offset + block.sources * block.targets]
        return values.reshape(block.targets, block.sources).T

    @property
    def layers(self):
        return [self.layer(i) for i in range(1, self.__config.layers + 1)]

    def __len__(self):
        return self.__config.layers


def _check_pair(params, pair):
    pair = ConceptPair(*pair)
    params.vocab.check(pair)
    return pair


def _features_matrix(params, x):
    if isinstance(x, SampleSet):
        x = x.features
    x = as_matrix(np.asarray(x, dtype=np.float64))
    if x.shape[1] != params.config.feature_dim:
        raise DimensionError(
            "score", f"feature width {x.shape[1]} != {params.config.feature_dim}"
        )
    return x


def gate(params, pair):
    """Gates the network uses for ``pair``"""

    pair = _check_pair(params, pair)
    tape = GradTape(record=False)
    p = bind(tape, params)
    layers = params.network.gates(tape, p, [pair])
    return GatingSet(params.config, np.concatenate([g.value[0] for g in layers]))


def gate_table(params, pairs):
    """Flat gate vectors of several pairs, one row per pair"""

    pairs = [_check_pair(params, pair) for pair in pairs]
    tape = GradTape(record=False)
    p = bind(tape, params)
    layers = params.network.gates(tape, p, pairs)
    table = np.concatenate([g.value for g in layers], axis=1)
    return np.broadcast_to(table, (len(pairs), table.shape[1])).copy()


def modular_forward(params, x, gates):
    """Task-driven feature of ``x`` for the given gates.

    Only for models whose modular network reads the image alone.
    """

    if not params.network.has_gates or "layer1.pair_weight" in params:
        raise ContractError(f"model '{params.kind}' has no image-only modular network")
    x = _features_matrix(params, x)
    if x.shape[0] != 1:
        raise DimensionError("modular_forward", "a single feature vector is expected")

    tape = GradTape(record=False)
    o = tape.constant(x)
    for i, block in enumerate(params.config.gate_layout, 1):
        g = as_matrix(gates.layer(i).T.reshape(-1))
        o = tape.gated_sum(o, g, block.sources, block.targets)
        o = tape.relu(
            tape.block_affine(
                o, params[f"layer{i}.weight"], params[f"layer{i}.bias"], block.targets
            )
        )
    return o.tensor


def dense_equivalent(params, gates, layer_index):
    """Dense weight and bias equal to gating then applying one modular layer.

    Block ``(j, k)`` of the weight is ``g(k -> j) * W_j``, so that
    ``relu(weight @ concat(o) + bias)`` gives the layer output.
    """

    config = params.config
    if not 1 <= layer_index <= config.layers:
        raise ContractError(f"layer {layer_index} outside 1..{config.layers}")
    if layer_index == 1 and "layer1.pair_weight" in params:
        raise ContractError("the first layer of ablation_a also reads the pair")

    block = config.gate_layout[layer_index - 1]
    d, width_in = config.module_dim, config.input_dim(layer_index)
    w = params[f"layer{layer_index}.weight"].reshape(block.targets, d, width_in)
    g = gates.layer(layer_index)
    dense = np.einsum("kj,jod->jokd", g, w).reshape(
        block.targets * d, block.sources * width_in
    )
    return dense, params[f"layer{layer_index}.bias"].copy()


def _run(params, x, pairs, what, cache_gates=True):
    """Scores (or features) of every sample of ``x`` against every pair, rows
    by sample and pairs varying fastest"""

    network = params.network
    n, count = x.shape[0], len(pairs)
    tape = GradTape(record=False)
    p = bind(tape, params)
    encoded = network.encode_pairs(tape, p, pairs) if cache_gates else None

    chunk = max(1, CHUNK_TRIPLETS // count)
    results = []
    for start in range(0, n, chunk):
        rows = min(chunk, n - start)
        samples = np.repeat(np.arange(rows), count)
        index = np.tile(np.arange(count), rows)
        if cache_gates:
            chunk_encoded = encoded
        else:
            # one pair encoding per triplet
            chunk_encoded = network.encode_pairs(tape, p, [pairs[i] for i in index])
            index = np.arange(rows * count)

        images = network.encode_images(tape, p, tape.constant(x[start : start + rows]))
        step = getattr(network, what)
        results.append(step(tape, p, images, chunk_encoded, samples, index).value)
    return np.concatenate(results, axis=0)


def score_array(params, x, pairs, cache_gates=True):
    """Scores of every sample of ``x`` against every pair as an
    ``n x len(pairs)`` array"""

    pairs = [_check_pair(params, pair) for pair in pairs]
    if not pairs:
        raise ContractError("no candidate pair to score")
    x = _features_matrix(params, x)
    if not x.shape[0]:
        raise ContractError("no sample to score")
    return _run(params, x, pairs, "scores", cache_gates).reshape(x.shape[0], len(pairs))


def score(params, x, pair):
    """Joint compatibility of one image feature and one pair"""
    return float(score_array(params, x, [pair])[0, 0])


def score_matrix(params, samples, pairs, unseen_mask=None, cache_gates=True):
    """Scores a :class:`SampleSet` against candidate pairs"""

    from ..evaluation import ScoreMatrix

    if unseen_mask is None:
        unseen_mask = np.zeros(len(pairs), dtype=bool)
    scores = score_array(params, samples.features, pairs, cache_gates)
    return ScoreMatrix.from_scores(scores, pairs, unseen_mask, samples.labels, samples.ids)


def features(params, x, pair):
    """Feature the model compares with ``pair`` for the image ``x``"""

    pair = _check_pair(params, pair)
    x = _features_matrix(params, x)
    return _run(params, x, [pair], "features")[0].copy()


def feature_table(params, x, pairs):
    """Features of every (sample, pair) combination, pairs varying fastest"""

    pairs = [_check_pair(params, pair) for pair in pairs]
    x = _features_matrix(params, x)
    return _run(params, x, pairs, "features")


def _expect(params, kind):
    if params.kind != kind:
        raise ContractError(f"expected '{kind}' parameters, got '{params.kind}'")


def variant_task_agnostic_score(params, x, pair):
    _expect(params, "ablation_a")
    return score(params, x, pair)


def variant_no_joint_score(params, x, pair):
    _expect(params, "ablation_b")
    return score(params, x, pair)


def baseline_labelembed_score(params, x, pair):
    _expect(params, "labelembed")
    return score(params, x, pair)
