# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

"""Scoring graphs of the supported model kinds.

Each kind lists its parameter blocks and builds the score of
``(image, object, attribute)`` triplets on a :class:`~tmnet.numeric.GradTape`.
Work is split in three steps so that batched scoring never repeats itself:
``encode_images`` runs once per sample, ``encode_pairs`` once per distinct
pair, and ``scores`` combines both for triplets given as a sample index and a
pair index.
"""

import numpy as np

from collections import namedtuple

from ..exceptions import ConfigError, ContractError

Block = namedtuple("Block", ["name", "shape", "init", "fan", "group"])


class Bound(dict):
    """Parameter name -> tape variable, with the architecture they belong to"""

    def __init__(self, config, variables):
        super().__init__(variables)
        self.config = config


def bind(tape, params, trainable=()):
    """Records the blocks of ``params`` on ``tape``, as differentiable leaves
    for the names in ``trainable`` and as constants otherwise"""

    variables = {}
    for name, value in params.items():
        if name in trainable:
            variables[name] = tape.leaf(value, name)
        else:
            variables[name] = tape.constant(value)
    return Bound(params.config, variables)


NETWORKS = {}


def network(cls):
    NETWORKS[cls.name] = cls()
    return cls


def get_network(kind):
    try:
        return NETWORKS[kind]
    except KeyError:
        raise ConfigError(
            "Unknown model kind '{}', expected one of {}".format(
                kind, ", ".join(sorted(NETWORKS))
            )
        )


def _linear(name, rows, cols, group):
    return [
        Block(name + ".weight", (rows, cols), "uniform", (cols, rows), group),
        Block(name + ".bias", (rows,), "zeros", None, group),
    ]


class Network:
    name = None
    has_gates = False

    def blocks(self, config, vocab):
        raise NotImplementedError()

    def embedding_blocks(self, config, vocab, group):
        return [
            Block(
                "object_embedding",
                (vocab.num_objects, config.embedding_dim),
                "objects",
                None,
                group,
            ),
            Block(
                "attribute_embedding",
                (vocab.num_attributes, config.embedding_dim),
                "attributes",
                None,
                group,
            ),
        ]

    def embed_pairs(self, tape, p, pairs):
        objects = np.array([pair.object_id for pair in pairs], dtype=np.intp)
        attributes = np.array([pair.attribute_id for pair in pairs], dtype=np.intp)
        return tape.concat(
            tape.take_rows(p["object_embedding"], objects),
            tape.take_rows(p["attribute_embedding"], attributes),
        )

    def gates(self, tape, p, pairs):
        """Gates of every layer, one row per pair (or a single shared row)"""
        raise ContractError(f"model '{self.name}' has no gatings")

    def encode_images(self, tape, p, x):
        raise NotImplementedError()

    def encode_pairs(self, tape, p, pairs):
        raise NotImplementedError()

    def features(self, tape, p, images, encoded, samples, pairs):
        raise NotImplementedError()

    def scores(self, tape, p, images, encoded, samples, pairs):
        raise NotImplementedError()


class _ModularNetwork(Network):
    has_gates = True

    def module_blocks(self, config, first_fan_in=None):
        blocks = []
        counts = config.module_counts
        for i in range(1, config.layers + 1):
            width_in = config.input_dim(i)
            fan_in = first_fan_in if i == 1 and first_fan_in else width_in
            rows = counts[i] * config.module_dim
            blocks.append(
                Block(
                    f"layer{i}.weight",
                    (rows, width_in),
                    "uniform",
                    (fan_in, config.module_dim),
                    "feature",
                )
            )
            blocks.append(Block(f"layer{i}.bias", (rows,), "zeros", None, "feature"))
        return blocks

    def layer_gates(self, tape, logits, config):
        return [
            tape.segment_softmax(
                tape.columns(logits, block.offset, block.offset + block.sources * block.targets),
                block.sources,
            )
            for block in config.gate_layout
        ]

    def upper_layers(self, tape, p, o, gates, config, index=None):
        """Layers 2 to L on the outputs ``o`` of the first one"""

        for i, block in enumerate(config.gate_layout[1:], 2):
            x = tape.gated_sum(o, gates[i - 1], block.sources, block.targets, index)
            o = tape.relu(
                tape.block_affine(
                    x, p[f"layer{i}.weight"], p[f"layer{i}.bias"], block.targets
                )
            )
        return o


class _SharedGates(_ModularNetwork):
    """Gates are free parameters shared by every pair"""

    def shared_gate_block(self, config):
        return Block("gating.shared_logits", (config.gate_size,), "zeros", None, "gating")

    def gates(self, tape, p, pairs):
        return self.layer_gates(tape, p["gating.shared_logits"], p.config)


@network
class TaskDrivenNetwork(_ModularNetwork):
    name = "tmn"

    def blocks(self, config, vocab):
        return (
            self.embedding_blocks(config, vocab, "gating")
            + _linear("gating.hidden", config.gating_hidden, 2 * config.embedding_dim, "gating")
            + _linear("gating.output", config.gate_size, config.gating_hidden, "gating")
            + self.module_blocks(config)
            + _linear("projection", 1, config.module_dim, "feature")
        )

    def gates(self, tape, p, pairs):
        hidden = tape.relu(
            tape.affine(
                self.embed_pairs(tape, p, pairs),
                p["gating.hidden.weight"],
                p["gating.hidden.bias"],
            )
        )
        logits = tape.affine(hidden, p["gating.output.weight"], p["gating.output.bias"])
        return self.layer_gates(tape, logits, p.config)

    def encode_images(self, tape, p, x):
        # a single input module: the first layer gates are all exactly one
        return tape.relu(tape.affine(x, p["layer1.weight"], p["layer1.bias"]))

    def encode_pairs(self, tape, p, pairs):
        if p.config.layers == 1:
            return None
        return self.gates(tape, p, pairs)

    def features(self, tape, p, images, encoded, samples, pairs):
        o = tape.take_rows(images, samples)
        return self.upper_layers(tape, p, o, encoded, p.config, pairs)

    def scores(self, tape, p, images, encoded, samples, pairs):
        return tape.affine(
            self.features(tape, p, images, encoded, samples, pairs),
            p["projection.weight"],
            p["projection.bias"],
        )


@network
class TaskAgnosticNetwork(_SharedGates):
    """Shared gates, pair embedding concatenated to the image feature"""

    name = "ablation_a"

    def blocks(self, config, vocab):
        fan_in = config.feature_dim + 2 * config.embedding_dim
        first = config.module_counts[1] * config.module_dim
        return (
            self.embedding_blocks(config, vocab, "gating")
            + [self.shared_gate_block(config)]
            + self.module_blocks(config, fan_in)
            + [
                Block(
                    "layer1.pair_weight",
                    (first, 2 * config.embedding_dim),
                    "uniform",
                    (fan_in, config.module_dim),
                    "feature",
                )
            ]
            + _linear("projection", 1, config.module_dim, "feature")
        )

    def encode_images(self, tape, p, x):
        return tape.affine(x, p["layer1.weight"], p["layer1.bias"])

    def encode_pairs(self, tape, p, pairs):
        weight = p["layer1.pair_weight"]
        zero = tape.constant(np.zeros((1, weight.shape[0])))
        return tape.affine(self.embed_pairs(tape, p, pairs), weight, zero)

    def features(self, tape, p, images, encoded, samples, pairs):
        o = tape.relu(tape.take_rows(images, samples) + tape.take_rows(encoded, pairs))
        if p.config.layers == 1:
            return o
        return self.upper_layers(tape, p, o, self.gates(tape, p, None), p.config)

    def scores(self, tape, p, images, encoded, samples, pairs):
        return tape.affine(
            self.features(tape, p, images, encoded, samples, pairs),
            p["projection.weight"],
            p["projection.bias"],
        )


@network
class OutputJoinNetwork(_SharedGates):
    """Shared gates on the image alone, pair embedding met at the output"""

    name = "ablation_b"

    def blocks(self, config, vocab):
        return (
            self.embedding_blocks(config, vocab, "gating")
            + [self.shared_gate_block(config)]
            + self.module_blocks(config)
            + _linear(
                "pair_projection", config.module_dim, 2 * config.embedding_dim, "feature"
            )
        )

    def encode_images(self, tape, p, x):
        o = tape.relu(tape.affine(x, p["layer1.weight"], p["layer1.bias"]))
        if p.config.layers == 1:
            return o
        return self.upper_layers(tape, p, o, self.gates(tape, p, None), p.config)

    def encode_pairs(self, tape, p, pairs):
        return tape.affine(
            self.embed_pairs(tape, p, pairs),
            p["pair_projection.weight"],
            p["pair_projection.bias"],
        )

    def features(self, tape, p, images, encoded, samples, pairs):
        return tape.take_rows(images, samples)

    def scores(self, tape, p, images, encoded, samples, pairs):
        return tape.row_dot(
            tape.take_rows(images, samples), tape.take_rows(encoded, pairs)
        )


@network
class LabelEmbedNetwork(Network):
    """Two MLPs embedding the pair and the image in a joint space"""

    name = "labelembed"

    def blocks(self, config, vocab):
        hidden = config.gating_hidden
        return (
            self.embedding_blocks(config, vocab, "feature")
            + _linear("pair_mlp.hidden", hidden, 2 * config.embedding_dim, "feature")
            + _linear("pair_mlp.output", config.module_dim, hidden, "feature")
            + _linear("image_mlp.hidden", hidden, config.feature_dim, "feature")
            + _linear("image_mlp.output", config.module_dim, hidden, "feature")
        )

    def _mlp(self, tape, p, name, x):
        hidden = tape.relu(tape.affine(x, p[name + ".hidden.weight"], p[name + ".hidden.bias"]))
        return tape.affine(hidden, p[name + ".output.weight"], p[name + ".output.bias"])

    def encode_images(self, tape, p, x):
        return self._mlp(tape, p, "image_mlp", x)

    def encode_pairs(self, tape, p, pairs):
        return self._mlp(tape, p, "pair_mlp", self.embed_pairs(tape, p, pairs))

    def features(self, tape, p, images, encoded, samples, pairs):
        return tape.take_rows(images, samples)

    def scores(self, tape, p, images, encoded, samples, pairs):
        return tape.row_dot(
            tape.take_rows(images, samples), tape.take_rows(encoded, pairs)
        )
