# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import logging
import numpy as np

from .networks import get_network
from ..exceptions import ContractError, FormatError

logger = logging.getLogger(__name__)

EMBEDDING_STD = 0.6


class ModelParams:
    """Read-only parameter blocks of one model, in their fixed order"""

    def __init__(self, kind, config, vocab, arrays):
        self.__kind = kind
        self.__config = config
        self.__vocab = vocab
        self.__network = get_network(kind)
        self.__blocks = self.__network.blocks(config, vocab)

        arrays = dict(arrays)
        expected = [block.name for block in self.__blocks]
        if sorted(arrays) != sorted(expected):
            raise ContractError(
                "Parameter blocks {} do not match model '{}' ({})".format(
                    ", ".join(sorted(arrays)), kind, ", ".join(expected)
                )
            )

        self.__arrays = {}
        for block in self.__blocks:
            value = np.array(arrays[block.name], dtype=np.float64)
            if value.shape != block.shape:
                raise ContractError(
                    f"Block '{block.name}' has shape {value.shape}, expected {block.shape}"
                )
            value.setflags(write=False)
            self.__arrays[block.name] = value

    kind = property(lambda self: self.__kind)
    config = property(lambda self: self.__config)
    vocab = property(lambda self: self.__vocab)
    network = property(lambda self: self.__network)
    blocks = property(lambda self: list(self.__blocks))
    names = property(lambda self: [block.name for block in self.__blocks])

    def __getitem__(self, name):
        return self.__arrays[name]

    def __contains__(self, name):
        return name in self.__arrays

    def __len__(self):
        return len(self.__arrays)

    def items(self):
        return [(block.name, self.__arrays[block.name]) for block in self.__blocks]

    def arrays(self):
        return dict(self.items())

    def group(self, name):
        """Names of the blocks of an optimizer group ('gating' or 'feature')"""
        return [block.name for block in self.__blocks if block.group == name]

    @property
    def num_parameters(self):
        return sum(value.size for value in self.__arrays.values())

    def replace(self, updates):
        arrays = self.arrays()
        arrays.update(updates)
        return ModelParams(self.__kind, self.__config, self.__vocab, arrays)

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            self.__kind == other.kind
            and self.__config == other.config
            and self.__vocab == other.vocab
            and self.names == other.names
            and all(np.array_equal(v, other[n]) for n, v in self.__arrays.items())
        )

    def __repr__(self):
        return f"ModelParams({self.__kind}, {self.num_parameters} parameters)"


def init_params(config, vocab, seed=0, kind="tmn", embeddings=None):
    """Draws fresh parameters.

    Weights are uniform in ``(-a, a)`` with ``a = sqrt(6 / (fan_in + fan_out))``
    and biases zero. Embedding rows come from ``embeddings`` (a name -> vector
    table) when the name is present, from ``Normal(0, 0.6^2)`` otherwise.
    """

    config.validate()
    network = get_network(kind)
    rng = np.random.default_rng(seed)
    embeddings = embeddings or {}

    arrays = {}
    pretrained = 0
    for block in network.blocks(config, vocab):
        if block.init in ("objects", "attributes"):
            value = rng.normal(0.0, EMBEDDING_STD, block.shape)
            names = vocab.objects if block.init == "objects" else vocab.attributes
            for row, name in enumerate(names):
                vector = embeddings.get(name)
                if vector is None:
                    continue
                if np.shape(vector) != (config.embedding_dim,):
                    raise FormatError(
                        "Word vector for '{}' has {} values, expected {}".format(
                            name, np.size(vector), config.embedding_dim
                        )
                    )
                value[row] = vector
                pretrained += 1
        elif block.init == "uniform":
            bound = np.sqrt(6.0 / sum(block.fan))
            value = rng.uniform(-bound, bound, block.shape)
        else:
            value = np.zeros(block.shape)
        arrays[block.name] = value

    params = ModelParams(kind, config, vocab, arrays)
    logger.info(
        "Initialized %s with %i parameters (%i pretrained embeddings)",
        kind,
        params.num_parameters,
        pretrained,
    )
    return params
