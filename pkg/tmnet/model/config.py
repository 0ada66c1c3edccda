# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

from collections import namedtuple

from ..exceptions import ConfigError

GateBlock = namedtuple("GateBlock", ["offset", "sources", "targets"])
LayerParameters = namedtuple(
    "LayerParameters", ["modular_weights", "modular_total", "dense_weights", "dense_total"]
)


class ModularNetConfig(
    namedtuple(
        "ModularNetConfig",
        [
            "layers",
            "modules",
            "module_dim",
            "feature_dim",
            "gating_hidden",
            "embedding_dim",
        ],
    )
):
    """Shape of a modular network.

    ``modules`` holds the module counts of the hidden layers 1 to L-1; an
    integer is repeated for each of them. The input and the last layer always
    have a single module.
    """

    __slots__ = ()

    def __new__(
        cls,
        layers=3,
        modules=24,
        module_dim=16,
        feature_dim=64,
        gating_hidden=64,
        embedding_dim=300,
    ):
        if isinstance(modules, str):
            modules = [int(m) for m in modules.split(",") if m.strip()]
            if len(modules) == 1:
                modules = modules[0]
        if isinstance(modules, int):
            modules = (modules,) * max(layers - 1, 0)
        else:
            modules = tuple(modules)
        return super().__new__(
            cls, layers, modules, module_dim, feature_dim, gating_hidden, embedding_dim
        )

    @classmethod
    def from_section(cls, section, feature_dim):
        return cls(
            section["layers"],
            section["modules"],
            section["module_dim"],
            feature_dim,
            section["gating_hidden"],
            section["embedding_dim"],
        ).validate()

    @property
    def module_counts(self):
        return (1,) + self.modules + (1,)

    @property
    def gate_layout(self):
        """Position of each layer's gates in the flat gate vector.

        Layers follow each other; within a layer the gates are grouped by
        destination module, ``offset + j * sources + k`` holding edge k -> j.
        """

        counts = self.module_counts
        layout = []
        offset = 0
        for i in range(1, len(counts)):
            layout.append(GateBlock(offset, counts[i - 1], counts[i]))
            offset += counts[i - 1] * counts[i]
        return layout

    @property
    def gate_size(self):
        counts = self.module_counts
        return sum(counts[i - 1] * counts[i] for i in range(1, len(counts)))

    def input_dim(self, layer):
        return self.feature_dim if layer == 1 else self.module_dim

    def validate(self):
        for field in ("layers", "module_dim", "feature_dim", "gating_hidden", "embedding_dim"):
            value = getattr(self, field)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{field} must be a positive integer, got {value!r}")
        if len(self.modules) != self.layers - 1:
            raise ConfigError(
                f"{self.layers} layers need {self.layers - 1} module counts, "
                f"got {len(self.modules)}"
            )
        if any(m < 1 for m in self.modules):
            raise ConfigError(f"module counts must be positive, got {self.modules}")
        return self


def layer_parameter_counts(modules, dim):
    """Affine parameter counts of one layer of ``modules`` modules of width
    ``dim`` against a dense layer of the same total width"""

    return LayerParameters(
        modules * dim * dim,
        modules * (dim * dim + dim),
        (modules * dim) ** 2,
        (modules * dim) ** 2 + modules * dim,
    )
