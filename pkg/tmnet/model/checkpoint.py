# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

"""Checkpoint files.

``TMN1`` magic, a little-endian 32-bit header length, an INI header with the
``[model]``, ``[vocab]`` and ``[blocks]`` sections, then every block as
little-endian float64 values in header order.
"""

import io
import logging
import numpy as np
import struct

from configparser import Error as ConfigParserError, RawConfigParser

from .config import ModularNetConfig
from .params import ModelParams
from ..data.dataset import Vocab
from ..exceptions import ContractError, FormatError, TMNError

logger = logging.getLogger(__name__)

MAGIC = b"TMN1"
LENGTH = struct.Struct("<I")
DTYPE = np.dtype("<f8")


def _parser():
    parser = RawConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def save_checkpoint(path, params):
    config = params.config
    parser = _parser()
    parser["model"] = {
        "kind": params.kind,
        "layers": str(config.layers),
        "modules": ",".join(str(m) for m in config.modules),
        "module_dim": str(config.module_dim),
        "feature_dim": str(config.feature_dim),
        "gating_hidden": str(config.gating_hidden),
        "embedding_dim": str(config.embedding_dim),
    }
    parser["vocab"] = {
        "objects": "\t".join(params.vocab.objects),
        "attributes": "\t".join(params.vocab.attributes),
    }
    parser["blocks"] = {
        name: ",".join(str(s) for s in value.shape) for name, value in params.items()
    }

    text = io.StringIO()
    parser.write(text)
    header = text.getvalue().encode("utf-8")

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(LENGTH.pack(len(header)))
        f.write(header)
        for _, value in params.items():
            f.write(np.ascontiguousarray(value, dtype=DTYPE).tobytes())

    logger.info("Saved %r to %s", params, path)


def load_checkpoint(path):
    with open(path, "rb") as f:
        data = f.read()

    if data[: len(MAGIC)] != MAGIC:
        raise FormatError("Not a TMN1 checkpoint", path)
    start = len(MAGIC) + LENGTH.size
    if len(data) < start:
        raise FormatError("Truncated header", path)
    (length,) = LENGTH.unpack_from(data, len(MAGIC))
    if len(data) < start + length:
        raise FormatError("Truncated header", path)

    parser = _parser()
    try:
        parser.read_string(data[start : start + length].decode("utf-8"))
        model = parser["model"]
        config = ModularNetConfig(
            int(model["layers"]),
            model["modules"],
            int(model["module_dim"]),
            int(model["feature_dim"]),
            int(model["gating_hidden"]),
            int(model["embedding_dim"]),
        ).validate()
        vocab = Vocab(
            parser["vocab"]["objects"].split("\t"),
            parser["vocab"]["attributes"].split("\t"),
        )
        shapes = [
            (name, tuple(int(s) for s in shape.split(",")))
            for name, shape in parser["blocks"].items()
        ]
        kind = model["kind"]
    except (ConfigParserError, KeyError, ValueError, UnicodeDecodeError, TMNError) as e:
        raise FormatError(f"Invalid header: {e}", path) from e

    offset = start + length
    arrays = {}
    for name, shape in shapes:
        count = int(np.prod(shape))
        end = offset + count * DTYPE.itemsize
        if end > len(data):
            raise FormatError(f"Truncated block '{name}'", path)
        values = np.frombuffer(data, dtype=DTYPE, count=count, offset=offset)
        arrays[name] = values.astype(np.float64).reshape(shape)
        offset = end
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes", path)

    try:
        params = ModelParams(kind, config, vocab, arrays)
    except (ContractError, TMNError) as e:
        raise FormatError(str(e), path) from e
    logger.info("Loaded %r from %s", params, path)
    return params
