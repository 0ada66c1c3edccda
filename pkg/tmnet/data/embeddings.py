# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import logging
import numpy as np

from ..exceptions import FormatError

logger = logging.getLogger(__name__)


def normalize_name(name):
    return name.lower().replace("_", " ")


def load_embeddings(path, vocab):
    """Reads a ``token v1 ... vK`` word vector file.

    Returns a ``name -> vector`` table for the object and attribute names of
    ``vocab`` found in the file, and the sorted list of names that were not.
    Tokens and names are compared lowercased with underscores read as spaces;
    a multi-word name absent from the file gets the mean of its words' vectors
    when all of them are present.
    """

    names = vocab.objects + vocab.attributes
    wanted = set()
    for name in names:
        key = normalize_name(name)
        wanted.add(key)
        wanted.update(key.split())

    vectors = {}
    dim = None
    with open(path, "rt", encoding="utf-8") as f:
        for number, line in enumerate(f, 1):
            fields = line.rstrip("\r\n").split(" ")
            if not fields[0] and len(fields) == 1:
                continue

            if dim is None:
                dim = len(fields) - 1
                if dim < 1:
                    raise FormatError("Vector without values", path, number)
            elif len(fields) - 1 != dim:
                raise FormatError(
                    f"Expected {dim} values, got {len(fields) - 1}", path, number
                )

            key = normalize_name(fields[0])
            if key not in wanted or key in vectors:
                continue
            try:
                vector = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as e:
                raise FormatError(str(e), path, number) from e
            if not np.all(np.isfinite(vector)):
                raise FormatError("Non-finite vector value", path, number)
            vectors[key] = vector

    table = {}
    missing = []
    for name in names:
        key = normalize_name(name)
        if key in vectors:
            table[name] = vectors[key]
            continue

        words = key.split()
        if len(words) > 1 and all(w in vectors for w in words):
            table[name] = np.mean([vectors[w] for w in words], axis=0)
        else:
            missing.append(name)

    missing = sorted(set(missing))
    if missing:
        logger.warning("%i names without word vector in %s", len(missing), path)
    logger.debug("Missing word vectors: %s", ", ".join(missing))
    return table, missing
