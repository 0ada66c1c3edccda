# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

"""Looking inside a trained model: which pairs drive which edges and modules,
the strongest paths through the network for a pair, and exports of gatings,
features and scores for external tools."""

import logging
import numpy as np

from collections import namedtuple

from .data.dataset import ConceptPair
from .data.tsv import format_float
from .exceptions import ConfigError, ContractError
from .model import feature_table, gate, gate_table, score_array

logger = logging.getLogger(__name__)

Edge = namedtuple("Edge", ["layer", "source", "target"])
Module = namedtuple("Module", ["layer", "module"])
WeightedEdge = namedtuple("WeightedEdge", ["layer", "source", "target", "weight"])
AttributionTable = namedtuple("AttributionTable", ["unit", "ranking"])
TopologyGraph = namedtuple(
    "TopologyGraph", ["pair", "edges", "tolerance", "per_destination"]
)

EXPORTS = ("gatings", "features", "scores")


def _require_gates(params):
    if not params.network.has_gates:
        raise ConfigError(f"model '{params.kind}' has no gatings")


def _check_count(n, available):
    if not 1 <= n <= available:
        raise ContractError(f"cannot rank {n} out of {available}")


def _rank(pairs, strengths, n):
    order = np.argsort(-strengths, kind="stable")[:n]
    return [(pairs[i], float(strengths[i])) for i in order]


def top_pairs_per_edge(params, pairs, n):
    """Pairs with the largest gate on each edge of layers 2 and above (first
    layer gates are all one)"""

    _require_gates(params)
    pairs = [ConceptPair(*p) for p in pairs]
    _check_count(n, len(pairs))
    table = gate_table(params, pairs)

    tables = []
    for i, block in enumerate(params.config.gate_layout[1:], 2):
        for j in range(block.targets):
            for k in range(block.sources):
                column = table[:, block.offset + j * block.sources + k]
                tables.append(AttributionTable(Edge(i, k, j), _rank(pairs, column, n)))
    return tables


def top_pairs_per_module(params, pairs, n):
    """Pairs with the largest sum of outgoing gates for each hidden module"""

    _require_gates(params)
    pairs = [ConceptPair(*p) for p in pairs]
    _check_count(n, len(pairs))
    table = gate_table(params, pairs)

    tables = []
    layout = params.config.gate_layout
    for i in range(1, params.config.layers):
        block = layout[i]
        outgoing = table[:, block.offset : block.offset + block.sources * block.targets]
        outgoing = outgoing.reshape(len(pairs), block.targets, block.sources).sum(axis=1)
        for k in range(block.sources):
            tables.append(
                AttributionTable(Module(i, k), _rank(pairs, outgoing[:, k], n))
            )
    return tables


def topology_graph(params, pair, tolerance=0.03, per_destination=True):
    """Edges whose gate is within ``tolerance`` of the largest gate entering
    the same destination module (or of the largest in the layer)"""

    _require_gates(params)
    if not 0 < tolerance < 1:
        raise ContractError(f"tolerance {tolerance} outside (0, 1)")
    gates = gate(params, pair)

    edges = []
    for i in range(1, params.config.layers + 1):
        g = gates.layer(i)
        if per_destination:
            limit = (1 - tolerance) * g.max(axis=0, keepdims=True)
        else:
            limit = np.full((1, g.shape[1]), (1 - tolerance) * g.max())
        for j in range(g.shape[1]):
            for k in range(g.shape[0]):
                if g[k, j] >= limit[0, j]:
                    edges.append(WeightedEdge(i, k, j, float(g[k, j])))
    return TopologyGraph(ConceptPair(*pair), edges, tolerance, per_destination)


def topology_overlap(a, b):
    """Edges kept in both graphs"""

    def edges(graph):
        return {Edge(e.layer, e.source, e.target) for e in graph.edges}

    return sorted(edges(a) & edges(b))


def retrieve(params, pair, samples, n):
    """Ids of the n samples scoring highest for ``pair``, earliest first on ties"""

    _check_count(n, len(samples))
    scores = score_array(params, samples.features, [pair])[:, 0]
    ids = samples.ids
    return [ids[i] for i in np.argsort(-scores, kind="stable")[:n]]


def precision_at(ranked_ids, samples, pair, n=None):
    """Fraction of the first n retrieved samples labeled ``pair``"""

    pair = ConceptPair(*pair)
    ranked_ids = ranked_ids[:n] if n is not None else ranked_ids
    if not ranked_ids:
        raise ContractError("nothing retrieved")
    labels = dict(zip(samples.ids, samples.labels))
    return sum(labels[i] == pair for i in ranked_ids) / len(ranked_ids)


def export_representations(path, params, samples, pairs, which):
    """Writes gatings (one row per pair), features or scores (one row per
    sample and pair) as TSV and returns the number of rows written"""

    if which not in EXPORTS:
        raise ContractError(f"unknown export '{which}', expected one of {', '.join(EXPORTS)}")
    pairs = [ConceptPair(*p) for p in pairs]
    vocab = params.vocab

    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        if which == "gatings":
            _require_gates(params)
            table = gate_table(params, pairs)
            columns = "\t".join(f"g{i}" for i in range(table.shape[1]))
            f.write(f"object\tattribute\t{columns}\n")
            for pair, row in zip(pairs, table):
                obj, attr = vocab.names(pair)
                f.write("\t".join([obj, attr] + [format_float(v) for v in row]) + "\n")
            logger.info("Exported the gatings of %i pairs to %s", len(pairs), path)
            return len(pairs)

        if which == "features":
            values = feature_table(params, samples.features, pairs)
            names = [f"f{i}" for i in range(values.shape[1])]
        else:
            values = score_array(params, samples.features, pairs).reshape(-1, 1)
            names = ["score"]

        f.write("sample_id\tobject\tattribute\tvalid\t" + "\t".join(names) + "\n")
        rows = 0
        for sample in samples:
            for pair in pairs:
                obj, attr = vocab.names(pair)
                valid = "1" if pair == sample.label else "0"
                cells = [sample.sample_id, obj, attr, valid]
                f.write("\t".join(cells + [format_float(v) for v in values[rows]]) + "\n")
                rows += 1

    logger.info("Exported %i %s rows to %s", rows, which, path)
    return rows


def write_edge_list(path, graph):
    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        f.write("layer\tsrc\tdst\tweight\n")
        for edge in graph.edges:
            f.write(f"{edge.layer}\t{edge.source}\t{edge.target}\t{format_float(edge.weight)}\n")


def write_attribution(path, tables, vocab):
    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        if tables and isinstance(tables[0].unit, Edge):
            f.write("layer\tsrc\tdst\trank\tobject\tattribute\tstrength\n")
        else:
            f.write("layer\tmodule\trank\tobject\tattribute\tstrength\n")
        for table in tables:
            unit = "\t".join(str(v) for v in table.unit)
            for rank, (pair, strength) in enumerate(table.ranking, 1):
                obj, attr = vocab.names(pair)
                f.write(f"{unit}\t{rank}\t{obj}\t{attr}\t{format_float(strength)}\n")
