# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import numpy as np
import unittest

from tmnet.data import ConceptPair
from tmnet.exceptions import ContractError, DimensionError, VocabularyError
from tmnet.model import (
    GatingSet,
    baseline_labelembed_score,
    dense_equivalent,
    features,
    gate,
    gate_table,
    init_params,
    modular_forward,
    score,
    score_array,
    score_matrix,
    variant_no_joint_score,
    variant_task_agnostic_score,
)

from ..testbase import all_pairs, random_features, tiny_config, tiny_params, tiny_vocab


def relu(x):
    return np.maximum(x, 0.0)


class GatingTestCase(unittest.TestCase):
    def test_simplex(self):
        pairs = all_pairs(tiny_vocab())
        for draw in range(1000):
            params = tiny_params(seed=draw, layers=3, modules=(3, 4))
            gates = gate(params, pairs[draw % len(pairs)])
            for g in gates.layers:
                self.assertTrue(np.all(g > 0))
                np.testing.assert_allclose(g.sum(axis=0), 1, rtol=0, atol=1e-9)
            np.testing.assert_array_equal(gates.layer(1), np.ones((1, 3)))

    def test_hand_softmax(self):
        params = tiny_params(modules=2, gating_hidden=1)
        q1, q2 = 0.3, -1.2
        params = params.replace(
            {
                "gating.hidden.weight": np.zeros((1, 6)),
                "gating.hidden.bias": np.ones(1),
                "gating.output.weight": np.array([[0.0], [0.0], [q1], [q2]]),
                "gating.output.bias": np.zeros(4),
            }
        )
        g = gate(params, ConceptPair(1, 1)).layer(2)[:, 0]
        total = np.exp(q1) + np.exp(q2)
        np.testing.assert_allclose(g, [np.exp(q1) / total, np.exp(q2) / total], rtol=1e-12)

    def test_layout(self):
        params = tiny_params(layers=3, modules=(2, 3))
        gates = gate(params, ConceptPair(0, 0))
        self.assertEqual(len(gates), 3)
        self.assertEqual([g.shape for g in gates.layers], [(1, 2), (2, 3), (3, 1)])
        self.assertEqual(gates.flat.size, params.config.gate_size)

        rebuilt = GatingSet.from_layers(params.config, gates.layers)
        np.testing.assert_array_equal(rebuilt.flat, gates.flat)

        table = gate_table(params, [ConceptPair(0, 0), ConceptPair(2, 1)])
        np.testing.assert_allclose(table[0], gates.flat, rtol=0, atol=1e-12)

    def test_bad_pair(self):
        with self.assertRaises(VocabularyError):
            gate(tiny_params(), ConceptPair(3, 0))

    def test_layer_range(self):
        gates = gate(tiny_params(), ConceptPair(0, 0))
        with self.assertRaises(ContractError):
            gates.layer(0)
        with self.assertRaises(ContractError):
            gates.layer(3)


class ModularForwardTestCase(unittest.TestCase):
    def test_single_module_is_mlp(self):
        params = tiny_params(layers=3, modules=1)
        x = random_features(1, 4)
        gates = gate(params, ConceptPair(0, 1))

        h = relu(x @ params["layer1.weight"].T + params["layer1.bias"])
        h = relu(h @ params["layer2.weight"].T + params["layer2.bias"])
        h = relu(h @ params["layer3.weight"].T + params["layer3.bias"])
        np.testing.assert_allclose(modular_forward(params, x, gates).values, h, rtol=1e-12)

        expected = h @ params["projection.weight"].T + params["projection.bias"]
        self.assertAlmostEqual(score(params, x, ConceptPair(0, 1)), expected[0, 0], places=12)

    def test_one_hot_selection(self):
        params = tiny_params(layers=2, modules=2)
        x = random_features(1, 4, seed=3)
        layers = [np.ones((1, 2)), np.array([[0.0], [1.0]])]
        out = modular_forward(params, x, GatingSet.from_layers(params.config, layers))

        o1 = relu(x @ params["layer1.weight"].T + params["layer1.bias"])[:, 2:4]
        expected = relu(o1 @ params["layer2.weight"].T + params["layer2.bias"])
        np.testing.assert_allclose(out.values, expected, rtol=1e-12)

    def test_dense_equivalent_by_hand(self):
        params = tiny_params(layers=3, modules=2, module_dim=1)
        params = params.replace({"layer2.weight": np.array([[2.0], [3.0]])})
        layers = [np.ones((1, 2)), np.full((2, 2), 0.5), np.full((2, 1), 0.5)]
        dense, bias = dense_equivalent(params, GatingSet.from_layers(params.config, layers), 2)
        np.testing.assert_array_equal(dense, [[1.0, 1.0], [1.5, 1.5]])
        np.testing.assert_array_equal(bias, params["layer2.bias"])

    def test_dense_path(self):
        rng = np.random.default_rng(5)
        for seed in range(100):
            params = tiny_params(seed=seed, layers=3, modules=(3, 2))
            gates = GatingSet.from_layers(
                params.config,
                [
                    rng.dirichlet(np.ones(block.sources), block.targets).T
                    for block in params.config.gate_layout
                ],
            )
            x = rng.normal(size=(1, 4))

            o = x[0]
            for i in range(1, 4):
                dense, bias = dense_equivalent(params, gates, i)
                o = relu(dense @ o + bias)
            np.testing.assert_allclose(
                modular_forward(params, x, gates).values[0], o, rtol=0, atol=1e-6
            )

    def test_image_only(self):
        params = tiny_params("ablation_a")
        gates = gate(params, ConceptPair(0, 0))
        with self.assertRaises(ContractError):
            modular_forward(params, random_features(1, 4), gates)
        with self.assertRaises(ContractError):
            dense_equivalent(params, gates, 1)

    def test_wrong_width(self):
        params = tiny_params()
        with self.assertRaises(DimensionError):
            score(params, random_features(1, 5), ConceptPair(0, 0))


class ScoreTestCase(unittest.TestCase):
    def test_hand_arithmetic(self):
        params = tiny_params(layers=1, modules=(), feature_dim=2, module_dim=2)
        params = params.replace(
            {
                "layer1.weight": np.array([[1.0, 0.0], [0.0, -1.0]]),
                "layer1.bias": np.array([0.0, 0.5]),
                "projection.weight": np.array([[3.0, 1.0]]),
                "projection.bias": np.array([0.25]),
            }
        )
        # relu([2, -0.5]) = [2, 0], 3 * 2 + 0.25
        self.assertEqual(score(params, [2.0, 1.0], ConceptPair(1, 0)), 6.25)

    def test_zero_projection(self):
        for kind in ("tmn", "ablation_a"):
            params = tiny_params(kind)
            params = params.replace(
                {"projection.weight": np.zeros((1, 2)), "projection.bias": np.zeros(1)}
            )
            scores = score_array(params, random_features(3, 4), all_pairs(tiny_vocab()))
            np.testing.assert_array_equal(scores, 0)

    def test_score_matrix(self):
        params = tiny_params(layers=3, modules=(3, 2))
        x = random_features(4, 4, seed=1)
        pairs = all_pairs(tiny_vocab())
        scores = score_array(params, x, pairs)
        self.assertEqual(scores.shape, (4, 6))
        for i in range(4):
            for j, pair in enumerate(pairs):
                self.assertAlmostEqual(scores[i, j], score(params, x[i], pair), places=12)

        single = score_array(params, x[:1], pairs[:1])
        self.assertEqual(single.shape, (1, 1))
        self.assertAlmostEqual(single[0, 0], scores[0, 0], places=12)

    def test_gate_caching(self):
        vocab = tiny_vocab()
        pairs = all_pairs(vocab)
        for kind in ("tmn", "ablation_a", "ablation_b", "labelembed"):
            params = tiny_params(kind, layers=3, modules=(2, 3))
            x = random_features(5, 4, seed=2)
            cached = score_array(params, x, pairs)
            uncached = score_array(params, x, pairs, cache_gates=False)
            np.testing.assert_allclose(cached, uncached, rtol=0, atol=1e-12)

    def test_score_matrix_samples(self):
        from tmnet.data import SampleSet

        params = tiny_params()
        pairs = all_pairs(tiny_vocab())
        samples = SampleSet(["a", "b"], random_features(2, 4), [pairs[0], pairs[3]])
        matrix = score_matrix(params, samples, pairs, [False] * 4 + [True] * 2)
        self.assertEqual(matrix.shape, (2, 6))
        self.assertEqual(matrix.targets.tolist(), [0, 3])
        self.assertEqual(matrix.ids, ["a", "b"])

    def test_empty(self):
        params = tiny_params()
        with self.assertRaises(ContractError):
            score_array(params, random_features(2, 4), [])
        with self.assertRaises(ContractError):
            score_array(params, np.zeros((0, 4)), [ConceptPair(0, 0)])

    def test_module_permutation(self):
        params = tiny_params(layers=2, modules=3)
        perm = np.array([2, 0, 1])
        d = params.config.module_dim
        rows = (perm[:, None] * d + np.arange(d)).reshape(-1)

        # layer 2 gate logits sit after the 3 layer 1 logits, edge k -> 0 at 3 + k
        logits = np.concatenate([np.arange(3), 3 + perm])
        permuted = params.replace(
            {
                "layer1.weight": params["layer1.weight"][rows],
                "layer1.bias": params["layer1.bias"][rows],
                "gating.output.weight": params["gating.output.weight"][logits],
                "gating.output.bias": params["gating.output.bias"][logits],
            }
        )
        x = random_features(3, 4, seed=9)
        pairs = all_pairs(tiny_vocab())
        np.testing.assert_allclose(
            score_array(permuted, x, pairs), score_array(params, x, pairs), rtol=0, atol=1e-12
        )


class VariantsTestCase(unittest.TestCase):
    def test_task_agnostic_shared_gates(self):
        params = tiny_params("ablation_a", layers=3, modules=(2, 2))
        table = gate_table(params, all_pairs(tiny_vocab()))
        for row in table[1:]:
            np.testing.assert_array_equal(row, table[0])

    def test_task_agnostic_hand(self):
        params = tiny_params(
            "ablation_a", layers=1, modules=(), feature_dim=1, module_dim=1, embedding_dim=1
        )
        params = params.replace(
            {
                "object_embedding": np.array([[1.0], [2.0], [3.0]]),
                "attribute_embedding": np.array([[0.5], [-1.0]]),
                "layer1.weight": np.array([[2.0]]),
                "layer1.bias": np.array([0.5]),
                "layer1.pair_weight": np.array([[1.0, 4.0]]),
                "projection.weight": np.array([[2.0]]),
                "projection.bias": np.array([1.0]),
            }
        )
        # relu(2 * 1.5 + 0.5 + 1 * 2 + 4 * 0.5) = 7.5, 2 * 7.5 + 1
        self.assertEqual(variant_task_agnostic_score(params, [1.5], ConceptPair(1, 0)), 16.0)

    def test_no_joint_features(self):
        params = tiny_params("ablation_b", layers=3, modules=(3, 2))
        x = random_features(1, 4, seed=4)
        np.testing.assert_array_equal(
            features(params, x, ConceptPair(0, 0)), features(params, x, ConceptPair(2, 1))
        )

    def test_no_joint_hand(self):
        params = tiny_params(
            "ablation_b", layers=1, modules=(), feature_dim=1, module_dim=2, embedding_dim=1
        )
        params = params.replace(
            {
                "object_embedding": np.array([[1.0], [0.0], [0.0]]),
                "attribute_embedding": np.array([[2.0], [0.0]]),
                "layer1.weight": np.array([[1.0], [-1.0]]),
                "layer1.bias": np.array([0.0, 0.0]),
                "pair_projection.weight": np.array([[1.0, 1.0], [5.0, 5.0]]),
                "pair_projection.bias": np.array([0.0, 0.0]),
            }
        )
        # image feature relu([2, -2]) = [2, 0], pair side [3, 15]
        self.assertEqual(variant_no_joint_score(params, [2.0], ConceptPair(0, 0)), 6.0)
        self.assertEqual(variant_no_joint_score(params, [-2.0], ConceptPair(0, 0)), 30.0)

        # image feature orthogonal to the pair side
        params = params.replace({"pair_projection.weight": np.array([[0.0, 0.0], [1.0, 1.0]])})
        self.assertEqual(variant_no_joint_score(params, [2.0], ConceptPair(0, 0)), 0.0)

    def test_labelembed_bilinear(self):
        params = tiny_params("labelembed")
        x = random_features(1, 4, seed=6)
        pair = ConceptPair(1, 1)
        base = baseline_labelembed_score(params, x, pair)
        scaled = params.replace(
            {
                "pair_mlp.output.weight": 2.5 * params["pair_mlp.output.weight"],
                "pair_mlp.output.bias": 2.5 * params["pair_mlp.output.bias"],
            }
        )
        self.assertAlmostEqual(baseline_labelembed_score(scaled, x, pair), 2.5 * base, places=12)

        zero = params.replace(
            {
                "image_mlp.output.weight": np.zeros((2, 5)),
                "image_mlp.output.bias": np.zeros(2),
            }
        )
        self.assertEqual(baseline_labelembed_score(zero, x, pair), 0.0)

    def test_labelembed_has_no_gates(self):
        params = tiny_params("labelembed")
        with self.assertRaises(ContractError):
            gate(params, ConceptPair(0, 0))

    def test_kind_checks(self):
        params = tiny_params()
        x = random_features(1, 4)
        for func in (
            variant_task_agnostic_score,
            variant_no_joint_score,
            baseline_labelembed_score,
        ):
            with self.assertRaises(ContractError):
                func(params, x, ConceptPair(0, 0))


if __name__ == "__main__":
    unittest.main()
