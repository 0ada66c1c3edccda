# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import numpy as np
import os.path
import struct
import unittest

from tmnet.data import Vocab
from tmnet.exceptions import ConfigError, ContractError, FormatError
from tmnet.model import (
    MODEL_KINDS,
    ModelParams,
    ModularNetConfig,
    get_network,
    init_params,
    load_checkpoint,
    save_checkpoint,
)

from ..testbase import TempDirTestCase, tiny_config, tiny_params, tiny_vocab


class InitParamsTestCase(unittest.TestCase):
    def test_deterministic(self):
        for kind in MODEL_KINDS:
            self.assertEqual(tiny_params(kind, seed=3), tiny_params(kind, seed=3))
            self.assertNotEqual(tiny_params(kind, seed=3), tiny_params(kind, seed=4))

    def test_uniform_bound(self):
        config = ModularNetConfig(layers=3, modules=4, module_dim=16, feature_dim=8)
        params = init_params(config, tiny_vocab(), 0)
        bound = np.sqrt(6 / 32)
        self.assertAlmostEqual(bound, 0.433, places=3)
        weight = params["layer2.weight"]
        self.assertTrue(np.all(np.abs(weight) < bound))
        self.assertGreater(np.abs(weight).max(), 0.9 * bound)
        np.testing.assert_array_equal(params["layer2.bias"], 0)

    def test_embeddings(self):
        config = tiny_config()
        vocab = tiny_vocab()
        table = {name: np.full(3, i, dtype=float) for i, name in enumerate(vocab.objects)}
        table.update({name: np.full(3, -i, dtype=float) for i, name in enumerate(vocab.attributes)})
        params = init_params(config, vocab, 0, embeddings=table)
        np.testing.assert_array_equal(params["object_embedding"], [[0] * 3, [1] * 3, [2] * 3])
        np.testing.assert_array_equal(params["attribute_embedding"], [[0] * 3, [-1] * 3])

    def test_partial_embeddings(self):
        params = init_params(tiny_config(), tiny_vocab(), 0, embeddings={"dog": np.ones(3)})
        np.testing.assert_array_equal(params["object_embedding"][1], 1)
        self.assertFalse(np.all(params["object_embedding"][0] == 1))

    def test_embedding_dimension(self):
        with self.assertRaises(FormatError):
            init_params(tiny_config(), tiny_vocab(), 0, embeddings={"cat": np.ones(4)})

    def test_unknown_kind(self):
        with self.assertRaises(ConfigError):
            init_params(tiny_config(), tiny_vocab(), 0, "resnet")
        with self.assertRaises(ConfigError):
            get_network("resnet")

    def test_groups(self):
        params = tiny_params()
        self.assertIn("gating.hidden.weight", params.group("gating"))
        self.assertIn("object_embedding", params.group("gating"))
        self.assertIn("layer1.weight", params.group("feature"))
        self.assertEqual(
            sorted(params.group("gating") + params.group("feature")), sorted(params.names)
        )
        self.assertIn("object_embedding", tiny_params("labelembed").group("feature"))


class ModelParamsTestCase(unittest.TestCase):
    def test_read_only(self):
        params = tiny_params()
        with self.assertRaises(ValueError):
            params["layer1.bias"][0] = 1.0

    def test_validation(self):
        params = tiny_params()
        arrays = params.arrays()
        del arrays["projection.bias"]
        with self.assertRaises(ContractError):
            ModelParams("tmn", params.config, params.vocab, arrays)

        arrays = params.arrays()
        arrays["projection.bias"] = np.zeros(2)
        with self.assertRaises(ContractError):
            ModelParams("tmn", params.config, params.vocab, arrays)

    def test_replace(self):
        params = tiny_params()
        other = params.replace({"projection.bias": np.ones(1)})
        self.assertEqual(other["projection.bias"].tolist(), [1.0])
        self.assertEqual(params["projection.bias"].tolist(), [0.0])
        self.assertEqual(other.names, params.names)
        self.assertEqual(len(other), len(params))


class CheckpointTestCase(TempDirTestCase):
    def test_round_trip(self):
        for kind in MODEL_KINDS:
            params = tiny_params(kind, seed=2, layers=3, modules=(2, 3))
            path = os.path.join(self.dir, kind)
            save_checkpoint(path, params)
            loaded = load_checkpoint(path)
            self.assertEqual(loaded, params)
            self.assertEqual(loaded.config.modules, (2, 3))

            again = path + ".again"
            save_checkpoint(again, loaded)
            with open(path, "rb") as a, open(again, "rb") as b:
                self.assertEqual(a.read(), b.read())

    def test_names_with_spaces(self):
        vocab = Vocab(["tea pot", "car"], ["old", "half full"])
        params = init_params(tiny_config(), vocab, 0)
        path = os.path.join(self.dir, "ckpt")
        save_checkpoint(path, params)
        self.assertEqual(load_checkpoint(path).vocab, vocab)

    def __write(self, data):
        path = os.path.join(self.dir, "broken")
        with open(path, "wb") as f:
            f.write(data)
        return path

    def test_invalid_files(self):
        path = os.path.join(self.dir, "ckpt")
        save_checkpoint(path, tiny_params())
        with open(path, "rb") as f:
            data = f.read()

        broken = [
            b"",
            b"XXXX" + data[4:],
            data[:6],
            data[:-8],
            data + b"\0" * 8,
            data[:8] + data[8:].replace(b"kind = tmn", b"kind = xyz"),
        ]
        for content in broken:
            with self.assertRaises(FormatError):
                load_checkpoint(self.__write(content))

    def test_bad_header(self):
        header = b"[model]\nkind = tmn\n"
        with self.assertRaises(FormatError):
            load_checkpoint(self.__write(b"TMN1" + struct.pack("<I", len(header)) + header))


if __name__ == "__main__":
    unittest.main()
