# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import filecmp
import os.path
import time
import unittest

from tmnet.cli import run
from tmnet.data import SynthConfig, generate_synthetic
from tmnet.evaluation import auc, calibration_sweep, closed_world_accuracy, score_split
from tmnet.model import ModularNetConfig, init_params
from tmnet.training import TrainConfig, fit

from ..testbase import TempDirTestCase, TestConfig


def train_on(dataset, kind, seed):
    net = ModularNetConfig(feature_dim=dataset.samples["train"].dim)
    params = init_params(net, dataset.vocab, seed, kind)
    best, _ = fit(kind, params, dataset, TrainConfig(seed=seed))
    return best


class ZeroShotTestCase(unittest.TestCase):
    def test_closed_world(self):
        dataset = generate_synthetic(SynthConfig(seed=1))
        self.assertEqual(len(dataset.splits.unseen_pairs("test")), 60)

        started = time.monotonic()
        best = train_on(dataset, "tmn", 1)
        self.assertLess(time.monotonic() - started, 300)
        accuracy = closed_world_accuracy(score_split(best, dataset, "test"))
        self.assertGreaterEqual(accuracy, 10 / 60)


class AblationTestCase(unittest.TestCase):
    def test_ordering(self):
        kinds = ("tmn", "ablation_a", "ablation_b")
        totals = dict.fromkeys(kinds, 0.0)
        started = time.monotonic()
        for seed in (1, 2, 3):
            dataset = generate_synthetic(SynthConfig(seed=seed))
            for kind in kinds:
                best = train_on(dataset, kind, seed)
                totals[kind] += auc(calibration_sweep(score_split(best, dataset, "val"), 1))
        self.assertLess(time.monotonic() - started, 1200)

        self.assertGreater(totals["tmn"], totals["ablation_a"])
        self.assertGreater(totals["tmn"], totals["ablation_b"])
        self.assertGreater(totals["ablation_a"], totals["ablation_b"])


class DeterminismTestCase(TempDirTestCase):
    def __pipeline(self, name):
        base = os.path.join(self.dir, name)
        data, model, metrics = (os.path.join(base, d) for d in ("data", "model", "eval"))
        for argv in (
            ["synth", "-o", data, "--seed", "5"],
            ["train", "-d", data, "-o", model, "--epochs", "3", "--concept-drop", "0.2"],
            ["eval", "--ckpt", os.path.join(model, "best"), "-d", data, "-o", metrics],
        ):
            self.assertEqual(run(argv, TestConfig()), 0)
        return base

    def test_identical_runs(self):
        a = self.__pipeline("a")
        b = self.__pipeline("b")
        for name in (
            "data/splits.tsv",
            "data/train.tsv",
            "data/test.tsv",
            "model/best",
            "model/last",
            "model/epochs.tsv",
            "eval/summary.tsv",
            "eval/curve_k1.tsv",
            "eval/curve_k3.tsv",
        ):
            self.assertTrue(
                filecmp.cmp(os.path.join(a, name), os.path.join(b, name), shallow=False),
                name,
            )


if __name__ == "__main__":
    unittest.main()
