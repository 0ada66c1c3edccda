# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import filecmp
import numpy as np
import os
import os.path
import unittest

from tmnet.data import (
    ConceptPair,
    SampleSet,
    SplitSpec,
    Vocab,
    check_profile,
    load_dataset,
    load_features,
    load_splits,
    save_dataset,
    save_splits,
)
from tmnet.exceptions import FormatError

from ..testbase import TempDirTestCase, tiny_dataset

SPLITS = """\
train\tseen\tcat\tred
train\tseen\tdog\told
train\tseen\tcat\told
val\tseen\tcat\tred
val\tunseen\tdog\tred
test\tseen\tdog\told
test\tunseen\tdog\tred
"""


def profile_splits(objects, attributes, counts):
    """Splits with the given pair counts, every pair visited diagonal by
    diagonal so that the first ones cover the whole vocabulary"""

    train, val_seen, val_unseen, test_seen, test_unseen = counts
    pairs = [
        ConceptPair(o, (o + shift) % attributes)
        for shift in range(attributes)
        for o in range(objects)
    ]
    seen, unseen = pairs[:train], pairs[train:]
    vocab = Vocab([f"o{i}" for i in range(objects)], [f"a{i}" for i in range(attributes)])
    splits = SplitSpec(
        seen,
        [(p, False) for p in seen[:val_seen]] + [(p, True) for p in unseen[:val_unseen]],
        [(p, False) for p in seen[:test_seen]]
        + [(p, True) for p in unseen[val_unseen : val_unseen + test_unseen]],
    )
    return vocab, splits


class SplitsTestCase(TempDirTestCase):
    def write(self, content, name="splits.tsv"):
        path = os.path.join(self.dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(content)
        return path

    def test_load(self):
        vocab, splits = load_splits(self.write(SPLITS))
        self.assertEqual(vocab.objects, ["cat", "dog"])
        self.assertEqual(vocab.attributes, ["red", "old"])
        self.assertEqual(splits.train_pairs, [(0, 0), (1, 1), (0, 1)])
        self.assertEqual(splits.unseen_pairs("test"), [(1, 0)])
        self.assertEqual(splits.seen_pairs("val"), [(0, 0)])

        pairs, mask = splits.candidates("test")
        self.assertEqual(pairs, [(0, 0), (1, 1), (0, 1), (1, 0)])
        self.assertEqual(mask.tolist(), [False, False, False, True])

    def test_declared_order(self):
        content = "#objects\tdog\tcat\n#attributes\told\tred\n" + SPLITS
        vocab, splits = load_splits(self.write(content))
        self.assertEqual(vocab.objects, ["dog", "cat"])
        self.assertEqual(vocab.attributes, ["old", "red"])
        self.assertEqual(splits.train_pairs[0], vocab.pair("cat", "red"))

        with self.assertRaises(FormatError):
            load_splits(self.write("#objects\tdog\tcat\tcar\n" + SPLITS))

    def test_round_trip(self):
        path = self.write(SPLITS)
        vocab, splits = load_splits(path)
        copy = os.path.join(self.dir, "copy.tsv")
        save_splits(copy, vocab, splits)
        self.assertEqual(load_splits(copy), (vocab, splits))

        again = os.path.join(self.dir, "again.tsv")
        save_splits(again, *load_splits(copy))
        self.assertTrue(filecmp.cmp(copy, again, shallow=False))

    def test_malformed(self):
        cases = {
            "train\tseen\tcat\n": 1,
            "train\tseen\tcat\tred\nholdout\tseen\tcat\tred\n": 2,
            "train\tseen\tcat\tred\nval\tmaybe\tcat\tred\n": 2,
            "train\tunseen\tcat\tred\n": 1,
            "train\tseen\tcat\tred\ntrain\tseen\tcat\tred\n": 2,
            "train\tseen\tcat\tred\nval\tunseen\tcat\tred\n": 2,
            "train\tseen\tcat\tred\nval\tseen\tcat\tred\nval\tseen\tdog\tred\n": 3,
            "train\tseen\t\tred\n": 1,
        }
        for content, line in cases.items():
            with self.subTest(content=content):
                with self.assertRaises(FormatError) as cm:
                    load_splits(self.write(content))
                self.assertEqual(cm.exception.line, line)

    def test_uncovered_primitive(self):
        content = "train\tseen\tcat\tred\ntest\tunseen\tdog\told\n"
        with self.assertRaises(FormatError) as cm:
            load_splits(self.write(content))
        self.assertIn("dog", str(cm.exception))


class ProfileTestCase(TempDirTestCase):
    def check(self, name, objects, attributes, counts):
        vocab, splits = profile_splits(objects, attributes, counts)
        path = os.path.join(self.dir, name + ".tsv")
        save_splits(path, vocab, splits)
        vocab, splits = load_splits(path)
        check_profile(splits, name, vocab)

    def test_ut_zappos(self):
        self.check("ut-zappos", 12, 16, (83, 15, 15, 18, 18))

    def test_mit_states(self):
        self.check("mit-states", 245, 115, (1262, 300, 300, 400, 400))

    def test_rejected(self):
        vocab, splits = profile_splits(12, 16, (83, 15, 15, 18, 17))
        with self.assertRaises(FormatError):
            check_profile(splits, "ut-zappos")

        vocab, splits = profile_splits(12, 17, (83, 15, 15, 18, 18))
        check_profile(splits, "ut-zappos")
        with self.assertRaises(FormatError):
            check_profile(splits, "ut-zappos", vocab)

        with self.assertRaises(FormatError):
            check_profile(splits, "cub")


class FeaturesTestCase(TempDirTestCase):
    def setUp(self):
        super().setUp()
        with open(os.path.join(self.dir, "splits.tsv"), "w") as f:
            f.write(SPLITS)
        self.vocab, self.splits = load_splits(os.path.join(self.dir, "splits.tsv"))

    def write(self, name, content):
        path = os.path.join(self.dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(content)
        return path

    def test_load(self):
        path = self.write("train.tsv", "#D 2\ns1\tcat\tred\t0.5\t-1\ns2\tdog\told\t1e-3\t2\n")
        samples = load_features(path, self.vocab)
        self.assertEqual(samples.ids, ["s1", "s2"])
        self.assertEqual(samples.labels, [(0, 0), (1, 1)])
        np.testing.assert_array_equal(samples.features, [[0.5, -1.0], [0.001, 2.0]])
        self.assertEqual(samples.dim, 2)

    def test_malformed(self):
        cases = {
            "s1\tcat\tred\t0.5\n": 1,
            "#D x\n": 1,
            "#D 0\n": 1,
            "#D 2\ns1\tcat\tred\t0.5\n": 2,
            "#D 1\ns1\tcat\tblue\t0.5\n": 2,
            "#D 1\ns1\tcat\tred\tnan\n": 2,
            "#D 1\ns1\tcat\tred\tabc\n": 2,
            "#D 1\ns1\tcat\tred\t1\ns1\tcat\tred\t2\n": 3,
            "#D 1\ns1\tdog\tred\t1\n": 2,
        }
        allowed = set(self.splits.train_pairs)
        for content, line in cases.items():
            with self.subTest(content=content):
                with self.assertRaises(FormatError) as cm:
                    load_features(self.write("train.tsv", content), self.vocab, allowed)
                self.assertEqual(cm.exception.line, line)

        with self.assertRaises(FormatError):
            load_features(self.write("empty.tsv", ""), self.vocab)

    def test_dataset(self):
        self.write("train.tsv", "#D 1\na\tcat\tred\t1\n")
        self.write("test.tsv", "#D 1\nb\tdog\tred\t2\n")
        vocab, samples, splits = load_dataset(self.dir)
        self.assertEqual(sorted(samples), ["test", "train"])
        self.assertEqual(samples["test"].labels, [vocab.pair("dog", "red")])

    def test_duplicate_across_files(self):
        self.write("train.tsv", "#D 1\na\tcat\tred\t1\n")
        self.write("test.tsv", "#D 1\na\tdog\tred\t2\n")
        with self.assertRaises(FormatError):
            load_dataset(self.dir)

    def test_dimension_across_files(self):
        self.write("train.tsv", "#D 1\na\tcat\tred\t1\n")
        self.write("val.tsv", "#D 2\nb\tcat\tred\t1\t2\n")
        with self.assertRaises(FormatError):
            load_dataset(self.dir)

    def test_missing_files(self):
        with self.assertRaises(FormatError):
            load_dataset(self.dir)
        os.remove(os.path.join(self.dir, "splits.tsv"))
        with self.assertRaises(FormatError):
            load_dataset(self.dir)


class DatasetRoundTripTestCase(TempDirTestCase):
    def test_byte_identical(self):
        dataset = tiny_dataset(seed=5)
        first = os.path.join(self.dir, "first")
        second = os.path.join(self.dir, "second")
        save_dataset(first, dataset)

        loaded = load_dataset(first)
        self.assertEqual(loaded.vocab, dataset.vocab)
        self.assertEqual(loaded.splits, dataset.splits)
        for split, samples in dataset.samples.items():
            self.assertEqual(loaded.samples[split], samples)

        save_dataset(second, loaded)
        names = sorted(os.listdir(first))
        self.assertEqual(names, ["splits.tsv", "test.tsv", "train.tsv", "val.tsv"])
        match, mismatch, errors = filecmp.cmpfiles(first, second, names, shallow=False)
        self.assertEqual(match, names)

    def test_sample_set(self):
        samples = SampleSet(["a", "b", "c"], np.eye(3), [(0, 0), (0, 1), (1, 0)])
        subset = samples.subset([2, 0])
        self.assertEqual(subset.ids, ["c", "a"])
        self.assertEqual(subset[0].label, (1, 0))
        with self.assertRaises(FormatError):
            SampleSet(["a"], np.eye(2), [(0, 0)])
        with self.assertRaises(ValueError):
            samples.features[0, 0] = 2.0


if __name__ == "__main__":
    unittest.main()
