# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import numpy as np

from collections import namedtuple

from ..exceptions import FormatError, VocabularyError

SPLITS = ("train", "val", "test")

ConceptPair = namedtuple("ConceptPair", ["object_id", "attribute_id"])
Sample = namedtuple("Sample", ["sample_id", "features", "label"])
Dataset = namedtuple("Dataset", ["vocab", "samples", "splits"])


class Vocab:
    """Ordered object and attribute names, ids being list positions"""

    def __init__(self, objects, attributes):
        self.__objects = list(objects)
        self.__attributes = list(attributes)
        self.__object_ids = {n: i for i, n in enumerate(self.__objects)}
        self.__attribute_ids = {n: i for i, n in enumerate(self.__attributes)}

        if len(self.__object_ids) != len(self.__objects):
            raise FormatError("Duplicate object names")
        if len(self.__attribute_ids) != len(self.__attributes):
            raise FormatError("Duplicate attribute names")

    objects = property(lambda self: list(self.__objects))
    attributes = property(lambda self: list(self.__attributes))
    num_objects = property(lambda self: len(self.__objects))
    num_attributes = property(lambda self: len(self.__attributes))

    @classmethod
    def first_appearance(cls, named_pairs):
        """Builds a vocabulary from (object, attribute) names in order of first use"""

        objects, attributes = {}, {}
        for obj, attr in named_pairs:
            objects.setdefault(obj, None)
            attributes.setdefault(attr, None)
        return cls(objects, attributes)

    def pair(self, obj, attr):
        try:
            return ConceptPair(self.__object_ids[obj], self.__attribute_ids[attr])
        except KeyError as e:
            raise VocabularyError(f"Unknown name {e.args[0]!r}") from e

    def names(self, pair):
        self.check(pair)
        return self.__objects[pair.object_id], self.__attributes[pair.attribute_id]

    def label(self, pair):
        return "{1} {0}".format(*self.names(pair))

    def check(self, pair):
        if not 0 <= pair.object_id < len(self.__objects):
            raise VocabularyError(f"Object id {pair.object_id} out of range")
        if not 0 <= pair.attribute_id < len(self.__attributes):
            raise VocabularyError(f"Attribute id {pair.attribute_id} out of range")

    def __eq__(self, other):
        if not isinstance(other, Vocab):
            return NotImplemented
        return self.objects == other.objects and self.attributes == other.attributes

    def __repr__(self):
        return f"Vocab({self.num_objects} objects, {self.num_attributes} attributes)"


class SampleSet:
    """Samples of one split, features stacked in a read-only matrix"""

    def __init__(self, ids, features, labels):
        features = np.array(features, dtype=np.float64)
        if features.ndim == 1 and not len(ids):
            features = features.reshape(0, 0)
        if features.ndim != 2 or features.shape[0] != len(ids) or len(labels) != len(ids):
            raise FormatError("Sample ids, features and labels do not line up")
        features.setflags(write=False)

        self.__ids = list(ids)
        self.__features = features
        self.__labels = [ConceptPair(*label) for label in labels]

    ids = property(lambda self: list(self.__ids))
    features = property(lambda self: self.__features)
    labels = property(lambda self: list(self.__labels))
    dim = property(lambda self: self.__features.shape[1])

    def __len__(self):
        return len(self.__ids)

    def __getitem__(self, index):
        return Sample(self.__ids[index], self.__features[index], self.__labels[index])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def subset(self, indices):
        indices = list(indices)
        return SampleSet(
            [self.__ids[i] for i in indices],
            self.__features[indices].reshape(len(indices), self.__features.shape[1]),
            [self.__labels[i] for i in indices],
        )

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (
            self.__ids == other.ids
            and self.__labels == other.labels
            and np.array_equal(self.__features, other.features)
        )


class SplitSpec:
    """Pair lists of the train, validation and test splits.

    Evaluation splits hold ``(pair, unseen)`` entries, the training split only
    seen pairs.
    """

    def __init__(self, train, val, test):
        self.__train = [ConceptPair(*p) for p in train]
        self.__eval = {
            "val": [(ConceptPair(*p), bool(u)) for p, u in val],
            "test": [(ConceptPair(*p), bool(u)) for p, u in test],
        }

    train_pairs = property(lambda self: list(self.__train))
    val_pairs = property(lambda self: list(self.__eval["val"]))
    test_pairs = property(lambda self: list(self.__eval["test"]))

    def pairs(self, split):
        if split == "train":
            return list(self.__train)
        return [p for p, _ in self.__entries(split)]

    def unseen_pairs(self, split):
        return [p for p, u in self.__entries(split) if u]

    def seen_pairs(self, split):
        return [p for p, u in self.__entries(split) if not u]

    def __entries(self, split):
        try:
            return self.__eval[split]
        except KeyError:
            raise ValueError(f"Unknown evaluation split '{split}'")

    def candidates(self, split):
        """Pairs scored at test time: training pairs followed by the split's
        unseen pairs, with the matching unseen mask"""

        pairs = list(self.__train)
        known = set(pairs)
        for p in self.unseen_pairs(split):
            if p not in known:
                pairs.append(p)
                known.add(p)
        mask = np.array([i >= len(self.__train) for i in range(len(pairs))])
        return pairs, mask

    def counts(self):
        return {
            "train": len(self.__train),
            "val_seen": len(self.seen_pairs("val")),
            "val_unseen": len(self.unseen_pairs("val")),
            "test_seen": len(self.seen_pairs("test")),
            "test_unseen": len(self.unseen_pairs("test")),
        }

    def validate(self, vocab):
        """Checks the zero-shot split invariants, raising FormatError"""

        train = set(self.__train)
        if len(train) != len(self.__train):
            raise FormatError("Duplicate pair in the train split")
        for p in self.__train:
            vocab.check(p)

        for split, entries in self.__eval.items():
            if len({p for p, _ in entries}) != len(entries):
                raise FormatError(f"Duplicate pair in the {split} split")
            for p, unseen in entries:
                vocab.check(p)
                if unseen and p in train:
                    raise FormatError(
                        "Pair '{}' is flagged unseen in {} but is a train pair".format(
                            vocab.label(p), split
                        )
                    )
                if not unseen and p not in train:
                    raise FormatError(
                        "Pair '{}' is flagged seen in {} but is not a train pair".format(
                            vocab.label(p), split
                        )
                    )

        objects = {p.object_id for p in train}
        attributes = {p.attribute_id for p in train}
        missing = [n for i, n in enumerate(vocab.objects) if i not in objects]
        missing += [n for i, n in enumerate(vocab.attributes) if i not in attributes]
        if missing:
            raise FormatError(
                "Not covered by any train pair: " + ", ".join(sorted(missing))
            )

    def __eq__(self, other):
        if not isinstance(other, SplitSpec):
            return NotImplemented
        return (
            self.train_pairs == other.train_pairs
            and self.val_pairs == other.val_pairs
            and self.test_pairs == other.test_pairs
        )
