# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

"""Reading and writing datasets as tab separated files.

A dataset directory holds ``splits.tsv`` (``split<TAB>seen|unseen<TAB>object
<TAB>attribute`` rows) and one feature file per split, ``train.tsv``,
``val.tsv`` and ``test.tsv``, each starting with a ``#D <dim>`` header followed
by ``sample_id<TAB>object<TAB>attribute<TAB>v1 ... vD`` rows.
"""

import logging
import numpy as np
import os
import os.path

from .dataset import SPLITS, Dataset, SampleSet, SplitSpec, Vocab
from ..exceptions import FormatError, VocabularyError

logger = logging.getLogger(__name__)

SPLITS_FILE = "splits.tsv"

# train, val seen, val unseen, test seen, test unseen pairs and vocabulary
# sizes as published for the two reference datasets
PUBLISHED_COUNTS = {
    "mit-states": {
        "pairs": (1262, 300, 300, 400, 400),
        "objects": 245,
        "attributes": 115,
    },
    "ut-zappos": {
        "pairs": (83, 15, 15, 18, 18),
        "objects": 12,
        "attributes": 16,
    },
}


def format_float(value):
    return format(float(value), ".17g")


def _rows(path):
    with open(path, "rt", encoding="utf-8", newline="\n") as f:
        for number, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            yield number, line


def load_splits(path):
    """Reads a split file, returns the vocabulary and the validated SplitSpec"""

    rows = []
    declared = {}
    for number, line in _rows(path):
        if line.startswith("#"):
            # "#objects" and "#attributes" lines pin the vocabulary order
            key, _, names = line[1:].partition("\t")
            if key in ("objects", "attributes") and names:
                declared[key] = names.split("\t")
            continue

        fields = line.split("\t")
        if len(fields) != 4:
            raise FormatError(f"Expected 4 fields, got {len(fields)}", path, number)

        split, flag, obj, attr = fields
        if split not in SPLITS:
            raise FormatError(f"Unknown split '{split}'", path, number)
        if flag not in ("seen", "unseen"):
            raise FormatError(f"Expected 'seen' or 'unseen', got '{flag}'", path, number)
        if split == "train" and flag != "seen":
            raise FormatError("Train pairs must be flagged 'seen'", path, number)
        if not obj or not attr:
            raise FormatError("Empty object or attribute name", path, number)
        rows.append((number, split, flag == "unseen", obj, attr))

    vocab = Vocab.first_appearance((obj, attr) for _, _, _, obj, attr in rows)
    if declared:
        objects = declared.get("objects", vocab.objects)
        attributes = declared.get("attributes", vocab.attributes)
        if set(objects) != set(vocab.objects) or set(attributes) != set(
            vocab.attributes
        ):
            raise FormatError("Declared names do not match the listed pairs", path)
        vocab = Vocab(objects, attributes)

    pairs = {s: [] for s in SPLITS}
    lines = {s: {} for s in SPLITS}
    train = set()
    for number, split, unseen, obj, attr in rows:
        pair = vocab.pair(obj, attr)
        if pair in lines[split]:
            raise FormatError(
                f"Pair '{attr} {obj}' listed twice in {split}", path, number
            )
        lines[split][pair] = number
        if split == "train":
            pairs[split].append(pair)
            train.add(pair)
        else:
            pairs[split].append((pair, unseen))

    # Report contradictions with the offending line before the generic checks
    for split in ("val", "test"):
        for pair, unseen in pairs[split]:
            if unseen == (pair in train):
                obj, attr = vocab.names(pair)
                state = "unseen" if unseen else "seen"
                raise FormatError(
                    f"Pair '{attr} {obj}' flagged {state} contradicts the train split",
                    path,
                    lines[split][pair],
                )

    splits = SplitSpec(pairs["train"], pairs["val"], pairs["test"])
    try:
        splits.validate(vocab)
    except FormatError as e:
        raise FormatError(e.message, path) from e

    logger.info(
        "Loaded %i objects, %i attributes and %s pairs from %s",
        vocab.num_objects,
        vocab.num_attributes,
        splits.counts(),
        path,
    )
    return vocab, splits


def load_features(path, vocab, allowed_pairs=None, seen_ids=None):
    """Reads a feature file.

    ``allowed_pairs`` restricts the labels to the pairs of the split the file
    belongs to. ``seen_ids`` is a set of sample ids used to detect duplicates
    across files; it is updated with the ids read.
    """

    if seen_ids is None:
        seen_ids = set()

    dim = None
    ids, features, labels = [], [], []
    for number, line in _rows(path):
        if dim is None:
            if not line.startswith("#D "):
                raise FormatError("Missing '#D <dim>' header", path, number)
            try:
                dim = int(line[3:])
            except ValueError:
                raise FormatError(f"Invalid dimension '{line[3:]}'", path, number)
            if dim < 1:
                raise FormatError(f"Invalid dimension {dim}", path, number)
            continue

        fields = line.split("\t")
        if len(fields) != dim + 3:
            raise FormatError(
                f"Expected {dim} feature values, got {len(fields) - 3}", path, number
            )

        sample_id, obj, attr = fields[:3]
        if sample_id in seen_ids:
            raise FormatError(f"Duplicate sample id '{sample_id}'", path, number)
        try:
            pair = vocab.pair(obj, attr)
        except VocabularyError as e:
            raise FormatError(f"Unknown pair '{attr} {obj}'", path, number) from e
        if allowed_pairs is not None and pair not in allowed_pairs:
            raise FormatError(
                f"Pair '{attr} {obj}' is not part of this split", path, number
            )
        try:
            values = [float(v) for v in fields[3:]]
        except ValueError as e:
            raise FormatError(str(e), path, number) from e
        if not np.all(np.isfinite(values)):
            raise FormatError("Non-finite feature value", path, number)

        seen_ids.add(sample_id)
        ids.append(sample_id)
        features.append(values)
        labels.append(pair)

    if dim is None:
        raise FormatError("Empty feature file", path)

    matrix = np.array(features, dtype=np.float64).reshape(len(ids), dim)
    return SampleSet(ids, matrix, labels)


def load_dataset(features_dir, splits_path=None):
    """Loads a dataset directory, returns ``(vocab, samples, splits)``.

    ``samples`` maps each split name to a :class:`SampleSet`; splits without a
    feature file are left out.
    """

    if splits_path is None:
        splits_path = os.path.join(features_dir, SPLITS_FILE)
    if not os.path.isfile(splits_path):
        raise FormatError("Split file not found", splits_path)

    vocab, splits = load_splits(splits_path)

    samples = {}
    seen_ids = set()
    dim = None
    for split in SPLITS:
        path = os.path.join(features_dir, split + ".tsv")
        if not os.path.isfile(path):
            continue

        allowed = set(splits.pairs(split))
        samples[split] = load_features(path, vocab, allowed, seen_ids)
        if dim is None:
            dim = samples[split].dim
        elif samples[split].dim != dim:
            raise FormatError(
                f"Feature dimension {samples[split].dim} differs from {dim}", path
            )
        logger.info("Loaded %i %s samples", len(samples[split]), split)

    if "train" not in samples:
        raise FormatError("No train.tsv feature file", features_dir)

    return Dataset(vocab, samples, splits)


def save_splits(path, vocab, splits):
    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        f.write("#objects\t" + "\t".join(vocab.objects) + "\n")
        f.write("#attributes\t" + "\t".join(vocab.attributes) + "\n")
        for pair in splits.train_pairs:
            f.write("train\tseen\t{}\t{}\n".format(*vocab.names(pair)))
        for split in ("val", "test"):
            for pair in splits.pairs(split):
                flag = "unseen" if pair in splits.unseen_pairs(split) else "seen"
                f.write("{}\t{}\t{}\t{}\n".format(split, flag, *vocab.names(pair)))


def save_features(path, vocab, samples):
    with open(path, "wt", encoding="utf-8", newline="\n") as f:
        f.write(f"#D {samples.dim}\n")
        for sample in samples:
            obj, attr = vocab.names(sample.label)
            values = "\t".join(format_float(v) for v in sample.features)
            f.write(f"{sample.sample_id}\t{obj}\t{attr}\t{values}\n")


def save_dataset(path, dataset):
    """Writes a dataset directory readable by :func:`load_dataset`"""

    vocab, samples, splits = dataset
    os.makedirs(path, exist_ok=True)
    save_splits(os.path.join(path, SPLITS_FILE), vocab, splits)
    for split in SPLITS:
        if split in samples:
            save_features(os.path.join(path, split + ".tsv"), vocab, samples[split])


def check_profile(splits, name, vocab=None):
    """Checks pair (and optionally vocabulary) counts against a published split"""

    try:
        expected = PUBLISHED_COUNTS[name]
    except KeyError:
        raise FormatError(f"Unknown dataset profile '{name}'")

    counts = splits.counts()
    actual = (
        counts["train"],
        counts["val_seen"],
        counts["val_unseen"],
        counts["test_seen"],
        counts["test_unseen"],
    )
    if actual != expected["pairs"]:
        raise FormatError(
            "{} expects {} train, {}+{} val and {}+{} test pairs, got {}".format(
                name, *expected["pairs"], actual
            )
        )

    if vocab is not None and (vocab.num_objects, vocab.num_attributes) != (
        expected["objects"],
        expected["attributes"],
    ):
        raise FormatError(
            "{} expects {} objects and {} attributes, got {} and {}".format(
                name,
                expected["objects"],
                expected["attributes"],
                vocab.num_objects,
                vocab.num_attributes,
            )
        )
