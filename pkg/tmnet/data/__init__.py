# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

from .dataset import SPLITS, ConceptPair, Dataset, Sample, SampleSet, SplitSpec, Vocab
from .embeddings import load_embeddings
from .synthetic import SynthConfig, generate_synthetic
from .tsv import (
    PUBLISHED_COUNTS,
    check_profile,
    format_float,
    load_dataset,
    load_features,
    load_splits,
    save_dataset,
    save_features,
    save_splits,
)

__all__ = [
    "SPLITS",
    "PUBLISHED_COUNTS",
    "ConceptPair",
    "Dataset",
    "Sample",
    "SampleSet",
    "SplitSpec",
    "SynthConfig",
    "Vocab",
    "check_profile",
    "format_float",
    "generate_synthetic",
    "load_dataset",
    "load_embeddings",
    "load_features",
    "load_splits",
    "save_dataset",
    "save_features",
    "save_splits",
]
