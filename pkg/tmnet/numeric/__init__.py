# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

from .adam import AdamState, adam_step
from .gradcheck import finite_diff_check
from .tape import GradTape, Gradients, Var, backward_grad, forward_eval
from .tensor import Tensor, as_array, as_matrix

__all__ = [
    "AdamState",
    "GradTape",
    "Gradients",
    "Tensor",
    "Var",
    "adam_step",
    "as_array",
    "as_matrix",
    "backward_grad",
    "finite_diff_check",
    "forward_eval",
]
