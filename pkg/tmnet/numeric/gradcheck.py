# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import logging
import numpy as np

from .tape import backward_grad, forward_eval
from ..exceptions import ContractError

logger = logging.getLogger(__name__)


def finite_diff_check(graph, inputs, h=1e-5):
    """Compares reverse-mode gradients with central differences.

    Returns the largest ``|analytic - numeric| / max(1, |analytic|)`` over
    every entry of every leaf. The tape is replayed on perturbed leaves rather
    than rebuilt, so ``graph`` is evaluated only once.
    """

    if not 1e-7 <= h <= 1e-3:
        raise ContractError(f"finite difference step {h} outside [1e-7, 1e-3]")

    out, tape = forward_eval(graph, inputs)
    if out.size != 1:
        raise ContractError(f"graph output of shape {out.shape} is not a scalar")
    grads = backward_grad(tape)

    worst = 0.0
    for position, index in enumerate(tape.leaves):
        base = tape.node(index).value
        analytic = grads.at(position).reshape(base.shape)

        for entry in np.ndindex(base.shape):
            bumped = base.copy()
            bumped[entry] += h
            upper = tape.replay({position: bumped})[0, 0]
            bumped[entry] -= 2 * h
            lower = tape.replay({position: bumped})[0, 0]

            numeric = (upper - lower) / (2 * h)
            error = abs(analytic[entry] - numeric) / max(1.0, abs(analytic[entry]))
            worst = max(worst, error)

    logger.debug("Gradient check over %i leaves: %g", len(tape.leaves), worst)
    return worst
