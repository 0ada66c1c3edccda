# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import numpy as np

from ..exceptions import ContractError, DimensionError


class AdamState:
    """Moment accumulators and hyper-parameters of one Adam parameter group"""

    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if lr <= 0:
            raise ContractError(f"Adam step size must be positive, got {lr}")

        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step = 0
        self.m = {}
        self.v = {}

    def __repr__(self):
        return f"AdamState(lr={self.lr}, step={self.step})"


def adam_step(params, grads, state):
    """One bias-corrected Adam update.

    ``params`` and ``grads`` map names to arrays of identical shapes. New
    parameter arrays are returned; the inputs are left untouched while the
    moments held by ``state`` are updated in place.
    """

    for name, value in params.items():
        if name not in grads:
            raise DimensionError("adam_step", f"no gradient for '{name}'")
        if np.shape(grads[name]) != np.shape(value):
            raise DimensionError(
                "adam_step",
                f"gradient shape {np.shape(grads[name])} != {np.shape(value)} for '{name}'",
            )
        if name in state.m and state.m[name].shape != np.shape(value):
            raise DimensionError("adam_step", f"moment shape mismatch for '{name}'")

    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step

    updated = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        v = state.v[name]

        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        denom = np.sqrt(v / bc2) + state.epsilon
        updated[name] = value - (state.lr / bc1) * m / denom

    return updated, state
