# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import numpy as np

from ..exceptions import DimensionError, NumericError

DTYPE = np.float64


class Tensor:
    """Immutable rank 0, 1 or 2 array of 64-bit floats.

    Values are copied on construction and the underlying buffer is marked
    read-only, so a tensor can be shared freely between threads.
    """

    __slots__ = ("__values",)

    def __init__(self, values):
        if isinstance(values, Tensor):
            values = values.values

        arr = np.array(values, dtype=DTYPE)
        if arr.ndim > 2:
            raise DimensionError("tensor", f"rank {arr.ndim} is not supported")
        if not np.all(np.isfinite(arr)):
            raise NumericError("tensor")

        arr.setflags(write=False)
        self.__values = arr

    values = property(lambda self: self.__values)
    shape = property(lambda self: self.__values.shape)
    ndim = property(lambda self: self.__values.ndim)
    size = property(lambda self: self.__values.size)

    def as_matrix(self):
        """Returns the values as a 2-D array, vectors becoming single rows"""
        return as_matrix(self.__values)

    def item(self):
        if self.size != 1:
            raise DimensionError("tensor", f"shape {self.shape} is not a scalar")
        return float(self.__values.reshape(-1)[0])

    def tolist(self):
        return self.__values.tolist()

    def __len__(self):
        return len(self.__values)

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.shape, self.__values.tobytes()))

    def __repr__(self):
        return f"Tensor({self.__values.tolist()!r})"


def as_array(values):
    if isinstance(values, Tensor):
        return values.values
    return np.asarray(values, dtype=DTYPE)


def as_matrix(values):
    arr = as_array(values)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim == 2:
        return arr
    raise DimensionError("tensor", f"rank {arr.ndim} is not supported")
