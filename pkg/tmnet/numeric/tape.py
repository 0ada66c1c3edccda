# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

import numpy as np

from .ops import PRIMITIVES
from .tensor import DTYPE, Tensor, as_matrix
from ..exceptions import ContractError, NumericError


class Var:
    """Handle on a value recorded by a tape"""

    __slots__ = ("tape", "index", "value")

    def __init__(self, tape, index, value):
        self.tape = tape
        self.index = index
        self.value = value

    shape = property(lambda self: self.value.shape)

    @property
    def tensor(self):
        return Tensor(self.value)

    def __add__(self, other):
        return self.tape.add(self, other)

    def __sub__(self, other):
        return self.tape.sub(self, other)

    def __mul__(self, other):
        return self.tape.mul(self, other)

    def __repr__(self):
        return f"Var(#{self.index}, shape={self.shape})"


class _Node:
    __slots__ = ("op", "inputs", "attrs", "value", "ctx", "requires_grad", "name", "shape")

    def __init__(self, op, inputs, attrs, value, ctx, requires_grad, name=None, shape=None):
        self.op = op
        self.inputs = inputs
        self.attrs = attrs
        self.value = value
        self.ctx = ctx
        self.requires_grad = requires_grad
        self.name = name
        self.shape = shape


class Gradients(dict):
    """Leaf name -> gradient mapping. Unnamed leaves are keyed by position."""

    def __init__(self, tape, adjoints):
        super().__init__()
        self.__by_index = {}
        self.__ordered = []
        for position, index in enumerate(tape.leaves):
            node = tape.node(index)
            grad = adjoints[index]
            if grad is None:
                grad = np.zeros(node.value.shape, dtype=DTYPE)
            grad = grad.reshape(node.shape)
            self.__by_index[index] = grad
            self.__ordered.append(grad)
            self[node.name if node.name is not None else position] = grad

    def of(self, var):
        return self.__by_index[var.index]

    def at(self, position):
        return self.__ordered[position]


class GradTape:
    """Records primitive operations in evaluation order for reverse mode.

    With ``record=False`` the tape only evaluates: nothing is kept and no
    gradient can be requested, which is how scoring runs outside training.
    """

    def __init__(self, record=True):
        self.__record = record
        self.__nodes = []
        self.__leaves = []

    recording = property(lambda self: self.__record)
    leaves = property(lambda self: list(self.__leaves))

    def __len__(self):
        return len(self.__nodes)

    def node(self, index):
        return self.__nodes[index]

    def __push(self, node):
        if not self.__record:
            return Var(self, None, node.value)
        self.__nodes.append(node)
        return Var(self, len(self.__nodes) - 1, node.value)

    def __input(self, value, requires_grad, name):
        if isinstance(value, Var):
            return value

        arr = as_array_copy(value)
        shape = arr.shape
        arr = as_matrix(arr)
        if not np.all(np.isfinite(arr)):
            raise NumericError("input" if name is None else name)

        var = self.__push(_Node(None, (), None, arr, None, requires_grad, name, shape))
        if requires_grad and var.index is not None:
            self.__leaves.append(var.index)
        return var

    def leaf(self, value, name=None):
        """Records a differentiable input"""
        return self.__input(value, True, name)

    def constant(self, value):
        return self.__input(value, False, None)

    def apply(self, name, *inputs, **attrs):
        op = PRIMITIVES[name]
        inputs = [x if isinstance(x, Var) else self.constant(x) for x in inputs]
        for x in inputs:
            if x.tape is not self:
                raise ContractError(f"{name}: input recorded on another tape")

        value, ctx = op.forward([x.value for x in inputs], attrs)
        if not np.all(np.isfinite(value)):
            raise NumericError(name)

        requires_grad = self.__record and any(
            self.__nodes[x.index].requires_grad for x in inputs
        )
        return self.__push(
            _Node(op, tuple(x.index for x in inputs), attrs, value, ctx, requires_grad)
        )

    def affine(self, x, w, b):
        return self.apply("affine", x, w, b)

    def relu(self, x):
        return self.apply("relu", x)

    def concat(self, *xs):
        return self.apply("concat", *xs)

    def scale(self, s, x):
        return self.apply("scale", s, x)

    def add(self, a, b):
        return self.apply("add", a, b)

    def sub(self, a, b):
        return self.apply("sub", a, b)

    def mul(self, a, b):
        return self.apply("mul", a, b)

    def sum(self, x):
        return self.apply("sum", x)

    def mean(self, x):
        return self.apply("mean", x)

    def reshape(self, x, rows, cols):
        return self.apply("reshape", x, shape=(rows, cols))

    def columns(self, x, start, stop):
        return self.apply("columns", x, start=start, stop=stop)

    def column_softmax(self, x):
        return self.apply("column_softmax", x)

    def segment_softmax(self, x, size):
        return self.apply("segment_softmax", x, size=size)

    def logsumexp(self, x, mask=None):
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
        return self.apply("logsumexp", x, mask=mask)

    def take_rows(self, x, index):
        return self.apply("take_rows", x, index=np.asarray(index, dtype=np.intp))

    def pick(self, x, index):
        return self.apply("pick", x, index=np.asarray(index, dtype=np.intp))

    def row_dot(self, a, b):
        return self.apply("row_dot", a, b)

    def gated_sum(self, o, g, sources, targets, index=None):
        if index is not None:
            index = np.asarray(index, dtype=np.intp)
        return self.apply(
            "gated_sum", o, g, sources=sources, targets=targets, index=index
        )

    def block_affine(self, x, w, b, modules):
        return self.apply("block_affine", x, w, b, modules=modules)

    def backward(self, root, seed=1.0):
        """Reverse pass from a scalar ``root``, returns a :class:`Gradients`"""

        if not self.__record or root.index is None:
            raise ContractError("backward: the tape did not record any operation")
        if root.value.shape != (1, 1):
            raise ContractError(f"backward: root of shape {root.shape} is not a scalar")

        adjoints = [None] * len(self.__nodes)
        for index, node in enumerate(self.__nodes[: root.index + 1]):
            if node.requires_grad:
                adjoints[index] = np.zeros_like(node.value)
        if adjoints[root.index] is None:
            return Gradients(self, adjoints)

        adjoints[root.index] += seed
        for index in range(root.index, -1, -1):
            node = self.__nodes[index]
            if node.op is None or adjoints[index] is None:
                continue

            values = [self.__nodes[i].value for i in node.inputs]
            grads = node.op.backward(
                adjoints[index], values, node.value, node.ctx, node.attrs
            )
            for i, grad in zip(node.inputs, grads):
                if grad is not None and adjoints[i] is not None:
                    adjoints[i] += grad

        return Gradients(self, adjoints)

    def replay(self, leaves=None):
        """Re-evaluates the recorded operations.

        ``leaves`` optionally maps leaf positions or names to new values; the
        value of the last recorded node is returned. Replaying with the
        original leaves reproduces every recorded value bit for bit.
        """

        overrides = {}
        for key, value in (leaves or {}).items():
            overrides[self.__leaf_index(key)] = as_matrix(np.asarray(value, dtype=DTYPE))

        values = []
        for index, node in enumerate(self.__nodes):
            if node.op is None:
                value = overrides.get(index, node.value)
                if value.shape != node.value.shape:
                    raise ContractError(
                        f"replay: leaf #{index} shape {value.shape} != {node.value.shape}"
                    )
            else:
                value, _ = node.op.forward([values[i] for i in node.inputs], node.attrs)
            values.append(value)
        return values[-1] if values else None

    def __leaf_index(self, key):
        if isinstance(key, Var):
            return key.index
        if isinstance(key, int):
            return self.__leaves[key]
        for index in self.__leaves:
            if self.__nodes[index].name == key:
                return index
        raise KeyError(key)


def as_array_copy(value):
    if isinstance(value, Tensor):
        return value.values
    return np.array(value, dtype=DTYPE)


def forward_eval(graph, inputs):
    """Evaluates ``graph(tape, *leaves)`` on a fresh recording tape.

    ``inputs`` is a list of values (or a name -> value mapping) turned into
    differentiable leaves. Returns the output tensor and the tape.
    """

    tape = GradTape()
    if isinstance(inputs, dict):
        leaves = [tape.leaf(value, name) for name, value in inputs.items()]
    else:
        leaves = [tape.leaf(value) for value in inputs]
    out = graph(tape, *leaves)
    return Tensor(out.value), tape


def backward_grad(tape, seed=1.0):
    """Gradients of the last recorded value with respect to every leaf"""

    if not len(tape):
        raise ContractError("backward: empty tape")
    root = Var(tape, len(tape) - 1, tape.node(len(tape) - 1).value)
    return tape.backward(root, seed)
