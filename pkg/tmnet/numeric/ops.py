# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

"""Primitive operations recorded by :class:`~tmnet.numeric.tape.GradTape`.

Every primitive works on 2-D float64 arrays where rows are independent
samples. ``forward`` returns the output and a context object kept on the tape,
``backward`` maps the output adjoint to one adjoint per input (``None`` for
inputs that are not differentiable).
"""

import numpy as np

from collections import namedtuple

from ..exceptions import DimensionError

PRIMITIVES = {}


def primitive(cls):
    PRIMITIVES[cls.name] = cls()
    return cls


class Primitive:
    name = None

    def check(self, condition, message):
        if not condition:
            raise DimensionError(self.name, message)

    def forward(self, inputs, attrs):
        raise NotImplementedError()

    def backward(self, grad, inputs, out, ctx, attrs):
        raise NotImplementedError()


@primitive
class Affine(Primitive):
    """``x @ w.T + b`` for a batch of row vectors"""

    name = "affine"

    def forward(self, inputs, attrs):
        x, w, b = inputs
        self.check(
            x.shape[1] == w.shape[1],
            f"input width {x.shape[1]} does not match weight {w.shape}",
        )
        self.check(
            b.shape == (1, w.shape[0]),
            f"bias shape {b.shape} does not match weight {w.shape}",
        )
        return x @ w.T + b, None

    def backward(self, grad, inputs, out, ctx, attrs):
        x, w, _ = inputs
        return grad @ w, grad.T @ x, grad.sum(axis=0, keepdims=True)


@primitive
class ReLU(Primitive):
    name = "relu"

    def forward(self, inputs, attrs):
        (x,) = inputs
        return np.maximum(x, 0.0), None

    def backward(self, grad, inputs, out, ctx, attrs):
        (x,) = inputs
        # subgradient at 0 is 0
        return (grad * (x > 0.0),)


@primitive
class Concat(Primitive):
    """Column-wise concatenation"""

    name = "concat"

    def forward(self, inputs, attrs):
        rows = {x.shape[0] for x in inputs}
        self.check(len(rows) == 1, f"row counts differ: {sorted(rows)}")
        return np.concatenate(inputs, axis=1), None

    def backward(self, grad, inputs, out, ctx, attrs):
        bounds = np.cumsum([x.shape[1] for x in inputs])[:-1]
        return tuple(np.split(grad, bounds, axis=1))


@primitive
class Scale(Primitive):
    """Scalar-vector product, one scalar per row or one for the whole input"""

    name = "scale"

    def forward(self, inputs, attrs):
        s, x = inputs
        self.check(
            s.shape == (1, 1) or s.shape == (x.shape[0], 1),
            f"scale shape {s.shape} incompatible with {x.shape}",
        )
        return s * x, None

    def backward(self, grad, inputs, out, ctx, attrs):
        s, x = inputs
        ds = (grad * x).sum(axis=1, keepdims=True)
        if s.shape == (1, 1):
            ds = ds.sum(axis=0, keepdims=True)
        return ds, s * grad


class _Elementwise(Primitive):
    def forward(self, inputs, attrs):
        a, b = inputs
        self.check(a.shape == b.shape, f"shapes differ: {a.shape} and {b.shape}")
        return self.compute(a, b), None


@primitive
class Add(_Elementwise):
    name = "add"
    compute = staticmethod(np.add)

    def backward(self, grad, inputs, out, ctx, attrs):
        return grad, grad


@primitive
class Sub(_Elementwise):
    name = "sub"
    compute = staticmethod(np.subtract)

    def backward(self, grad, inputs, out, ctx, attrs):
        return grad, -grad


@primitive
class Mul(_Elementwise):
    name = "mul"
    compute = staticmethod(np.multiply)

    def backward(self, grad, inputs, out, ctx, attrs):
        a, b = inputs
        return grad * b, grad * a


@primitive
class Sum(Primitive):
    name = "sum"

    def forward(self, inputs, attrs):
        (x,) = inputs
        return x.sum().reshape(1, 1), None

    def backward(self, grad, inputs, out, ctx, attrs):
        (x,) = inputs
        return (np.full_like(x, grad[0, 0]),)


@primitive
class Mean(Primitive):
    name = "mean"

    def forward(self, inputs, attrs):
        (x,) = inputs
        self.check(x.size > 0, "empty input")
        return x.mean().reshape(1, 1), None

    def backward(self, grad, inputs, out, ctx, attrs):
        (x,) = inputs
        return (np.full_like(x, grad[0, 0] / x.size),)


@primitive
class Reshape(Primitive):
    name = "reshape"

    def forward(self, inputs, attrs):
        (x,) = inputs
        shape = tuple(attrs["shape"])
        self.check(
            len(shape) == 2 and shape[0] * shape[1] == x.size,
            f"cannot reshape {x.shape} into {shape}",
        )
        return x.reshape(shape), None

    def backward(self, grad, inputs, out, ctx, attrs):
        (x,) = inputs
        return (grad.reshape(x.shape),)


@primitive
class Columns(Primitive):
    """Column range ``start:stop``"""

    name = "columns"

    def forward(self, inputs, attrs):
        (x,) = inputs
        start, stop = attrs["start"], attrs["stop"]
        self.check(
            0 <= start < stop <= x.shape[1],
            f"range {start}:{stop} outside {x.shape[1]} columns",
        )
        return x[:, start:stop], None

    def backward(self, grad, inputs, out, ctx, attrs):
        (x,) = inputs
        dx = np.zeros_like(x)
        dx[:, attrs["start"] : attrs["stop"]] = grad
        return (dx,)


@primitive
class ColumnSoftmax(Primitive):
    """Softmax down each column: every column of the output sums to one"""

    name = "column_softmax"

    def forward(self, inputs, attrs):
        (x,) = inputs
        e = np.exp(x - x.max(axis=0, keepdims=True))
        return e / e.sum(axis=0, keepdims=True), None

    def backward(self, grad, inputs, out, ctx, attrs):
        return (out * (grad - (grad * out).sum(axis=0, keepdims=True)),)


@primitive
class SegmentSoftmax(Primitive):
    """Row-wise softmax over contiguous groups of ``size`` columns"""

    name = "segment_softmax"

    def forward(self, inputs, attrs):
        (x,) = inputs
        size = attrs["size"]
        self.check(
            size >= 1 and x.shape[1] % size == 0,
            f"width {x.shape[1]} is not a multiple of {size}",
        )
        x3 = x.reshape(x.shape[0], -1, size)
        e = np.exp(x3 - x3.max(axis=2, keepdims=True))
        return (e / e.sum(axis=2, keepdims=True)).reshape(x.shape), None

    def backward(self, grad, inputs, out, ctx, attrs):
        size = attrs["size"]
        n = grad.shape[0]
        g3 = grad.reshape(n, -1, size)
        o3 = out.reshape(n, -1, size)
        dx = o3 * (g3 - (g3 * o3).sum(axis=2, keepdims=True))
        return (dx.reshape(grad.shape),)


@primitive
class LogSumExp(Primitive):
    """Row-wise log-sum-exp, optionally restricted to masked-in entries"""

    name = "logsumexp"

    def forward(self, inputs, attrs):
        (x,) = inputs
        mask = attrs.get("mask")
        if mask is None:
            mask = np.ones(x.shape, dtype=bool)
        self.check(mask.shape == x.shape, f"mask shape {mask.shape} != {x.shape}")
        self.check(mask.any(axis=1).all(), "a row has no entry")

        m = np.where(mask, x, -np.inf).max(axis=1, keepdims=True)
        e = np.where(mask, np.exp(np.where(mask, x, m) - m), 0.0)
        total = e.sum(axis=1, keepdims=True)
        return m + np.log(total), e / total

    def backward(self, grad, inputs, out, ctx, attrs):
        return (grad * ctx,)


@primitive
class TakeRows(Primitive):
    """Gathers rows by index, gradients are scattered back with summation"""

    name = "take_rows"

    def forward(self, inputs, attrs):
        (x,) = inputs
        index = attrs["index"]
        self.check(index.ndim == 1, "index must be one-dimensional")
        if index.size:
            self.check(
                index.min() >= 0 and index.max() < x.shape[0],
                f"index out of range for {x.shape[0]} rows",
            )
        return x[index], None

    def backward(self, grad, inputs, out, ctx, attrs):
        (x,) = inputs
        index = attrs["index"]
        dx = np.zeros_like(x)
        if index.size:
            order = np.argsort(index, kind="stable")
            rows, starts = np.unique(index[order], return_index=True)
            dx[rows] = np.add.reduceat(grad[order], starts, axis=0)
        return (dx,)


@primitive
class Pick(Primitive):
    """Picks one column per row: ``out[n] = x[n, index[n]]``"""

    name = "pick"

    def forward(self, inputs, attrs):
        (x,) = inputs
        index = attrs["index"]
        self.check(index.shape == (x.shape[0],), "one index per row is required")
        self.check(
            index.min() >= 0 and index.max() < x.shape[1],
            f"index out of range for {x.shape[1]} columns",
        )
        return x[np.arange(x.shape[0]), index].reshape(-1, 1), None

    def backward(self, grad, inputs, out, ctx, attrs):
        (x,) = inputs
        dx = np.zeros_like(x)
        dx[np.arange(x.shape[0]), attrs["index"]] = grad[:, 0]
        return (dx,)


@primitive
class RowDot(Primitive):
    name = "row_dot"

    def forward(self, inputs, attrs):
        a, b = inputs
        self.check(a.shape == b.shape, f"shapes differ: {a.shape} and {b.shape}")
        return (a * b).sum(axis=1, keepdims=True), None

    def backward(self, grad, inputs, out, ctx, attrs):
        a, b = inputs
        return grad * b, grad * a


GateBlocks = namedtuple("GateBlocks", ["values", "block", "slot", "width"])


def _gate_blocks(index):
    """Lays rows sharing a gate index side by side: row ``t`` goes to
    ``block[t]``, the position of ``index[t]`` in ``values``, at ``slot[t]``
    among the ``width`` slots of that block"""

    order = np.argsort(index, kind="stable")
    values, starts, counts = np.unique(
        index[order], return_index=True, return_counts=True
    )
    block = np.empty(len(index), dtype=np.intp)
    slot = np.empty(len(index), dtype=np.intp)
    block[order] = np.repeat(np.arange(len(values)), counts)
    slot[order] = np.arange(len(order)) - np.repeat(starts, counts)
    return GateBlocks(values, block, slot, int(counts.max()) if counts.size else 0)


def _scatter_blocks(x3, blocks):
    # (rows, c, d) -> (blocks, c, width * d), zeros in unused slots
    stacked = np.zeros((len(blocks.values), x3.shape[1], blocks.width, x3.shape[2]))
    stacked[blocks.block, :, blocks.slot] = x3
    width = blocks.width * x3.shape[2]
    return stacked.reshape(len(blocks.values), x3.shape[1], width)


def _gather_blocks(stacked, blocks, d):
    stacked = stacked.reshape(stacked.shape[0], stacked.shape[1], blocks.width, d)
    return stacked[blocks.block, :, blocks.slot]


@primitive
class GatedSum(Primitive):
    """Weighted sum of module outputs feeding each destination module.

    ``o`` holds the outputs of ``sources`` modules side by side (n rows of
    ``sources * d`` values). ``g`` holds gates in destination-major layout:
    ``g[r, j * sources + k]`` is the weight of the edge k -> j. The gate row
    used by sample row ``t`` is ``t`` itself, the only row of ``g``, or
    ``index[t]`` when an index is given.
    """

    name = "gated_sum"

    def forward(self, inputs, attrs):
        o, g = inputs
        sources, targets = attrs["sources"], attrs["targets"]
        index = attrs.get("index")
        n = o.shape[0]

        self.check(o.shape[1] % sources == 0, f"width {o.shape[1]} / {sources}")
        self.check(
            g.shape[1] == sources * targets,
            f"gate width {g.shape[1]} != {sources} x {targets}",
        )
        if index is None:
            self.check(
                g.shape[0] in (1, n), f"{g.shape[0]} gate rows for {n} inputs"
            )
        else:
            self.check(index.shape == (n,), "one gate index per row is required")
            if n:
                self.check(
                    index.min() >= 0 and index.max() < g.shape[0],
                    f"gate index out of range for {g.shape[0]} rows",
                )

        o3 = o.reshape(n, sources, -1)
        g3 = g.reshape(g.shape[0], targets, sources)
        d = o3.shape[2]
        if index is None and g.shape[0] == 1 and n != 1:
            # one gate matrix for every row: a single product over all rows
            flat = o3.transpose(1, 0, 2).reshape(sources, -1)
            out = (g3[0] @ flat).reshape(targets, n, d).transpose(1, 0, 2)
            return out.reshape(n, -1), None
        if index is None:
            return np.matmul(g3, o3).reshape(n, -1), None

        blocks = _gate_blocks(index)
        stacked = _scatter_blocks(o3, blocks)
        out = _gather_blocks(np.matmul(g3[blocks.values], stacked), blocks, d)
        return out.reshape(n, -1), (blocks, stacked)

    def backward(self, grad, inputs, out, ctx, attrs):
        o, g = inputs
        sources, targets = attrs["sources"], attrs["targets"]
        n = o.shape[0]

        o3 = o.reshape(n, sources, -1)
        g3 = g.reshape(g.shape[0], targets, sources)
        d3 = grad.reshape(n, targets, -1)

        d = o3.shape[2]
        if ctx is not None:
            blocks, stacked = ctx
            dstacked = _scatter_blocks(d3, blocks)
            gates = g3[blocks.values]
            do = _gather_blocks(
                np.matmul(gates.transpose(0, 2, 1), dstacked), blocks, d
            )
            dg = np.zeros_like(g3)
            dg[blocks.values] = np.matmul(dstacked, stacked.transpose(0, 2, 1))
        elif g.shape[0] == 1 and n != 1:
            flat = o3.transpose(1, 0, 2).reshape(sources, -1)
            dflat = d3.transpose(1, 0, 2).reshape(targets, -1)
            do = (g3[0].T @ dflat).reshape(sources, n, d).transpose(1, 0, 2)
            dg = (dflat @ flat.T)[None]
        else:
            do = np.matmul(g3.transpose(0, 2, 1), d3)
            dg = np.matmul(d3, o3.transpose(0, 2, 1))
        return do.reshape(o.shape), dg.reshape(g.shape)


@primitive
class BlockAffine(Primitive):
    """Applies one affine map per module to its own slice of the input.

    ``x`` is ``modules`` slices of width ``i`` side by side, ``w`` stacks the
    module weights vertically (``modules * o`` rows of ``i`` values) and ``b``
    the module biases.
    """

    name = "block_affine"

    def forward(self, inputs, attrs):
        x, w, b = inputs
        modules = attrs["modules"]
        n = x.shape[0]

        self.check(x.shape[1] % modules == 0, f"width {x.shape[1]} / {modules}")
        width_in = x.shape[1] // modules
        self.check(
            w.shape[0] % modules == 0 and w.shape[1] == width_in,
            f"weight {w.shape} incompatible with {modules} modules of width {width_in}",
        )
        self.check(b.shape == (1, w.shape[0]), f"bias shape {b.shape}")

        x3 = x.reshape(n, modules, width_in).transpose(1, 0, 2)
        w3 = w.reshape(modules, -1, width_in)
        out = np.matmul(x3, w3.transpose(0, 2, 1)).transpose(1, 0, 2)
        return out.reshape(n, -1) + b, None

    def backward(self, grad, inputs, out, ctx, attrs):
        x, w, _ = inputs
        modules = attrs["modules"]
        n = x.shape[0]
        width_in = x.shape[1] // modules

        x3 = x.reshape(n, modules, width_in).transpose(1, 0, 2)
        w3 = w.reshape(modules, -1, width_in)
        d3 = grad.reshape(n, modules, -1).transpose(1, 0, 2)

        dx = np.matmul(d3, w3).transpose(1, 0, 2).reshape(x.shape)
        dw = np.matmul(d3.transpose(0, 2, 1), x3).reshape(w.shape)
        return dx, dw, grad.sum(axis=0, keepdims=True)
