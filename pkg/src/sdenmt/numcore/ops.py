"""The fixed differentiable op set.

Each op computes its forward value with numpy and records a closure that
scatters the output gradient into its inputs. Shapes are checked up
front and mismatches raise with both shapes in the message; there is no
general broadcasting beyond the documented bias case in `add`.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, is_grad_enabled


def _node(data: np.ndarray, parents: tuple, backward) -> Tensor:
    if is_grad_enabled():
        return Tensor(data, parents, backward)
    return Tensor(data)


def constant(data, dtype=None) -> Tensor:
    """Leaf tensor that takes no gradient of interest."""
    arr = np.asarray(data)
    if dtype is not None:
        arr = arr.astype(dtype)
    return Tensor(arr)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} x {b.data.shape}")
    out_data = a.data @ b.data

    def backward(g):
        a.accumulate_grad(g @ b.data.T)
        b.accumulate_grad(a.data.T @ g)

    return _node(out_data, (a, b), backward)


def bmm(a: Tensor, b: Tensor) -> Tensor:
    """Batched matmul over stacks of matrices: [B,m,k] x [B,k,n] -> [B,m,n]."""
    if (
        a.data.ndim != 3
        or b.data.ndim != 3
        or a.data.shape[0] != b.data.shape[0]
        or a.data.shape[2] != b.data.shape[1]
    ):
        raise ValueError(f"bmm shape mismatch: {a.data.shape} x {b.data.shape}")
    out_data = np.matmul(a.data, b.data)

    def backward(g):
        a.accumulate_grad(np.matmul(g, b.data.transpose(0, 2, 1)))
        b.accumulate_grad(np.matmul(a.data.transpose(0, 2, 1), g))

    return _node(out_data, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; also accepts a 1-D bias broadcast over the last axis."""
    if a.data.shape == b.data.shape:
        out_data = a.data + b.data

        def backward(g):
            a.accumulate_grad(g)
            b.accumulate_grad(g)

    elif b.data.ndim == 1 and a.data.shape[-1:] == b.data.shape:
        out_data = a.data + b.data

        def backward(g):
            a.accumulate_grad(g)
            b.accumulate_grad(g.reshape(-1, g.shape[-1]).sum(axis=0))

    else:
        raise ValueError(f"add shape mismatch: {a.data.shape} + {b.data.shape}")
    return _node(out_data, (a, b), backward)


def add_const(x: Tensor, arr: np.ndarray) -> Tensor:
    """Add a constant array (e.g. an attention mask); gradient passes through."""
    out_data = x.data + arr
    if out_data.shape != x.data.shape:
        raise ValueError(f"add_const must not broadcast: {x.data.shape} + {arr.shape}")

    def backward(g):
        x.accumulate_grad(g)

    return _node(out_data, (x,), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"mul shape mismatch: {a.data.shape} * {b.data.shape}")
    out_data = a.data * b.data

    def backward(g):
        a.accumulate_grad(g * b.data)
        b.accumulate_grad(g * a.data)

    return _node(out_data, (a, b), backward)


def scale(x: Tensor, s: float) -> Tensor:
    out_data = x.data * x.data.dtype.type(s)

    def backward(g):
        x.accumulate_grad(g * x.data.dtype.type(s))

    return _node(out_data, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)

    def backward(g):
        x.accumulate_grad(g * (1.0 - out_data * out_data))

    return _node(out_data, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    out_data = np.empty_like(x.data)
    pos = x.data >= 0
    out_data[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ex = np.exp(x.data[~pos])
    out_data[~pos] = ex / (1.0 + ex)

    def backward(g):
        x.accumulate_grad(g * out_data * (1.0 - out_data))

    return _node(out_data, (x,), backward)


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis, max-subtracted for stability."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * out_data).sum(axis=-1, keepdims=True)
        x.accumulate_grad(out_data * (g - dot))

    return _node(out_data, (x,), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    out_data = x.data.reshape(shape)

    def backward(g):
        x.accumulate_grad(g.reshape(x.data.shape))

    return _node(out_data, (x,), backward)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ValueError(f"transpose expects a matrix, got shape {x.data.shape}")
    out_data = x.data.T

    def backward(g):
        x.accumulate_grad(g.T)

    return _node(out_data, (x,), backward)


def transpose_last2(x: Tensor) -> Tensor:
    if x.data.ndim != 3:
        raise ValueError(f"transpose_last2 expects rank 3, got shape {x.data.shape}")
    out_data = x.data.transpose(0, 2, 1)

    def backward(g):
        x.accumulate_grad(g.transpose(0, 2, 1))

    return _node(out_data, (x,), backward)


def concat_cols(parts: list[Tensor]) -> Tensor:
    if not parts or any(p.data.ndim != 2 for p in parts):
        raise ValueError("concat_cols expects a nonempty list of matrices")
    rows = parts[0].data.shape[0]
    if any(p.data.shape[0] != rows for p in parts):
        raise ValueError(
            f"concat_cols row mismatch: {[p.data.shape for p in parts]}"
        )
    out_data = np.concatenate([p.data for p in parts], axis=1)
    offsets = np.cumsum([0] + [p.data.shape[1] for p in parts])

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.accumulate_grad(g[:, lo:hi])

    return _node(out_data, tuple(parts), backward)


def concat_rows(parts: list[Tensor]) -> Tensor:
    if not parts or any(p.data.ndim != 2 for p in parts):
        raise ValueError("concat_rows expects a nonempty list of matrices")
    cols = parts[0].data.shape[1]
    if any(p.data.shape[1] != cols for p in parts):
        raise ValueError(
            f"concat_rows column mismatch: {[p.data.shape for p in parts]}"
        )
    out_data = np.concatenate([p.data for p in parts], axis=0)
    offsets = np.cumsum([0] + [p.data.shape[0] for p in parts])

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.accumulate_grad(g[lo:hi])

    return _node(out_data, tuple(parts), backward)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2 or not (0 <= start < stop <= x.data.shape[1]):
        raise ValueError(f"bad column slice [{start}:{stop}] of shape {x.data.shape}")
    out_data = x.data[:, start:stop]

    def backward(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[:, start:stop] += g

    return _node(out_data, (x,), backward)


def stack_steps(steps: list[Tensor]) -> Tensor:
    """Stack per-step matrices [B,H] along a new time axis into [B,T,H]."""
    if not steps or any(s.data.ndim != 2 for s in steps):
        raise ValueError("stack_steps expects a nonempty list of matrices")
    if any(s.data.shape != steps[0].data.shape for s in steps):
        raise ValueError(
            f"stack_steps shape mismatch: {[s.data.shape for s in steps]}"
        )
    out_data = np.stack([s.data for s in steps], axis=1)

    def backward(g):
        for t, s in enumerate(steps):
            s.accumulate_grad(g[:, t, :])

    return _node(out_data, tuple(steps), backward)


def pick_steps(x: Tensor, idx: np.ndarray) -> Tensor:
    """Pick one time step per batch row: [B,T,H] with idx[B] -> [B,H]."""
    if x.data.ndim != 3:
        raise ValueError(f"pick_steps expects rank 3, got shape {x.data.shape}")
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(x.data.shape[0])
    out_data = x.data[rows, idx]

    def backward(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        np.add.at(x.grad, (rows, idx), g)

    return _node(out_data, (x,), backward)


def embedding_rows(table: Tensor, bag_or_ids) -> Tensor:
    """Gather table rows by integer ids, or sum them with bag counts.

    `bag_or_ids` is either an integer array of any shape (plain lookup,
    output shape ids.shape + (D,)) or a list of (ids, counts) pairs, one
    per output row (count-weighted row sums, output [N, D]). The
    backward pass scatter-adds into only the referenced rows.
    """
    if isinstance(bag_or_ids, (list, tuple)):
        return _bag_rows(table, bag_or_ids)
    ids = np.asarray(bag_or_ids)
    if not np.issubdtype(ids.dtype, np.integer):
        raise ValueError(f"embedding ids must be integers, got {ids.dtype}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise IndexError(
            f"embedding id out of range [0, {table.data.shape[0]}): "
            f"[{ids.min()}, {ids.max()}]"
        )
    out_data = table.data[ids]

    def backward(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids.reshape(-1), g.reshape(-1, table.data.shape[1]))

    return _node(out_data, (table,), backward)


def _bag_rows(table: Tensor, bags) -> Tensor:
    num_rows = len(bags)
    dim = table.data.shape[1]
    row_idx = []
    flat_ids = []
    flat_counts = []
    for n, (ids, counts) in enumerate(bags):
        ids = np.asarray(ids, dtype=np.int64)
        counts = np.asarray(counts, dtype=table.data.dtype)
        if ids.shape != counts.shape or ids.ndim != 1:
            raise ValueError("each bag needs parallel 1-D ids and counts")
        if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
            raise IndexError(
                f"bag id out of range [0, {table.data.shape[0]}) in row {n}"
            )
        row_idx.append(np.full(ids.shape, n, dtype=np.int64))
        flat_ids.append(ids)
        flat_counts.append(counts)
    row_idx = np.concatenate(row_idx) if row_idx else np.zeros(0, np.int64)
    flat_ids = np.concatenate(flat_ids) if flat_ids else np.zeros(0, np.int64)
    flat_counts = (
        np.concatenate(flat_counts) if flat_counts else np.zeros(0, table.data.dtype)
    )
    out_data = np.zeros((num_rows, dim), dtype=table.data.dtype)
    np.add.at(out_data, row_idx, flat_counts[:, None] * table.data[flat_ids])

    def backward(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, flat_ids, flat_counts[:, None] * g[row_idx])

    return _node(out_data, (table,), backward)


def dropout(x: Tensor, rate: float, rng, train: bool) -> Tensor:
    """Inverted dropout: keep with prob 1-rate and rescale; identity in eval."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    keep = (rng.random(x.data.shape) >= rate).astype(x.data.dtype)
    keep *= x.data.dtype.type(1.0 / (1.0 - rate))
    out_data = x.data * keep

    def backward(g):
        x.accumulate_grad(g * keep)

    return _node(out_data, (x,), backward)


def cross_entropy(logits: Tensor, target_ids, ignore_id: int | None = None) -> Tensor:
    """Mean negative log-likelihood over non-ignored targets. Scalar output."""
    if logits.data.ndim != 2:
        raise ValueError(f"cross_entropy expects [N,V] logits, got {logits.data.shape}")
    targets = np.asarray(target_ids, dtype=np.int64)
    n, vocab = logits.data.shape
    if targets.shape != (n,):
        raise ValueError(f"target shape {targets.shape} does not match logits rows {n}")
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise IndexError(
            f"target id out of range [0, {vocab}): [{targets.min()}, {targets.max()}]"
        )
    mask = np.ones(n, dtype=bool) if ignore_id is None else targets != ignore_id
    n_valid = int(mask.sum())
    if n_valid == 0:
        raise ValueError("cross_entropy: every target is ignored")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_probs = z - log_norm
    rows = np.arange(n)
    nll = -log_probs[rows, targets]
    out_data = np.asarray(nll[mask].mean(), dtype=logits.data.dtype)

    def backward(g):
        grad = np.exp(log_probs)
        grad[rows, targets] -= 1.0
        grad[~mask] = 0.0
        grad *= np.asarray(g, dtype=logits.data.dtype) / n_valid
        logits.accumulate_grad(grad)

    return _node(out_data, (logits,), backward)


def sum_all(x: Tensor) -> Tensor:
    out_data = np.asarray(x.data.sum(), dtype=x.data.dtype)

    def backward(g):
        x.accumulate_grad(np.broadcast_to(g, x.data.shape).astype(x.data.dtype))

    return _node(out_data, (x,), backward)
