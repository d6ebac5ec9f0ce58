"""Reverse-mode tape over dense numpy arrays.

Every differentiable value is a `Tensor` holding a numpy array plus an
optional backward closure that scatters gradients into its parents. The
graph is built eagerly by the op functions in `ops.py`; calling
`Tensor.backward()` on a scalar walks the tape once in reverse
topological order. Inside a `no_grad()` block ops produce plain leaf
tensors, which keeps decoding cheap.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

_GRAD_ENABLED = True


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


class no_grad:
    """Context manager that suspends tape construction."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(
        self,
        data,
        parents: tuple = (),
        backward: Callable[[np.ndarray], None] | None = None,
    ):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad: np.ndarray | None = None
        if is_grad_enabled():
            self._parents = parents
            self._backward = backward
        else:
            self._parents = ()
            self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def has_nonfinite(self) -> bool:
        return not bool(np.isfinite(self.data).all())

    def backward(self) -> None:
        """Backpropagate from a scalar through the recorded tape."""
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.data.shape}")
        # Iterative post-order DFS: unrolled RNNs produce chains far deeper
        # than the Python recursion limit.
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)
            if node._parents and not isinstance(node, Parameter):
                node.grad = None  # free intermediate buffers as we go

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


class Parameter(Tensor):
    """Named trainable leaf. Gradients persist across backward() until zeroed."""

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(np.asarray(data))
        if not name:
            raise ValueError("Parameter needs a nonempty name")
        self.name = name

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.data.shape}, dtype={self.data.dtype})"


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def uniform_init(
    rng: np.random.Generator,
    shape: tuple[int, ...],
    scale: float = 0.1,
    dtype=np.float32,
) -> np.ndarray:
    """Default weight init: uniform(-scale, scale)."""
    return rng.uniform(-scale, scale, size=shape).astype(dtype)
