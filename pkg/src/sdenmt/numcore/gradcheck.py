"""Finite-difference verification of the analytic gradients.

Central differences are unreliable in single precision, so the checker
insists on float64 parameters.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Parameter, Tensor, zero_grads


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    eps: float = 1e-5,
    max_entries_per_param: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    `loss_fn` must rebuild the graph from the current parameter values and
    return a scalar. Relative error is |a - n| / max(|a|, |n|, 1e-8). Large
    parameters can be spot-checked by capping entries per parameter.
    """
    for p in params:
        if p.data.dtype != np.float64:
            raise ValueError(f"grad_check needs float64 parameters, {p.name} is {p.data.dtype}")
    zero_grads(params)
    loss = loss_fn()
    if loss.has_nonfinite():
        raise FloatingPointError("loss is not finite")
    loss.backward()
    analytic = {
        p.name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for p in params
    }
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        flat = p.data.reshape(-1)
        grads = analytic[p.name].reshape(-1)
        if max_entries_per_param is not None and flat.size > max_entries_per_param:
            indices = rng.choice(flat.size, size=max_entries_per_param, replace=False)
        else:
            indices = range(flat.size)
        for i in indices:
            original = flat[i]
            flat[i] = original + eps
            up = float(loss_fn().data)
            flat[i] = original - eps
            down = float(loss_fn().data)
            flat[i] = original
            if not (np.isfinite(up) and np.isfinite(down)):
                raise FloatingPointError(f"non-finite loss while perturbing {p.name}[{i}]")
            numeric = (up - down) / (2.0 * eps)
            err = abs(grads[i] - numeric) / max(abs(grads[i]), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
