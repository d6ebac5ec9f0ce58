"""Dense-tensor numeric core: reverse-mode tape, op kernels, Adam, and
finite-difference gradient checking."""

from .checkpoint import load_checkpoint, load_into, save_checkpoint
from .gradcheck import grad_check
from .optim import AdamState, adam_step
from .ops import (
    add,
    add_const,
    bmm,
    concat_cols,
    concat_rows,
    constant,
    cross_entropy,
    dropout,
    embedding_rows,
    matmul,
    mul,
    pick_steps,
    reshape,
    scale,
    sigmoid,
    slice_cols,
    softmax_rows,
    stack_steps,
    sum_all,
    tanh,
    transpose,
    transpose_last2,
)
from .tensor import Parameter, Tensor, is_grad_enabled, no_grad, uniform_init, zero_grads

__all__ = [
    "AdamState",
    "Parameter",
    "Tensor",
    "adam_step",
    "add",
    "add_const",
    "bmm",
    "concat_cols",
    "concat_rows",
    "constant",
    "cross_entropy",
    "dropout",
    "embedding_rows",
    "grad_check",
    "is_grad_enabled",
    "load_checkpoint",
    "load_into",
    "matmul",
    "mul",
    "no_grad",
    "pick_steps",
    "reshape",
    "save_checkpoint",
    "scale",
    "sigmoid",
    "slice_cols",
    "softmax_rows",
    "stack_steps",
    "sum_all",
    "tanh",
    "transpose",
    "transpose_last2",
    "uniform_init",
    "zero_grads",
]
