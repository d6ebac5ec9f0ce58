"""Checkpoint format: versioned header, then one record per named array.

Layout (bytes):
    sdenmt-ckpt v1\n
    params <N>\n
    <name>\t<dtype>\t<d0,d1,...>\n  followed by raw little-endian values
    ... repeated per parameter ...
    optimizer <0|1>\n
    [step <k>\n lr <repr>\n beta1 <repr>\n beta2 <repr>\n eps <repr>\n
     moments <M>\n then (m.<name> / v.<name>) records as above]

Writing is deterministic given identical arrays, so reruns with the same
seed produce byte-identical files.
"""

from __future__ import annotations

import io

import numpy as np

from .optim import AdamState
from .tensor import Parameter

MAGIC = b"sdenmt-ckpt v1\n"

_DTYPES = {"f4": "<f4", "f8": "<f8"}


def _write_array(buf: io.BufferedIOBase, name: str, arr: np.ndarray) -> None:
    if "\t" in name or "\n" in name:
        raise ValueError(f"parameter name {name!r} contains reserved characters")
    code = {np.dtype(np.float32): "f4", np.dtype(np.float64): "f8"}.get(arr.dtype)
    if code is None:
        raise ValueError(f"unsupported checkpoint dtype {arr.dtype} for {name}")
    shape = ",".join(str(d) for d in arr.shape)
    buf.write(f"{name}\t{code}\t{shape}\n".encode())
    buf.write(np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes())


def _read_line(buf: io.BufferedIOBase) -> str:
    line = buf.readline()
    if not line.endswith(b"\n"):
        raise ValueError("truncated checkpoint")
    return line[:-1].decode()


def _read_array(buf: io.BufferedIOBase) -> tuple[str, np.ndarray]:
    name, code, shape_text = _read_line(buf).split("\t")
    if code not in _DTYPES:
        raise ValueError(f"unsupported checkpoint dtype code {code!r}")
    shape = tuple(int(d) for d in shape_text.split(",")) if shape_text else ()
    dtype = np.dtype(_DTYPES[code])
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    raw = buf.read(count * dtype.itemsize)
    if len(raw) != count * dtype.itemsize:
        raise ValueError(f"truncated checkpoint data for {name}")
    return name, np.frombuffer(raw, dtype=dtype).reshape(shape).copy()


def save_checkpoint(path, params: list[Parameter], state: AdamState | None = None) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"params {len(params)}\n".encode())
        for p in params:
            _write_array(fh, p.name, p.data)
        fh.write(f"optimizer {1 if state is not None else 0}\n".encode())
        if state is not None:
            fh.write(f"step {state.step_count}\n".encode())
            fh.write(f"lr {state.learning_rate!r}\n".encode())
            fh.write(f"beta1 {state.beta1!r}\n".encode())
            fh.write(f"beta2 {state.beta2!r}\n".encode())
            fh.write(f"eps {state.epsilon!r}\n".encode())
            names = sorted(state.first_moment)
            fh.write(f"moments {len(names)}\n".encode())
            for name in names:
                _write_array(fh, f"m.{name}", state.first_moment[name])
                _write_array(fh, f"v.{name}", state.second_moment[name])


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], AdamState | None]:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        tag, count_text = _read_line(fh).split(" ")
        if tag != "params":
            raise ValueError("malformed checkpoint header")
        arrays = {}
        for _ in range(int(count_text)):
            name, arr = _read_array(fh)
            arrays[name] = arr
        has_opt = _read_line(fh) == "optimizer 1"
        state = None
        if has_opt:
            state = AdamState()
            state.step_count = int(_read_line(fh).split(" ")[1])
            state.learning_rate = float(_read_line(fh).split(" ")[1])
            state.beta1 = float(_read_line(fh).split(" ")[1])
            state.beta2 = float(_read_line(fh).split(" ")[1])
            state.epsilon = float(_read_line(fh).split(" ")[1])
            n_moments = int(_read_line(fh).split(" ")[1])
            for _ in range(n_moments):
                m_name, m_arr = _read_array(fh)
                v_name, v_arr = _read_array(fh)
                if not (m_name.startswith("m.") and v_name == "v." + m_name[2:]):
                    raise ValueError("malformed optimizer moment records")
                state.first_moment[m_name[2:]] = m_arr
                state.second_moment[v_name[2:]] = v_arr
    return arrays, state


def load_into(params: list[Parameter], arrays: dict[str, np.ndarray]) -> None:
    """Copy checkpoint arrays into matching parameters, by name."""
    for p in params:
        if p.name not in arrays:
            raise KeyError(f"checkpoint is missing parameter {p.name}")
        arr = arrays[p.name]
        if arr.shape != p.data.shape:
            raise ValueError(
                f"shape mismatch for {p.name}: checkpoint {arr.shape} vs model {p.data.shape}"
            )
        p.data = arr.astype(p.data.dtype, copy=True)
