"""Versioned plain-text/binary checkpoint container.

Layout::

    TSEGAN-CKPT-v1\\n
    config <n_bytes>\\n<config text>\\n
    array <name> <dim0>x<dim1>... \\n<raw little-endian float64 bytes>\\n
    ...
    end\\n

The config text is the ``key = value`` echo of the training config, so a
checkpoint can be inspected with ``head``.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

MAGIC = "TSEGAN-CKPT-v1"


class CheckpointError(ValueError):
    pass


def _shape_str(shape) -> str:
    return "x".join(str(d) for d in shape) if shape else "scalar"


def save_checkpoint(path, arrays: dict[str, np.ndarray], config_text: str = "") -> Path:
    """Write atomically (temp file + rename) so a crash never leaves a torn file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    cfg = config_text.encode()
    with open(tmp, "wb") as f:
        f.write(f"{MAGIC}\n".encode())
        f.write(f"config {len(cfg)}\n".encode() + cfg + b"\n")
        for name, arr in arrays.items():
            if any(c.isspace() for c in name):
                raise CheckpointError(f"array name {name!r} contains whitespace")
            a = np.asarray(arr, dtype="<f8")  # ascontiguousarray would promote 0-d to 1-d
            f.write(f"array {name} {_shape_str(a.shape)}\n".encode())
            f.write(a.tobytes() + b"\n")
        f.write(b"end\n")
    os.replace(tmp, path)
    return path


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], str]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint ({exc.strerror})") from None
    head, _, rest = raw.partition(b"\n")
    head = head.decode(errors="replace")
    if head != MAGIC:
        if head.startswith("TSEGAN-CKPT-"):
            raise CheckpointError(f"{path}: checkpoint version {head[12:]!r} is not supported (expected v1)")
        raise CheckpointError(f"{path}: not a checkpoint (bad magic {head[:32]!r})")
    pos = 0

    def line() -> str:
        nonlocal pos
        end = rest.index(b"\n", pos)
        out = rest[pos:end].decode()
        pos = end + 1
        return out

    try:
        tag, n = line().split()
        if tag != "config":
            raise CheckpointError(f"{path}: expected config block, got {tag!r}")
        n = int(n)
        config_text = rest[pos : pos + n].decode()
        pos += n + 1
        arrays = {}
        while True:
            fields = line().split()
            if fields == ["end"]:
                break
            if len(fields) != 3 or fields[0] != "array":
                raise CheckpointError(f"{path}: malformed record header {' '.join(fields)!r}")
            _, name, shape_s = fields
            shape = () if shape_s == "scalar" else tuple(int(d) for d in shape_s.split("x"))
            nbytes = 8 * int(np.prod(shape, dtype=np.int64))
            if pos + nbytes > len(rest):
                raise CheckpointError(f"{path}: truncated data for array {name}")
            arrays[name] = np.frombuffer(rest[pos : pos + nbytes], dtype="<f8").reshape(shape).astype(np.float64)
            pos += nbytes + 1
    except (ValueError, UnicodeDecodeError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"{path}: corrupt checkpoint ({exc})") from None
    return arrays, config_text
