"""Versioned checkpoint container shared by the segmentation and translation
networks: a single .npz holding a JSON metadata record (format version,
checkpoint kind, architecture spec, step counter) plus named weight arrays.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

FORMAT_VERSION = 1
_META_KEY = "__meta__"
_WEIGHT_PREFIX = "w/"


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    kind: str
    spec: dict[str, Any]
    state: dict[str, np.ndarray]
    step: int
    extra: dict[str, Any]


def save_checkpoint(
    path,
    kind: str,
    spec: dict[str, Any],
    state: dict[str, np.ndarray],
    step: int,
    extra: dict[str, Any] | None = None,
) -> Path:
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "spec": spec,
        "step": int(step),
        "extra": extra or {},
    }
    arrays = {_META_KEY: np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)}
    for name, arr in state.items():
        arrays[_WEIGHT_PREFIX + name] = np.asarray(arr)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    out.write_bytes(buf.getvalue())
    return out


def load_checkpoint(path, expect_kind: str | None = None) -> Checkpoint:
    p = Path(path)
    if not p.exists():
        raise CheckpointError(f"checkpoint file not found: {p}")
    with np.load(p) as data:
        if _META_KEY not in data:
            raise CheckpointError(f"{p} is not a checkpoint container (missing metadata)")
        meta = json.loads(bytes(data[_META_KEY]).decode())
        if meta.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                f"{p}: unsupported checkpoint format version {meta.get('format_version')} "
                f"(expected {FORMAT_VERSION})"
            )
        if expect_kind is not None and meta["kind"] != expect_kind:
            raise CheckpointError(f"{p}: checkpoint kind '{meta['kind']}' (expected '{expect_kind}')")
        state = {k[len(_WEIGHT_PREFIX) :]: data[k] for k in data.files if k.startswith(_WEIGHT_PREFIX)}
    return Checkpoint(kind=meta["kind"], spec=meta["spec"], state=state, step=meta["step"], extra=meta["extra"])


def state_dict_to_arrays(state_dict) -> dict[str, np.ndarray]:
    return {name: tensor.detach().cpu().numpy() for name, tensor in state_dict.items()}


def arrays_to_state_dict(arrays: dict[str, np.ndarray]):
    import torch

    return {name: torch.from_numpy(np.array(arr)) for name, arr in arrays.items()}
