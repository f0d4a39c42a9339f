"""JSON state format and deterministic file emission."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .fock import DensityMatrix, as_dm

STATE_FORMAT = "photonsqueeze-state/1"


def state_to_dict(state, metadata: dict | None = None) -> dict:
    r = as_dm(state)
    d = {
        "format": STATE_FORMAT,
        "dim": r.dim,
        "re": r.elems.real.tolist(),
        "im": r.elems.imag.tolist(),
        "tail_weight": r.tail_weight,
    }
    if metadata:
        d["metadata"] = metadata
    return d


def state_from_dict(d: dict) -> DensityMatrix:
    if d.get("format") != STATE_FORMAT:
        raise ValueError(f"unsupported state format {d.get('format')!r}")
    m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    if m.shape != (d["dim"], d["dim"]):
        raise ValueError(f"state matrix shape {m.shape} does not match dim {d['dim']}")
    return DensityMatrix(m, tail_weight=float(d.get("tail_weight", 0.0)))


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_text(path: Path, text: str) -> str:
    """Write ``text`` and return its sha256 digest."""
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def save_state(path: Path, state, metadata: dict | None = None) -> str:
    return write_text(path, dumps(state_to_dict(state, metadata)))


def load_state(path: Path) -> DensityMatrix:
    return state_from_dict(json.loads(Path(path).read_text()))
