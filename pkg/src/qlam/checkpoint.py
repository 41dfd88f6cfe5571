"""Model persistence.

Checkpoints are uncompressed .npz archives (zip of .npy members, one
little-endian float64 array per parameter).  Reserved members:

    __version__   int64 scalar, format version (currently 1)
    __config__    uint8 bytes of the cell-config JSON
    __extra__     uint8 bytes of a caller JSON dict (run provenance)

plus one member per parameter array, named as in QlamParams.  Loading
never unpickles anything.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .cell import CellConfig, QlamParams
from .errors import DataError

CHECKPOINT_VERSION = 1


def _json_array(payload: dict) -> np.ndarray:
    return np.frombuffer(json.dumps(payload, sort_keys=True).encode(), dtype=np.uint8)


def _json_load(arr: np.ndarray) -> dict:
    return json.loads(arr.tobytes().decode())


def save_checkpoint(
    path, params: QlamParams, cfg: CellConfig, extra: dict | None = None
) -> None:
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in params.as_dict().items()}
    np.savez(
        Path(path),
        __version__=np.int64(CHECKPOINT_VERSION),
        __config__=_json_array(asdict(cfg)),
        __extra__=_json_array(extra or {}),
        **arrays,
    )


def load_checkpoint(path) -> tuple[QlamParams, CellConfig, dict]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint {path} does not exist")
    with np.load(path, allow_pickle=False) as archive:
        if "__version__" not in archive:
            raise DataError(f"{path} is not a model checkpoint (no version member)")
        version = int(archive["__version__"])
        if version != CHECKPOINT_VERSION:
            raise DataError(
                f"checkpoint version {version} unsupported (expected {CHECKPOINT_VERSION})"
            )
        cfg = CellConfig(**_json_load(archive["__config__"]))
        extra = _json_load(archive["__extra__"])
        arrays = {
            name: archive[name] for name in archive.files if not name.startswith("__")
        }
    params = QlamParams.from_dict(arrays)
    params.validate(cfg)
    return params, cfg, extra
