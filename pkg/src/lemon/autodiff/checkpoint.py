"""Checkpoint directory format: INI manifest + raw float64 blob.

Round-trips are bit-exact: arrays are written as little-endian float64 in
manifest order and read back into the same shapes.  A free-form ``[config]``
section carries model/run settings as strings.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from ..errors import DataError

CHECKPOINT_VERSION = 1
MANIFEST_NAME = "manifest.ini"
BLOB_NAME = "params.bin"


def save_checkpoint(path, arrays: dict[str, np.ndarray],
                    trainable: dict[str, bool] | None = None,
                    config: dict[str, str] | None = None) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    trainable = trainable or {}
    cfg = configparser.ConfigParser()
    cfg["checkpoint"] = {"version": str(CHECKPOINT_VERSION), "n_params": str(len(arrays))}
    if config:
        cfg["config"] = {k: str(v) for k, v in config.items()}
    offset = 0
    with open(path / BLOB_NAME, "wb") as fh:
        for i, (name, arr) in enumerate(arrays.items()):
            arr = np.ascontiguousarray(arr, dtype="<f8")
            cfg[f"param {i}"] = {
                "name": name,
                "shape": ",".join(str(s) for s in arr.shape),
                "trainable": str(bool(trainable.get(name, True))),
                "offset": str(offset),
            }
            fh.write(arr.tobytes())
            offset += arr.size
    cfg["checkpoint"]["total_elements"] = str(offset)
    with open(path / MANIFEST_NAME, "w") as fh:
        cfg.write(fh)
    return path


def load_checkpoint(path):
    """Returns (arrays, trainable flags, config dict)."""
    path = Path(path)
    manifest = path / MANIFEST_NAME
    if not manifest.exists():
        raise DataError(f"missing checkpoint manifest {manifest}")
    cfg = configparser.ConfigParser()
    cfg.read(manifest)
    try:
        version = cfg.getint("checkpoint", "version")
        if version != CHECKPOINT_VERSION:
            raise DataError(f"unsupported checkpoint version {version}")
        n = cfg.getint("checkpoint", "n_params")
        total = cfg.getint("checkpoint", "total_elements")
    except (configparser.Error, ValueError) as err:
        raise DataError(f"malformed checkpoint manifest: {err}") from err
    blob = np.frombuffer((path / BLOB_NAME).read_bytes(), dtype="<f8")
    if blob.size != total:
        raise DataError(f"checkpoint blob holds {blob.size} elements, manifest says {total}")
    arrays: dict[str, np.ndarray] = {}
    flags: dict[str, bool] = {}
    for i in range(n):
        sec = f"param {i}"
        try:
            name = cfg.get(sec, "name")
            shape_s = cfg.get(sec, "shape")
            shape = tuple(int(s) for s in shape_s.split(",")) if shape_s else ()
            offset = cfg.getint(sec, "offset")
            flags[name] = cfg.getboolean(sec, "trainable")
        except (configparser.Error, ValueError) as err:
            raise DataError(f"malformed checkpoint parameter section {sec!r}: {err}") from err
        size = int(np.prod(shape)) if shape else 1
        if offset + size > blob.size:
            raise DataError(f"checkpoint blob truncated at parameter {name!r}")
        arrays[name] = blob[offset:offset + size].reshape(shape).copy()
    config = dict(cfg["config"]) if cfg.has_section("config") else {}
    return arrays, flags, config
