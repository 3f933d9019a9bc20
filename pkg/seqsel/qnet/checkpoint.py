"""Checkpoint directory: manifest.json + params.bin + opt.bin.

Both binaries hold little-endian float32 tensors concatenated row-major in
manifest order; opt.bin stores every first moment, then every second moment.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from seqsel.errors import CheckpointError
from seqsel.qnet.optim import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, OptState
from seqsel.qnet.params import QNetParams, param_shapes


logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
PARAMS_BIN = "params.bin"
OPT_BIN = "opt.bin"
FORMAT_VERSION = 1
WIRE_DTYPE = np.dtype("<f4")


def _layout(shapes: Dict[str, Tuple[int, ...]], prefix: str = "") -> list[dict]:
    entries, offset = [], 0
    for name, shape in shapes.items():
        nbytes = int(np.prod(shape)) * WIRE_DTYPE.itemsize
        entries.append({"name": prefix + name, "shape": list(shape), "offset": offset, "nbytes": nbytes})
        offset += nbytes
    return entries


def _write_blob(path: Path, arrays) -> None:
    with open(path, "wb") as f:
        for array in arrays:
            f.write(np.ascontiguousarray(array, dtype=WIRE_DTYPE).tobytes(order="C"))


def save_checkpoint(
    directory: Path | str,
    params: QNetParams,
    opt: Optional[OptState] = None,
    *,
    epoch: int = 0,
    optimizer_config: Optional[Dict[str, Any]] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    shapes = params.expected_shapes()
    manifest: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "arch": params.arch,
        "n": params.n_features,
        "k": params.n_classes,
        "hidden": params.hidden,
        "dtype": "float32",
        "byte_order": "little",
        "epoch": int(epoch),
        "tensors": _layout(shapes),
        "optimizer": {
            "name": "adam",
            "beta1": ADAM_BETA1,
            "beta2": ADAM_BETA2,
            "eps": ADAM_EPS,
            **(optimizer_config or {}),
        },
    }

    _write_blob(directory / PARAMS_BIN, params.tensors.values())

    if opt is not None:
        manifest["optimizer"].update(t=opt.t, lr=opt.lr)
        first = _layout(shapes, prefix="m.")
        second = _layout(shapes, prefix="v.")
        shift = sum(entry["nbytes"] for entry in first)
        for entry in second:
            entry["offset"] += shift
        manifest["opt_tensors"] = first + second
        _write_blob(
            directory / OPT_BIN,
            [opt.m[name] for name in shapes] + [opt.v[name] for name in shapes],
        )

    if extra:
        manifest.update(extra)

    with open(directory / MANIFEST, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")

    logger.info("Saved %s checkpoint (%d parameters) to %s", params.arch, params.n_parameters(), directory)
    return directory


def _read_tensors(path: Path, entries: list[dict]) -> Dict[str, np.ndarray]:
    if not path.exists():
        raise CheckpointError(f"Missing checkpoint file: {path}")
    blob = path.read_bytes()
    expected = sum(entry["nbytes"] for entry in entries)
    if len(blob) != expected:
        raise CheckpointError(f"{path.name} holds {len(blob)} bytes, manifest expects {expected}")

    tensors = {}
    for entry in entries:
        count = int(np.prod(entry["shape"]))
        array = np.frombuffer(blob, dtype=WIRE_DTYPE, count=count, offset=entry["offset"])
        tensors[entry["name"]] = array.reshape(entry["shape"]).astype(np.float32)
    return tensors


def load_manifest(directory: Path | str) -> Dict[str, Any]:
    path = Path(directory) / MANIFEST
    if not path.exists():
        raise CheckpointError(f"Missing checkpoint manifest: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"Unreadable checkpoint manifest {path}: {exc}") from None
    for key in ("arch", "n", "k", "hidden", "tensors"):
        if key not in manifest:
            raise CheckpointError(f"Checkpoint manifest is missing '{key}'")
    return manifest


def load_checkpoint(directory: Path | str) -> Tuple[QNetParams, Optional[OptState], Dict[str, Any]]:
    directory = Path(directory)
    manifest = load_manifest(directory)

    shapes = param_shapes(manifest["arch"], manifest["n"], manifest["k"], manifest["hidden"])
    listed = {entry["name"]: tuple(entry["shape"]) for entry in manifest["tensors"]}
    if listed != shapes:
        raise CheckpointError("Checkpoint tensor list does not match its declared architecture")

    tensors = _read_tensors(directory / PARAMS_BIN, manifest["tensors"])
    params = QNetParams(
        arch=manifest["arch"],
        n_features=int(manifest["n"]),
        n_classes=int(manifest["k"]),
        hidden=int(manifest["hidden"]),
        tensors=tensors,
    )

    opt = None
    if "opt_tensors" in manifest:
        moments = _read_tensors(directory / OPT_BIN, manifest["opt_tensors"])
        opt = OptState(
            m={name: moments[f"m.{name}"] for name in shapes},
            v={name: moments[f"v.{name}"] for name in shapes},
            t=int(manifest["optimizer"].get("t", 0)),
            lr=float(manifest["optimizer"].get("lr", 0.0)),
        )

    logger.info("Loaded %s checkpoint from %s", params.arch, directory)
    return params, opt, manifest
