"""
Checkpoints are a JSON manifest plus a contiguous little-endian tensor blob.

The manifest lists every tensor's path, dtype, shape, byte offset and byte
length in canonical order, the model configuration, provenance, optional
training state and the content id of the blob.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np
import orjson
import torch

from ..exceptions import CheckpointError, UsageError
from ..model import FfnoConfig, FfnoParams, parameter_shapes
from ..utils import atomic_write, content_id


__all__: Tuple[str, ...] = (
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "blob_path",
    "CHECKPOINT_FORMAT",
    "CHECKPOINT_VERSION",
)

log: logging.Logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT: str = "factorized-transfer-checkpoint"
CHECKPOINT_VERSION: int = 1

PathLike = Union[str, "os.PathLike[str]"]

DTYPE_CODES: Dict[str, Tuple[str, torch.dtype]] = {
    "float32": ("<f4", torch.float32),
    "float64": ("<f8", torch.float64),
}


class Checkpoint(NamedTuple):
    """
    A loaded checkpoint.

    Attributes
    ----------
    params: FfnoParams
        The parameters, bit-identical to what was saved.
    provenance: Dict[str, Any]
        Seed, dataset id, fine-tuning tag and similar metadata.
    training: Optional[Dict[str, Any]]
        Training summary (configuration, iterations run, final learning rate), if saved.
    blob_id: str
        Content id of the tensor blob.
    """

    params: FfnoParams
    provenance: Dict[str, Any]
    training: Optional[Dict[str, Any]]
    blob_id: str

    @property
    def config(self) -> FfnoConfig:
        return self.params.config


def blob_path(path: PathLike) -> Path:
    return Path(path).with_suffix(".bin")


def _dtype_name(dtype: torch.dtype) -> str:
    for name, (_, candidate) in DTYPE_CODES.items():
        if candidate == dtype:
            return name
    raise CheckpointError(f"Cannot store parameters of dtype {dtype}.")


def save_checkpoint(
    path: PathLike,
    params: FfnoParams,
    *,
    provenance: Optional[Mapping[str, Any]] = None,
    training: Optional[Mapping[str, Any]] = None,
) -> Path:
    """
    Write ``params`` to ``path`` (manifest) and ``path.with_suffix(".bin")`` (blob).

    The blob is written before the manifest, so an interrupted save never leaves
    a manifest pointing at a missing blob.

    Returns
    -------
    Path
        The manifest path.
    """
    path = Path(path)
    name = _dtype_name(params.dtype)
    code, _ = DTYPE_CODES[name]
    chunks: List[bytes] = []
    entries: List[Dict[str, Any]] = []
    offset = 0
    for tensor_path, tensor in params.items():
        data = tensor.detach().cpu().contiguous().numpy().astype(code).tobytes()
        entries.append(
            {
                "path": tensor_path,
                "dtype": name,
                "shape": list(tensor.shape),
                "offset": offset,
                "nbytes": len(data),
            }
        )
        chunks.append(data)
        offset += len(data)
    blob = b"".join(chunks)
    blob_id = content_id(blob)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": params.config._asdict(),
        "blob": blob_path(path).name,
        "blob_id": blob_id,
        "blob_nbytes": len(blob),
        "tensors": entries,
        "provenance": dict(provenance or {}),
        "training": dict(training) if training is not None else None,
    }
    atomic_write(blob_path(path), blob)
    atomic_write(path, orjson.dumps(manifest, option=orjson.OPT_INDENT_2))
    log.info("Saved %r (%d bytes, id %s) to %s", params, len(blob), blob_id[:12], path)
    return path


def _read_manifest(path: Path) -> Dict[str, Any]:
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise UsageError(f"Checkpoint {path} does not exist.") from None
    try:
        manifest = orjson.loads(raw)
    except orjson.JSONDecodeError as error:
        raise CheckpointError(f"{path}: manifest is not valid JSON ({error}).") from error
    if not isinstance(manifest, dict) or manifest.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a checkpoint manifest.")
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: format version {manifest.get('version')!r}, expected {CHECKPOINT_VERSION}."
        )
    return manifest


def _read_config(path: Path, manifest: Mapping[str, Any]) -> FfnoConfig:
    try:
        return FfnoConfig(**manifest["config"]).validate()
    except (KeyError, TypeError, UsageError) as error:
        raise CheckpointError(f"{path}: invalid model configuration ({error}).") from error


def _check_expected(config: FfnoConfig, expected: FfnoConfig) -> None:
    for field in FfnoConfig._fields:
        have, want = getattr(config, field), getattr(expected, field)
        if have != want:
            raise UsageError(
                f'Checkpoint was saved with {field}={have!r} but {field}={want!r} was requested.'
            )


def load_checkpoint(path: PathLike, expected_config: Optional[FfnoConfig] = None) -> Checkpoint:
    """
    Read a checkpoint written by `save_checkpoint`.

    Everything is validated before the parameters are built, so a damaged
    checkpoint never produces partial state.

    Parameters
    ----------
    path: PathLike
        The manifest path.
    expected_config: Optional[FfnoConfig]
        When given, every configuration field must match.

    Raises
    ------
    UsageError
        The manifest is missing or the configuration differs from ``expected_config``.
    CheckpointError
        The manifest or blob is malformed, truncated or does not match its content id.
    """
    path = Path(path)
    manifest = _read_manifest(path)
    config = _read_config(path, manifest)
    if expected_config is not None:
        _check_expected(config, expected_config)

    try:
        blob = blob_path(path).read_bytes()
    except FileNotFoundError:
        raise CheckpointError(f"{path}: tensor blob {blob_path(path).name} is missing.") from None
    if len(blob) != manifest.get("blob_nbytes"):
        raise CheckpointError(
            f"{path}: blob holds {len(blob)} bytes, manifest says {manifest.get('blob_nbytes')}."
        )
    if content_id(blob) != manifest.get("blob_id"):
        raise CheckpointError(f"{path}: blob content id does not match the manifest.")

    shapes = parameter_shapes(config)
    entries = manifest.get("tensors")
    if not isinstance(entries, list) or not all(isinstance(e, dict) for e in entries):
        raise CheckpointError(f"{path}: malformed tensor list.")
    if [e.get("path") for e in entries] != list(shapes):
        raise CheckpointError(f"{path}: tensor list does not match the model configuration.")
    tensors: Dict[str, torch.Tensor] = {}
    offset = 0
    for entry in entries:
        tensor_path = entry["path"]
        if entry.get("dtype") not in DTYPE_CODES:
            raise CheckpointError(
                f"{path}: unknown dtype {entry.get('dtype')!r} for {tensor_path}."
            )
        code, dtype = DTYPE_CODES[entry["dtype"]]
        shape = tuple(entry.get("shape", ()))
        count = int(np.prod(shape))
        nbytes = count * np.dtype(code).itemsize
        consistent = (
            shape == shapes[tensor_path]
            and entry.get("offset") == offset
            and entry.get("nbytes") == nbytes
        )
        if not consistent:
            raise CheckpointError(f"{path}: entry for {tensor_path} is inconsistent.")
        array = np.frombuffer(blob, dtype=code, count=count, offset=offset).reshape(shape)
        native = array.astype(array.dtype.newbyteorder("="))
        tensors[tensor_path] = torch.from_numpy(native).to(dtype)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: blob has {len(blob) - offset} trailing bytes.")
    if len({t.dtype for t in tensors.values()}) != 1:
        raise CheckpointError(f"{path}: tensors have mixed dtypes.")

    params = FfnoParams(config, tensors)
    log.info("Loaded %r from %s", params, path)
    return Checkpoint(
        params,
        dict(manifest.get("provenance") or {}),
        manifest.get("training"),
        manifest["blob_id"],
    )
