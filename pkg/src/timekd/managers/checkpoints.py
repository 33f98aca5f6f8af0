"""
Checkpoint manager for model parameters.

Layout (little-endian): 4-byte magic, u16 version, u32 config length, the
UTF-8 JSON config echo, then every parameter in ``named_parameters`` order.
Version 1 stores float32 values, version 2 float64.
"""

import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..errors import FormatError, IoError, ShapeError
from ..nn.module import Module

logger = logging.getLogger(__name__)

TEACHER_MAGIC = b"TKDT"
STUDENT_MAGIC = b"TKDS"
WEIGHTS_MAGIC = b"TKDW"

VERSION_FLOAT32 = 1
VERSION_FLOAT64 = 2

HEADER_DTYPE = np.dtype(
    [("magic", "S4"), ("version", "<u2"), ("config_length", "<u4")]
)

_VALUE_DTYPES = {VERSION_FLOAT32: np.dtype("<f4"), VERSION_FLOAT64: np.dtype("<f8")}


def version_for(precision: str) -> int:
    return VERSION_FLOAT64 if np.dtype(precision) == np.float64 else VERSION_FLOAT32


def atomic_write(path: Path, payload: bytes) -> None:
    """Write to a sibling temp file, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        Path(tmp).unlink(missing_ok=True)
        raise IoError(f"cannot write {path}: {exc}") from exc


class CheckpointFile(BaseModel):
    """Decoded checkpoint: config echo and the flat parameter payload."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    magic: bytes
    version: int
    config: dict
    values: np.ndarray

    def load_into(self, module: Module) -> None:
        params = module.parameters()
        expected = sum(p.data.size for p in params)
        if self.values.size != expected:
            raise FormatError(
                HEADER_DTYPE.itemsize,
                f"payload holds {self.values.size} values, model needs {expected}",
            )
        arrays, cursor = [], 0
        for param in params:
            arrays.append(self.values[cursor : cursor + param.data.size].reshape(param.shape))
            cursor += param.data.size
        module.load_state_arrays(arrays)


class CheckpointManager:
    """Reads and writes parameter checkpoints for one file kind."""

    def __init__(self, magic: bytes):
        if len(magic) != 4:
            raise ShapeError(f"checkpoint magic must be 4 bytes, got {magic!r}")
        self.magic = magic

    def save(
        self,
        path: str | Path,
        module: Module,
        config: dict,
        precision: str = "float32",
    ) -> Path:
        path = Path(path)
        version = version_for(precision)
        config_bytes = json.dumps(config, sort_keys=True).encode("utf-8")
        header = np.zeros((), dtype=HEADER_DTYPE)
        header["magic"] = self.magic
        header["version"] = version
        header["config_length"] = len(config_bytes)
        params = module.parameters()
        body = (
            np.concatenate([p.data.reshape(-1) for p in params])
            if params
            else np.zeros(0)
        ).astype(_VALUE_DTYPES[version])
        atomic_write(path, header.tobytes() + config_bytes + body.tobytes())
        logger.info(f"Saved {len(params)} tensors ({body.size} values) to {path}")
        return path

    def read(self, path: str | Path) -> CheckpointFile:
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
        if len(raw) < HEADER_DTYPE.itemsize:
            raise FormatError(len(raw), "truncated checkpoint header")
        header = np.frombuffer(raw, dtype=HEADER_DTYPE, count=1)[0]
        if bytes(header["magic"]) != self.magic:
            raise FormatError(0, f"expected magic {self.magic!r}, found {bytes(header['magic'])!r}")
        version = int(header["version"])
        if version not in _VALUE_DTYPES:
            raise FormatError(4, f"unsupported checkpoint version {version}")
        start = HEADER_DTYPE.itemsize
        end = start + int(header["config_length"])
        if len(raw) < end:
            raise FormatError(len(raw), "truncated config echo")
        try:
            config = json.loads(raw[start:end].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(start, f"config echo is not valid JSON: {exc}") from exc
        value_dtype = _VALUE_DTYPES[version]
        if (len(raw) - end) % value_dtype.itemsize:
            raise FormatError(len(raw), "parameter payload is not a whole number of values")
        values = np.frombuffer(raw, dtype=value_dtype, offset=end)
        return CheckpointFile(magic=self.magic, version=version, config=config, values=values)

    def load(self, path: str | Path, module: Module) -> dict:
        """Load parameters into ``module`` and return the config echo."""
        checkpoint = self.read(path)
        checkpoint.load_into(module)
        logger.info(f"Loaded checkpoint {path} (version {checkpoint.version})")
        return checkpoint.config
