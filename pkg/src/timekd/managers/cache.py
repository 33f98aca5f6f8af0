"""
Cache manager for privileged teacher artifacts.

Layout (little-endian, packed): magic ``TKDC``, u16 version, u32 N, u32 D_m,
u32 horizon, u32 window count, u64 config hash, then one record per window
holding A_PE (N x N) followed by E_GT (N x D_m). Version 1 stores float32
values, version 2 float64.
"""

import asyncio
import hashlib
import json
import logging
from collections.abc import Sequence
from pathlib import Path

import aiofiles
import numpy as np

from ..core.models import PrivilegedArtifact
from ..errors import CacheMissError, FormatError, IoError, ShapeError, StaleCacheError
from .checkpoints import VERSION_FLOAT32, VERSION_FLOAT64, atomic_write, version_for

logger = logging.getLogger(__name__)

CACHE_MAGIC = b"TKDC"
CACHE_HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u2"),
        ("num_variables", "<u4"),
        ("model_dim", "<u4"),
        ("horizon", "<u4"),
        ("count", "<u4"),
        ("config_hash", "<u8"),
    ]
)
_VALUE_DTYPES = {VERSION_FLOAT32: np.dtype("<f4"), VERSION_FLOAT64: np.dtype("<f8")}


def config_hash(fingerprint: dict) -> int:
    """First 8 bytes of SHA-256 over the canonical JSON of ``fingerprint``."""
    canonical = json.dumps(fingerprint, sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(canonical.encode()).digest()[:8], "little")


def cache_write(
    artifacts: Sequence[PrivilegedArtifact],
    path: str | Path,
    *,
    config_hash: int,
    horizon: int,
    precision: str = "float32",
    num_variables: int = 0,
    model_dim: int = 0,
) -> Path:
    """Atomically write artifacts in index order."""
    path = Path(path)
    if artifacts:
        num_variables, model_dim = artifacts[0].num_variables, artifacts[0].model_dim
    for expected, artifact in enumerate(artifacts):
        if (artifact.num_variables, artifact.model_dim) != (num_variables, model_dim):
            raise ShapeError(f"artifact {artifact.index} has a different shape")
        if artifact.index != expected:
            raise ShapeError(f"artifact {artifact.index} found at position {expected}")

    version = version_for(precision)
    header = np.zeros((), dtype=CACHE_HEADER)
    header["magic"] = CACHE_MAGIC
    header["version"] = version
    header["num_variables"] = num_variables
    header["model_dim"] = model_dim
    header["horizon"] = horizon
    header["count"] = len(artifacts)
    header["config_hash"] = config_hash

    value_dtype = _VALUE_DTYPES[version]
    body = b"".join(
        np.concatenate([a.a_pe.reshape(-1), a.e_gt.reshape(-1)]).astype(value_dtype).tobytes()
        for a in artifacts
    )
    atomic_write(path, header.tobytes() + body)
    logger.info(f"Cached {len(artifacts)} windows (N={num_variables}, D_m={model_dim}) at {path}")
    return path


class CacheReader:
    """Random access to a validated cache file; records are read on demand."""

    def __init__(self, path: Path, header: np.void):
        self.path = path
        self.version = int(header["version"])
        self.num_variables = int(header["num_variables"])
        self.model_dim = int(header["model_dim"])
        self.horizon = int(header["horizon"])
        self.count = int(header["count"])
        self.config_hash = int(header["config_hash"])
        self.value_dtype = _VALUE_DTYPES[self.version]
        self.record_values = self.num_variables**2 + self.num_variables * self.model_dim
        self.record_bytes = self.record_values * self.value_dtype.itemsize

    def __len__(self) -> int:
        return self.count

    def _offset(self, index: int) -> int:
        if not 0 <= index < self.count:
            raise CacheMissError(index, f"window {index} not in cache of {self.count} windows")
        return CACHE_HEADER.itemsize + index * self.record_bytes

    def _decode(self, index: int, raw: bytes) -> PrivilegedArtifact:
        values = np.frombuffer(raw, dtype=self.value_dtype)
        n = self.num_variables
        return PrivilegedArtifact(
            index=index,
            a_pe=values[: n * n].reshape(n, n),
            e_gt=values[n * n :].reshape(n, self.model_dim),
        )

    def __getitem__(self, index: int) -> PrivilegedArtifact:
        offset = self._offset(index)
        with self.path.open("rb") as fh:
            fh.seek(offset)
            raw = fh.read(self.record_bytes)
        return self._decode(index, raw)

    def read_batch(self, indices: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (B, N, N) correlations and (B, N, D_m) features."""
        records = [self[i] for i in indices]
        return np.stack([r.a_pe for r in records]), np.stack([r.e_gt for r in records])

    async def aread(self, index: int) -> PrivilegedArtifact:
        offset = self._offset(index)
        async with aiofiles.open(self.path, "rb") as fh:
            await fh.seek(offset)
            raw = await fh.read(self.record_bytes)
        return self._decode(index, raw)

    async def prefetch(self, indices: Sequence[int]) -> list[PrivilegedArtifact]:
        """Read many records concurrently, returned in request order."""
        if not indices:
            logger.warning("Cache prefetch called with no indices")
            return []
        return list(await asyncio.gather(*(self.aread(int(i)) for i in indices)))

    def artifacts(self) -> list[PrivilegedArtifact]:
        return [self[i] for i in range(self.count)]


def cache_read(path: str | Path, expected_hash: int | None) -> CacheReader:
    """Validate the header and file size, then return an indexed reader.

    ``expected_hash=None`` skips the staleness check (used by reports).
    """
    path = Path(path)
    try:
        size = path.stat().st_size
        with path.open("rb") as fh:
            raw = fh.read(CACHE_HEADER.itemsize)
    except OSError as exc:
        raise IoError(f"cannot read cache {path}: {exc}") from exc

    if len(raw) < CACHE_HEADER.itemsize:
        raise FormatError(len(raw), "truncated cache header")
    header = np.frombuffer(raw, dtype=CACHE_HEADER, count=1)[0]
    if bytes(header["magic"]) != CACHE_MAGIC:
        raise FormatError(0, f"expected magic {CACHE_MAGIC!r}, found {bytes(header['magic'])!r}")
    if int(header["version"]) not in _VALUE_DTYPES:
        raise FormatError(4, f"unsupported cache version {int(header['version'])}")

    reader = CacheReader(path, header)
    expected_size = CACHE_HEADER.itemsize + reader.count * reader.record_bytes
    if size != expected_size:
        raise FormatError(
            size, f"cache declares {expected_size} bytes but file holds {size}"
        )
    if expected_hash is not None and reader.config_hash != expected_hash:
        raise StaleCacheError(
            f"cache {path} was built for config hash {reader.config_hash:016x}, "
            f"this run expects {expected_hash:016x}"
        )
    logger.debug(f"Opened cache {path}: {reader.count} windows, version {reader.version}")
    return reader


class ArtifactCache:
    """Writes and opens the artifact cache for one run directory."""

    def __init__(self, path: str | Path, precision: str = "float32"):
        self.path = Path(path)
        self.precision = precision

    def exists(self) -> bool:
        return self.path.is_file()

    def write(
        self, artifacts: Sequence[PrivilegedArtifact], config_hash: int, horizon: int
    ) -> Path:
        return cache_write(
            artifacts, self.path, config_hash=config_hash, horizon=horizon, precision=self.precision
        )

    def open(self, expected_hash: int | None) -> CacheReader:
        return cache_read(self.path, expected_hash)

    def clear(self) -> bool:
        if self.exists():
            self.path.unlink()
            logger.info(f"Removed cache {self.path}")
            return True
        return False

