"""MNSF field snapshots: a little-endian binary header, raw coefficients and a JSON sidecar."""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .spectral_core import Grid, SpectralError, SpectralField

MAGIC = b"MNSF"
VERSION = 1
HEADER = struct.Struct("<4sIIIdI")


class SnapshotError(SpectralError):
    """Raised for malformed snapshot files."""


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def encode(s: SpectralField) -> bytes:
    header = HEADER.pack(MAGIC, VERSION, s.grid.dim, s.grid.n, float(s.grid.box_scale), s.n_components)
    return header + np.ascontiguousarray(s.coeffs, dtype="<c16").tobytes()


def decode(blob: bytes) -> SpectralField:
    if len(blob) < HEADER.size:
        raise SnapshotError("file shorter than the MNSF header")
    magic, version, dim, n, box, nc = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported MNSF version {version}")
    grid = Grid(dim, n, box)
    count = nc * n**dim
    payload = blob[HEADER.size:]
    if len(payload) != 16 * count:
        raise SnapshotError(f"payload holds {len(payload)} bytes, expected {16 * count}")
    coeffs = np.frombuffer(payload, dtype="<c16").reshape((nc,) + grid.shape)
    return SpectralField(grid, coeffs)


def write_snapshot(path: str | Path, s: SpectralField, metadata: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = encode(s)
    path.write_bytes(blob)
    meta = {"format": "MNSF", "version": VERSION, "d": s.grid.dim, "N": s.grid.n, "L": s.grid.box_scale,
            "n_components": s.n_components, "divergence_free": s.divergence_free,
            "sha256": hashlib.sha256(blob).hexdigest()}
    meta.update(metadata or {})
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def read_snapshot(path: str | Path) -> tuple[SpectralField, dict]:
    path = Path(path)
    blob = path.read_bytes()
    field = decode(blob)
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    digest = meta.get("sha256")
    if digest is not None and digest != hashlib.sha256(blob).hexdigest():
        raise SnapshotError("snapshot does not match its sidecar checksum")
    if meta.get("divergence_free"):
        field = field.with_coeffs(field.coeffs, divergence_free=True)
    return field, meta
