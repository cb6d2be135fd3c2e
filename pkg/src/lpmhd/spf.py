"""SPF1 binary container for spectral coefficients.

Layout (little endian)::

    b"SPF1"  u32 d  u32 N  u32 B  u64 count  count x (f64 re, f64 im)

``count`` is the number of complex coefficients: N^d for a scalar field,
ncomp * N^d for a stack of components.  Coefficients follow the numpy FFT
index order in C order, component axis first.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grid import Grid, SpectralField, VectorField

__all__ = ["SPFError", "encode", "decode", "write_field", "read_field", "read_coeffs"]

MAGIC = b"SPF1"
_HEADER = struct.Struct("<4sIIIQ")


class SPFError(ValueError):
    """Malformed SPF1 input; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def encode(grid: Grid, coeffs: np.ndarray) -> bytes:
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    if c.shape[-grid.d:] != grid.shape:
        raise ValueError(f"coefficient shape {c.shape} does not end with grid shape {grid.shape}")
    head = _HEADER.pack(MAGIC, grid.d, grid.N, grid.B, c.size)
    return head + c.astype("<c16").tobytes()


def decode(data: bytes) -> tuple[Grid, np.ndarray]:
    """Parse SPF1 bytes into (grid, coefficients of shape (ncomp, N, ..., N) or (N, ..., N))."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise SPFError("bad magic, expected b'SPF1'", 0)
    if len(data) < _HEADER.size:
        raise SPFError("truncated header", len(data))
    _, d, N, B, count = _HEADER.unpack_from(data)
    try:
        grid = Grid(d, N, B)
    except ValueError as exc:
        raise SPFError(f"invalid grid in header: {exc}", 4) from None
    per = N**d
    if count == 0 or count % per:
        raise SPFError(f"count {count} is not a positive multiple of N^d = {per}", 16)
    need = _HEADER.size + 16 * count
    if len(data) < need:
        raise SPFError(f"payload truncated: expected {need} bytes, got {len(data)}", len(data))
    if len(data) > need:
        raise SPFError(f"{len(data) - need} trailing bytes after payload", need)
    vals = np.frombuffer(data, dtype="<c16", count=count, offset=_HEADER.size).astype(np.complex128)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise SPFError("non-finite coefficient", _HEADER.size + 16 * int(bad[0]))
    ncomp = count // per
    shape = grid.shape if ncomp == 1 else (ncomp,) + grid.shape
    return grid, vals.reshape(shape)


def atomic_write(path, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(path, f) -> None:
    atomic_write(path, encode(f.grid, f.coeffs))


def read_coeffs(path) -> tuple[Grid, np.ndarray]:
    return decode(Path(path).read_bytes())


def read_field(path, vector: bool | None = None):
    """Read a scalar or vector field; ``vector=None`` infers it from the component count."""
    grid, c = read_coeffs(path)
    is_vec = c.ndim > grid.d if vector is None else vector
    if is_vec:
        if c.ndim == grid.d or c.shape[0] != grid.d:
            raise SPFError(f"expected {grid.d} components for a vector field", 16)
        return VectorField(grid, c)
    if c.ndim > grid.d:
        raise SPFError("expected a scalar field, found several components", 16)
    return SpectralField(grid, c)
