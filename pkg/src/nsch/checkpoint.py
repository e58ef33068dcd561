"""Binary checkpoints.

Layout (all little-endian)::

    magic    5 bytes   b"NSCH1"
    version  uint16
    dim      uint8
    n_grid   uint32
    m_cut    uint32
    t, p, delta        float64 x 3
    rho      float64 x n_grid**dim
    a, b, c  complex coefficient blocks as interleaved (re, im) float64
    checksum uint64    first 8 bytes of BLAKE2b over everything above

Coefficient blocks are stored on the full grid (zeros outside the
retained band), so a round trip is bit-exact.
"""
from __future__ import annotations

import hashlib
import os
import struct
import tempfile

import numpy as np

from .spectral import SpectralLayout
from .state import SimState

MAGIC = b"NSCH1"
VERSION = 1
HEADER = struct.Struct("<5sHBIIddd")


class CheckpointError(Exception):
    pass


class FormatError(CheckpointError):
    """Not a checkpoint, or an unsupported format version."""


class ChecksumError(CheckpointError):
    """Truncated or corrupted file."""


class LayoutMismatchError(CheckpointError):
    """Header disagrees with the layout the caller wants to restore into."""


def _digest(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


def encode(state: SimState, p: float, delta: float) -> bytes:
    lay = state.layout
    head = HEADER.pack(MAGIC, VERSION, lay.dim, lay.n_grid, lay.m_cut,
                       float(state.t), float(p), float(delta))
    parts = [head, np.ascontiguousarray(state.rho, dtype="<f8").tobytes()]
    for arr in (state.a, state.b, state.c):
        parts.append(np.ascontiguousarray(arr, dtype="<c16").tobytes())
    body = b"".join(parts)
    return body + _digest(body)


def write_checkpoint(state: SimState, path, p: float, delta: float):
    """Write atomically: a temporary file in the target directory, then rename."""
    data = encode(state, p, delta)
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".nsch-", suffix=".tmp", dir=folder)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_header(data: bytes) -> dict:
    if len(data) < len(MAGIC) and MAGIC.startswith(data):
        raise ChecksumError("file truncated inside the header")
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic: not an NSCH1 checkpoint")
    if len(data) < HEADER.size:
        raise ChecksumError("file truncated inside the header")
    magic, version, dim, n_grid, m_cut, t, p, delta = HEADER.unpack_from(data)
    if version != VERSION:
        raise FormatError(f"checkpoint format version {version} not supported "
                          f"(this build reads version {VERSION})")
    return dict(version=version, dim=dim, n_grid=n_grid, m_cut=m_cut, t=t, p=p, delta=delta)


def decode(data: bytes, layout: SpectralLayout | None = None):
    """Parse checkpoint bytes into ``(state, header)``."""
    h = read_header(data)
    npts = h["n_grid"] ** h["dim"]
    want = HEADER.size + 8 * npts + 16 * npts * (h["dim"] + 2) + 8
    if len(data) != want:
        raise ChecksumError(f"checkpoint has {len(data)} bytes, expected {want} "
                            f"(truncated or padded)")
    if _digest(data[:-8]) != data[-8:]:
        raise ChecksumError("checksum mismatch: checkpoint is corrupted")
    if layout is None:
        try:
            layout = SpectralLayout(h["dim"], h["n_grid"], h["m_cut"])
        except ValueError as exc:
            raise FormatError(f"invalid layout in header: {exc}") from None
    elif (layout.dim, layout.n_grid, layout.m_cut) != (h["dim"], h["n_grid"], h["m_cut"]):
        raise LayoutMismatchError(
            f"checkpoint layout dim={h['dim']} n_grid={h['n_grid']} m_cut={h['m_cut']} "
            f"does not match dim={layout.dim} n_grid={layout.n_grid} m_cut={layout.m_cut}")
    shape = layout.shape
    off = HEADER.size
    rho = np.frombuffer(data, "<f8", npts, off).reshape(shape).astype(float)
    off += 8 * npts
    blocks = []
    for lead in ((layout.dim,), (), ()):
        n = npts * (lead[0] if lead else 1)
        blocks.append(np.frombuffer(data, "<c16", n, off).reshape(lead + shape).astype(complex))
        off += 16 * n
    a, b, c = blocks
    bounds = (float(rho.min()), float(rho.max()))
    return SimState(layout, rho, a, b, c, h["t"], bounds), h


def read_checkpoint(path, layout: SpectralLayout | None = None):
    """Read a checkpoint; returns ``(state, header)``.

    The restored density bounds are the extrema of the stored density.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    return decode(data, layout)
