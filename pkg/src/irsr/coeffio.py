"""Binary ``CRG1`` container for contourlet coefficients.

Layout, all integers little-endian::

    b"CRG1"            magic
    u16                version (1)
    u32 u32 u32        image height, image width, level count L
    u8 * L             direction order of each level, coarsest first
    grid               base
    grid * ...         subbands, levels coarsest first, subband index ascending

where every ``grid`` is ``u32 height, u32 width`` followed by
``height * width`` float64 values in row-major order.
"""

import struct
from pathlib import Path

import numpy as np

from .contourlet import ContourletCoefficients, DirectionalSubbands
from .errors import FormatError, UnsupportedFormatError

__all__ = ["MAGIC", "VERSION", "encode_coefficients", "decode_coefficients",
           "save_coefficients", "load_coefficients"]

MAGIC = b"CRG1"
VERSION = 1

_HEADER = struct.Struct("<4sHIII")
_DIMS = struct.Struct("<II")


def _grid_bytes(grid):
    grid = np.ascontiguousarray(grid, dtype="<f8")
    return _DIMS.pack(*grid.shape) + grid.tobytes()


def encode_coefficients(c, shape=None):
    """Serialize `c`; `shape` defaults to the extent of the finest level."""
    if shape is None:
        shape = c.directional[-1].shape if c.directional else c.base.shape
    parts = [_HEADER.pack(MAGIC, VERSION, shape[0], shape[1], len(c.level_spec)),
             bytes(c.level_spec), _grid_bytes(c.base)]
    for sb in c.directional:
        parts.extend(_grid_bytes(b) for b in sb.subbands)
    return b"".join(parts)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated coefficient file while reading {what}", offset=self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def grid(self, what):
        h, w = _DIMS.unpack(self.take(_DIMS.size, f"{what} dimensions"))
        data = self.take(8 * h * w, what)
        return np.frombuffer(data, dtype="<f8").reshape(h, w).astype(np.float64)


def decode_coefficients(buf):
    """Parse bytes produced by :func:`encode_coefficients`.

    Returns ``(coefficients, (height, width))``.
    """
    r = _Reader(bytes(buf))
    magic, version, height, width, nlevels = _HEADER.unpack(r.take(_HEADER.size, "header"))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise UnsupportedFormatError(f"unsupported CRG version {version}", offset=4)
    level_spec = list(r.take(nlevels, "direction orders"))
    if any(d < 1 for d in level_spec):
        raise FormatError("direction orders must be >= 1", offset=_HEADER.size)
    base = r.grid("base")
    directional = []
    for i, d in enumerate(level_spec):
        subbands = [r.grid(f"level {i} subband {k}") for k in range(2 ** d)]
        try:
            directional.append(DirectionalSubbands(subbands, d))
        except ValueError as exc:
            raise FormatError(f"level {i}: {exc}", offset=r.pos) from None
    if r.pos != len(r.buf):
        raise FormatError(f"{len(r.buf) - r.pos} trailing bytes", offset=r.pos)
    try:
        coeffs = ContourletCoefficients(base, directional, level_spec)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    finest = directional[-1].shape if directional else base.shape
    if finest != (height, width):
        raise FormatError(f"header dims {height}x{width} disagree with finest level {finest}")
    return coeffs, (height, width)


def save_coefficients(c, path):
    Path(path).write_bytes(encode_coefficients(c))


def load_coefficients(path):
    return decode_coefficients(Path(path).read_bytes())[0]
