"""Image and feature-map plumbing.

Images are plain ``numpy`` arrays of ``float64``: ``(H, W)`` for single
channel data and ``(H, W, C)`` for feature maps, channel innermost.
Quantization to 8 bits happens only in :func:`save_pgm`.
"""

import enum
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidParameterError, ShapeError, UnsupportedFormatError

__all__ = [
    "BorderPolicy",
    "as_image",
    "load_pgm",
    "save_pgm",
    "extend_border",
    "keys_cubic",
    "resize_weights",
    "bicubic_resize",
    "pixel_shuffle",
    "pixel_unshuffle",
]


class BorderPolicy(enum.Enum):
    """How samples outside the image are synthesized.

    ``SYMMETRIC`` mirrors about the edge sample without repeating it, so
    ``[1, 2, 3]`` extended by 2 becomes ``[3, 2, 1, 2, 3, 2, 1]``.
    """

    SYMMETRIC = "symmetric"
    REPLICATE = "replicate"
    ZERO = "zero"

    @property
    def pad_mode(self):
        return {"symmetric": "reflect", "replicate": "edge", "zero": "constant"}[self.value]


def _policy(policy):
    if isinstance(policy, BorderPolicy):
        return policy
    try:
        return BorderPolicy(policy)
    except ValueError:
        raise InvalidParameterError(f"unknown border policy {policy!r}") from None


def as_image(data, *, name="image"):
    """Validate `data` as an image tensor and return it as ``float64``.

    Accepts 2-D ``(H, W)`` or 3-D ``(H, W, C)`` arrays with positive
    extents and finite entries.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim not in (2, 3) or 0 in arr.shape:
        raise ShapeError(f"{name} must be a non-empty (H, W) or (H, W, C) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


# -- PGM I/O ------------------------------------------------------------------

_WHITESPACE = b" \t\n\r\v\f"


def _read_header_token(buf, pos):
    """Return ``(token, next_pos)`` skipping whitespace and ``#`` comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos:pos + 1] not in _WHITESPACE and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of PGM header", offset=start)
    return buf[start:pos], pos


def load_pgm(path):
    """Read a binary (P5) PGM file with ``maxval <= 255``.

    Returns a ``(H, W)`` float array holding the raw sample values.
    """
    path = Path(path)
    buf = path.read_bytes()
    if buf[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (missing P5 magic)", offset=0)
    pos = 2
    fields = []
    for label in ("width", "height", "maxval"):
        token, end = _read_header_token(buf, pos)
        if not token.isdigit():
            raise FormatError(f"{path}: bad {label} field {token!r}", offset=end - len(token))
        fields.append(int(token))
        pos = end
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: zero image dimension", offset=pos)
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: maxval {maxval} out of range", offset=pos)
    if maxval > 255:
        raise UnsupportedFormatError(f"{path}: 16-bit PGM (maxval {maxval}) is not supported")
    if pos >= len(buf) or buf[pos:pos + 1] not in _WHITESPACE:
        raise FormatError(f"{path}: missing whitespace after maxval", offset=pos)
    pos += 1
    expected = width * height
    payload = buf[pos:pos + expected]
    if len(payload) < expected:
        raise FormatError(
            f"{path}: truncated pixel data, expected {expected} bytes, found {len(payload)}",
            offset=pos + len(payload),
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).astype(np.float64)


def quantize(image):
    """Map values to bytes by ``round(clamp(v, 0, 255))`` with halves rounded up."""
    return np.floor(np.clip(image, 0.0, 255.0) + 0.5).astype(np.uint8)


def save_pgm(image, path):
    """Write a single-channel image as an 8-bit P5 PGM."""
    image = as_image(image)
    if image.ndim == 3:
        if image.shape[2] != 1:
            raise UnsupportedFormatError(f"PGM holds one channel, got {image.shape[2]}")
        image = image[:, :, 0]
    height, width = image.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    path = Path(path)
    try:
        path.write_bytes(header + quantize(image).tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


# -- borders ------------------------------------------------------------------

def extend_border(image, radius, policy=BorderPolicy.SYMMETRIC):
    """Pad both spatial axes by `radius` samples according to `policy`."""
    image = np.asarray(image, dtype=np.float64)
    if not isinstance(radius, (int, np.integer)) or radius < 0:
        raise InvalidParameterError(f"radius must be a non-negative integer, got {radius!r}")
    widths = [(radius, radius), (radius, radius)] + [(0, 0)] * (image.ndim - 2)
    return np.pad(image, widths, mode=_policy(policy).pad_mode)


# -- bicubic resampling -------------------------------------------------------

def keys_cubic(x, a=-0.5):
    """Keys cubic convolution kernel."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _output_size(n, scale):
    return int(math.floor(n * scale + 0.5))


def resize_weights(n_in, scale, a=-0.5):
    """Dense ``(n_out, n_in)`` resampling matrix for one axis.

    Sample centres follow the half-pixel convention. For ``scale < 1`` the
    kernel is stretched by ``1/scale`` to suppress aliasing. Taps falling
    outside the signal are folded onto the nearest edge sample and every
    row is normalized to unit sum.
    """
    n_out = _output_size(n_in, scale)
    if n_out < 1:
        raise InvalidParameterError(f"scale {scale} maps size {n_in} to zero")
    stretch = min(scale, 1.0)
    support = 2.0 / stretch
    weights = np.zeros((n_out, n_in))
    for j in range(n_out):
        centre = (j + 0.5) / scale - 0.5
        taps = np.arange(math.floor(centre - support), math.ceil(centre + support) + 1)
        w = keys_cubic((taps - centre) * stretch, a)
        np.add.at(weights[j], np.clip(taps, 0, n_in - 1), w)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights


def bicubic_resize(image, scale):
    """Resize by `scale` with the Keys (a = -0.5) bicubic kernel.

    Output extents are ``round(H*scale) x round(W*scale)``. Downscaling
    widens the kernel (antialiasing), matching the usual bicubic
    degradation used to build LR/HR training pairs.
    """
    image = as_image(image)
    if isinstance(scale, Fraction):
        scale = float(scale)
    if not scale > 0 or not math.isfinite(scale):
        raise InvalidParameterError(f"scale must be positive, got {scale!r}")
    wy = resize_weights(image.shape[0], scale)
    wx = resize_weights(image.shape[1], scale)
    return np.einsum("ij,jk...,lk->il...", wy, image, wx)


# -- pixel shuffle ------------------------------------------------------------

def pixel_shuffle(features, s):
    """Rearrange ``(H, W, s*s*c)`` features into an ``(H*s, W*s, c)`` map.

    Channel ``c_out*s*s + dy*s + dx`` at ``(y, x)`` lands on
    ``(y*s + dy, x*s + dx, c_out)``.
    """
    features = as_image(features, name="features")
    if features.ndim == 2:
        features = features[:, :, None]
    h, w, ch = features.shape
    if s < 1 or ch % (s * s):
        raise ShapeError(f"channel count {ch} is not divisible by s^2 = {s * s}")
    c = ch // (s * s)
    return features.reshape(h, w, c, s, s).transpose(0, 3, 1, 4, 2).reshape(h * s, w * s, c)


def pixel_unshuffle(image, s):
    """Inverse of :func:`pixel_shuffle`."""
    image = as_image(image)
    if image.ndim == 2:
        image = image[:, :, None]
    hs, ws, c = image.shape
    if s < 1 or hs % s or ws % s:
        raise ShapeError(f"spatial dims {hs}x{ws} are not divisible by {s}")
    h, w = hs // s, ws // s
    return image.reshape(h, s, w, s, c).transpose(0, 2, 4, 1, 3).reshape(h, w, c * s * s)
