"""Contourlet decomposition: Laplacian pyramid followed by directional filter banks.

The pyramid uses a separable binomial kernel ``h`` for analysis (filter then
keep every second sample) and ``2h`` for synthesis (zero-stuff then filter).
Each high-pass layer is split into ``2**d`` angular subbands by ideal wedge
masks in the DFT domain. The masks tile the frequency plane, so summing the
subbands restores the layer and the whole transform reconstructs perfectly
up to floating-point rounding.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.special import expit

from .errors import DegenerateSizeError, InvalidParameterError, ShapeError
from .image import BorderPolicy, as_image

__all__ = [
    "GaussianKernel",
    "BINOMIAL_5",
    "DEFAULT_LEVEL_SPEC",
    "LaplacianPyramid",
    "DirectionalSubbands",
    "ContourletCoefficients",
    "GateParams",
    "gaussian_downsample",
    "upsample_filter",
    "laplacian_level",
    "lp_decompose",
    "lp_reconstruct",
    "wedge_map",
    "dfb_decompose",
    "dfb_reconstruct",
    "contourlet_decompose",
    "contourlet_reconstruct",
    "crg_fuse",
]

DEFAULT_LEVEL_SPEC = (3, 3, 3, 3)


@dataclass(frozen=True)
class GaussianKernel:
    """Odd-length, symmetric, unit-sum 1-D low-pass filter."""

    taps: tuple

    def __post_init__(self):
        taps = tuple(float(t) for t in self.taps)
        object.__setattr__(self, "taps", taps)
        n = len(taps)
        if n % 2 == 0:
            raise InvalidParameterError(f"kernel length must be odd, got {n}")
        if abs(math.fsum(taps) - 1.0) > 1e-12:
            raise InvalidParameterError(f"kernel taps must sum to 1, got {math.fsum(taps)!r}")
        if any(taps[i] != taps[n - 1 - i] for i in range(n)):
            raise InvalidParameterError("kernel must be symmetric")

    @property
    def radius(self):
        return len(self.taps) // 2

    def array(self):
        return np.array(self.taps)


BINOMIAL_5 = GaussianKernel((1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16))


def _filter_axis(x, taps, axis, policy):
    """Convolve `x` with the 1-D `taps` along `axis` (output keeps its size)."""
    r = len(taps) // 2
    n = x.shape[axis]
    widths = [(0, 0)] * x.ndim
    widths[axis] = (r, r)
    padded = np.pad(x, widths, mode=BorderPolicy(policy).pad_mode)
    out = np.zeros_like(x)
    for t, w in enumerate(taps):
        # convolution: y[i] = sum_t h[t] x[i + r - t]
        start = 2 * r - t
        out += w * np.take(padded, np.arange(start, start + n), axis=axis)
    return out


def gaussian_downsample(x, h=BINOMIAL_5, policy=BorderPolicy.SYMMETRIC):
    """Low-pass with ``h`` along both axes, then keep samples at even indices.

    Output extents are ``ceil(H/2) x ceil(W/2)``; a trailing channel axis is
    processed independently.
    """
    x = as_image(x)
    if x.shape[0] == 1 and x.shape[1] == 1:
        raise DegenerateSizeError("cannot downsample a 1x1 image")
    taps = h.taps
    y = _filter_axis(_filter_axis(x, taps, 0, policy), taps, 1, policy)
    return y[::2, ::2]


def _stuff(g, n, axis):
    shape = list(g.shape)
    shape[axis] = n
    out = np.zeros(shape)
    idx = [slice(None)] * g.ndim
    idx[axis] = slice(0, n, 2)
    out[tuple(idx)] = g
    return out


def upsample_filter(g, shape, h=BINOMIAL_5):
    """Interpolate the coarse grid `g` back onto a parent of size `shape`.

    Zeros are inserted at odd positions and the result is filtered with
    ``2h`` per axis. Mirror extension keeps the even/odd phase of the
    zero-stuffed signal intact at the borders, so constants are reproduced
    exactly everywhere.
    """
    g = np.asarray(g, dtype=np.float64)
    ph, pw = int(shape[0]), int(shape[1])
    if g.shape[:2] != ((ph + 1) // 2, (pw + 1) // 2):
        raise ShapeError(f"coarse grid {g.shape[:2]} does not decimate parent {(ph, pw)}")
    taps = tuple(2.0 * t for t in h.taps)
    y = _filter_axis(_stuff(g, ph, 0), taps, 0, BorderPolicy.SYMMETRIC)
    return _filter_axis(_stuff(y, pw, 1), taps, 1, BorderPolicy.SYMMETRIC)


def laplacian_level(x_prev, g_i, h=BINOMIAL_5):
    """Band-pass residual ``x_prev - upsample_filter(g_i)``."""
    x_prev = as_image(x_prev)
    return x_prev - upsample_filter(g_i, x_prev.shape, h)


@dataclass
class LaplacianPyramid:
    """High-pass layers ordered finest first, plus the low-pass residual."""

    levels: list
    base: np.ndarray

    def __post_init__(self):
        shape = None
        for layer in self.levels:
            if shape is not None and layer.shape[:2] != ((shape[0] + 1) // 2, (shape[1] + 1) // 2):
                raise ShapeError(f"level of shape {layer.shape} breaks the halving chain")
            shape = layer.shape
        if shape is not None and self.base.shape[:2] != ((shape[0] + 1) // 2, (shape[1] + 1) // 2):
            raise ShapeError(f"base of shape {self.base.shape} does not follow the last level")

    @property
    def size(self):
        return sum(layer.size for layer in self.levels) + self.base.size


def lp_decompose(x, levels, h=BINOMIAL_5, policy=BorderPolicy.SYMMETRIC):
    """Laplacian pyramid with `levels` band-pass layers."""
    x = as_image(x)
    if levels < 0:
        raise InvalidParameterError(f"levels must be >= 0, got {levels}")
    if min(x.shape[:2]) < 2 ** levels:
        raise DegenerateSizeError(
            f"{x.shape[0]}x{x.shape[1]} image is too small for {levels} pyramid levels"
        )
    layers = []
    cur = x
    for _ in range(levels):
        g = gaussian_downsample(cur, h, policy)
        layers.append(laplacian_level(cur, g, h))
        cur = g
    return LaplacianPyramid(layers, cur)


def lp_reconstruct(p, h=BINOMIAL_5):
    """Collapse a pyramid: ``x_{i-1} = L_i + upsample_filter(x_i)`` from the base up."""
    cur = p.base
    for layer in reversed(p.levels):
        cur = layer + upsample_filter(cur, layer.shape, h)
    return cur


# -- directional filter bank --------------------------------------------------

@lru_cache(maxsize=64)
def _wedge_map_cached(height, width, d):
    nwedges = 2 ** d
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    theta = np.mod(np.arctan2(fy, fx), np.pi)
    # ceil(.) - 1 puts a bin lying on a boundary into the lower-indexed wedge
    k = np.ceil(theta / (np.pi / nwedges) - 1e-9).astype(int) - 1
    k = np.clip(k, 0, nwedges - 1)
    # point-reflection partner of every bin; Nyquist rows/cols map to themselves
    ry = (-np.arange(height)) % height
    rx = (-np.arange(width)) % width
    k = np.minimum(k, k[ry][:, rx])
    k.setflags(write=False)
    return k


def wedge_map(shape, d):
    """Wedge index of every DFT bin for direction order `d`.

    The ``2**d`` wedges are equal angular sectors of ``[0, pi)``; a bin and
    its point reflection always share a wedge, so each subband is real.
    The DC bin and bins on a boundary belong to the lower index.
    """
    if d < 1:
        raise InvalidParameterError(f"direction order must be >= 1, got {d}")
    return _wedge_map_cached(int(shape[0]), int(shape[1]), int(d))


@dataclass
class DirectionalSubbands:
    """``2**order`` directional subbands of one band-pass layer."""

    subbands: list
    order: int = field(default=None)

    def __post_init__(self):
        n = len(self.subbands)
        if n < 2 or n & (n - 1):
            raise ShapeError(f"subband count must be a power of two >= 2, got {n}")
        if self.order is None:
            self.order = n.bit_length() - 1
        elif 2 ** self.order != n:
            raise ShapeError(f"order {self.order} implies {2 ** self.order} subbands, got {n}")
        shapes = {b.shape for b in self.subbands}
        if len(shapes) != 1:
            raise ShapeError(f"subbands have mismatched shapes {sorted(shapes)}")

    @property
    def count(self):
        return len(self.subbands)

    @property
    def shape(self):
        return self.subbands[0].shape


def dfb_decompose(layer, d):
    """Split `layer` into ``2**d`` directional subbands via DFT wedge masks."""
    layer = as_image(layer, name="layer")
    if layer.ndim != 2:
        raise ShapeError("directional filtering expects a single-channel layer")
    k = wedge_map(layer.shape, d)
    spectrum = np.fft.fft2(layer)
    subbands = [np.fft.ifft2(np.where(k == i, spectrum, 0)).real for i in range(2 ** d)]
    return DirectionalSubbands(subbands, d)


def dfb_reconstruct(s):
    """Sum of the subbands (the wedge masks form a partition of unity)."""
    shapes = {b.shape for b in s.subbands}
    if len(shapes) != 1:
        raise ShapeError(f"subbands have mismatched shapes {sorted(shapes)}")
    return np.sum(s.subbands, axis=0)


# -- contourlet ---------------------------------------------------------------

@dataclass
class ContourletCoefficients:
    """Low-pass base plus directional subbands per level, coarsest level first.

    ``level_spec[i]`` is the direction order of ``directional[i]``.
    """

    base: np.ndarray
    directional: list
    level_spec: list

    def __post_init__(self):
        self.level_spec = [int(d) for d in self.level_spec]
        if len(self.directional) != len(self.level_spec):
            raise ShapeError(
                f"{len(self.directional)} directional levels but level_spec has {len(self.level_spec)}"
            )
        for sb, d in zip(self.directional, self.level_spec):
            if sb.count != 2 ** d:
                raise ShapeError(f"level with order {d} holds {sb.count} subbands")

    @property
    def subband_count(self):
        return sum(sb.count for sb in self.directional)

    @property
    def size(self):
        return self.base.size + sum(sb.count * sb.subbands[0].size for sb in self.directional)

    def arrays(self):
        """Every coefficient grid, base first then levels coarse to fine."""
        out = [self.base]
        for sb in self.directional:
            out.extend(sb.subbands)
        return out


def contourlet_decompose(x, level_spec=DEFAULT_LEVEL_SPEC, h=BINOMIAL_5,
                         policy=BorderPolicy.SYMMETRIC):
    """Pyramid with ``len(level_spec)`` levels, each layer split directionally.

    `level_spec` lists direction orders from the coarsest level to the finest.
    """
    x = as_image(x)
    if x.ndim != 2:
        raise ShapeError("contourlet decomposition expects a single-channel image")
    level_spec = [int(d) for d in level_spec]
    if not level_spec:
        raise InvalidParameterError("level_spec must name at least one level")
    pyramid = lp_decompose(x, len(level_spec), h, policy)
    coarse_first = pyramid.levels[::-1]
    directional = [dfb_decompose(layer, d) for layer, d in zip(coarse_first, level_spec)]
    return ContourletCoefficients(pyramid.base, directional, level_spec)


def contourlet_reconstruct(c, h=BINOMIAL_5):
    """Inverse of :func:`contourlet_decompose`."""
    layers = [dfb_reconstruct(sb) for sb in c.directional]
    return lp_reconstruct(LaplacianPyramid(layers[::-1], c.base), h)


# -- gated fusion -------------------------------------------------------------

@dataclass
class GateParams:
    """Affine map ``z = x @ weight + bias`` over the channel axis."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = np.atleast_2d(np.asarray(self.weight, dtype=np.float64))
        self.bias = np.atleast_1d(np.asarray(self.bias, dtype=np.float64))
        c = self.weight.shape[0]
        if self.weight.shape != (c, c) or self.bias.shape != (c,):
            raise ShapeError(f"gate weight {self.weight.shape} / bias {self.bias.shape} mismatch")


def crg_fuse(spatial, spectral, glia, gate):
    """Gated residual fusion ``spatial + sigmoid(affine(glia)) * spectral``."""
    spatial = as_image(spatial, name="spatial")
    spectral = as_image(spectral, name="spectral")
    glia = as_image(glia, name="glia")
    if not spatial.shape == spectral.shape == glia.shape:
        raise ShapeError(
            f"fusion inputs differ in shape: {spatial.shape}, {spectral.shape}, {glia.shape}"
        )
    flat = glia if glia.ndim == 3 else glia[:, :, None]
    if flat.shape[2] != gate.weight.shape[0]:
        raise ShapeError(f"gate expects {gate.weight.shape[0]} channels, got {flat.shape[2]}")
    with np.errstate(invalid="ignore"):
        g = expit(flat @ gate.weight + gate.bias).reshape(spatial.shape)
    return spatial + g * spectral
