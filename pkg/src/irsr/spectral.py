"""Fourier-domain analysis and the spectral fidelity loss.

The loss compares two images through their centred, log-compressed and
standardized DFT magnitudes::

    M(I) = normalize(log(1 + |fftshift(DFT(I))|))
    loss = mean((M(hr) - M(sr)) ** 2)

:func:`spectral_fidelity_grad` gives the exact gradient of that loss with
respect to the SR pixels.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ShapeError
from .image import as_image

__all__ = [
    "NORM_EPS",
    "Spectrum",
    "MagnitudeSpectrum",
    "RadialHistogram",
    "dft2",
    "fftshift",
    "ifftshift",
    "log_magnitude",
    "normalize_spectrum",
    "normalized_log_spectrum",
    "spectral_fidelity_loss",
    "spectral_fidelity_grad",
    "radial_spectrum",
    "histogram_csv",
    "comparison_csv",
]

NORM_EPS = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Complex DFT bins; ``shifted`` marks a centred zero frequency."""

    bins: np.ndarray
    shifted: bool = False

    @property
    def shape(self):
        return self.bins.shape


@dataclass(frozen=True)
class MagnitudeSpectrum:
    grid: np.ndarray
    shifted: bool = False
    normalized: bool = False


@dataclass(frozen=True)
class RadialHistogram:
    """Radial aggregate of a centred log-magnitude spectrum.

    ``bin_edges`` has ``len(counts) + 1`` entries in cycles/pixel. Empty
    bins report a mean log magnitude of 0.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    mean_log_magnitude: np.ndarray


def _single_channel(image, name="image"):
    image = as_image(image, name=name)
    if image.ndim == 3:
        if image.shape[2] != 1:
            raise ShapeError(f"{name} must be single channel, got {image.shape[2]} channels")
        image = image[:, :, 0]
    return image


def dft2(image):
    """2-D DFT, ``F(u, v) = sum_x sum_y I(x, y) exp(-2j pi (ux/H + vy/W))``."""
    return Spectrum(np.fft.fft2(_single_channel(image)))


def fftshift(s):
    """Move bin ``(u, v)`` to ``((u + H//2) % H, (v + W//2) % W)``."""
    return Spectrum(np.fft.fftshift(s.bins), shifted=not s.shifted)


def ifftshift(s):
    """Undo :func:`fftshift` for any grid size."""
    return Spectrum(np.fft.ifftshift(s.bins), shifted=not s.shifted)


def log_magnitude(s):
    """``ln(1 + |F|)`` per bin."""
    return MagnitudeSpectrum(np.log1p(np.abs(s.bins)), shifted=s.shifted)


def normalize_spectrum(m):
    """Standardize to zero mean and unit population variance.

    The divisor is ``std + NORM_EPS``, so a constant grid maps to zeros.
    """
    grid = np.asarray(m.grid, dtype=np.float64)
    if grid.size < 2:
        raise InvalidParameterError("normalization needs at least two bins")
    centred = grid - grid.mean()
    std = np.sqrt(np.mean(centred * centred))
    return MagnitudeSpectrum(centred / (std + NORM_EPS), shifted=m.shifted, normalized=True)


def normalized_log_spectrum(image):
    """The full magnitude pipeline: DFT, shift, log compression, normalization."""
    return normalize_spectrum(log_magnitude(fftshift(dft2(image))))


def _check_pair(hr, sr):
    hr = _single_channel(hr, "hr")
    sr = _single_channel(sr, "sr")
    if hr.shape != sr.shape:
        raise ShapeError(f"hr {hr.shape} and sr {sr.shape} differ in shape")
    return hr, sr


def spectral_fidelity_loss(hr, sr):
    """Mean squared difference of the normalized log-magnitude spectra."""
    hr, sr = _check_pair(hr, sr)
    diff = normalized_log_spectrum(hr).grid - normalized_log_spectrum(sr).grid
    return float(np.mean(diff * diff))


def spectral_fidelity_grad(hr, sr):
    """Gradient of :func:`spectral_fidelity_loss` with respect to `sr`.

    Bins with ``|F| = 0`` are non-differentiable; they contribute a zero
    subgradient.
    """
    hr, sr = _check_pair(hr, sr)
    n = sr.size
    target = np.fft.ifftshift(normalized_log_spectrum(hr).grid)

    # forward pass in unshifted order; the shift is a permutation shared by both grids
    f = np.fft.fft2(sr)
    mag = np.abs(f)
    a = np.log1p(mag)
    c = a - a.mean()
    std = np.sqrt(np.mean(c * c))
    s = std + NORM_EPS
    z = c / s

    g_z = -2.0 * (target - z) / n
    g_a = (g_z - g_z.mean()) / s
    if std > 0:
        g_a -= c * np.sum(g_z * c) / (n * std * s * s)
    g_mag = g_a / (1.0 + mag)
    with np.errstate(invalid="ignore", divide="ignore"):
        phase = np.where(mag > 0, f / mag, 0)
    # d|F_k|/dI_p = Re(conj(F_k)/|F_k| * exp(-i theta_kp)), summed by an inverse DFT
    return np.real(np.fft.ifft2(g_mag * phase)) * n


def radial_spectrum(image, nbins=64):
    """Histogram of centred log magnitudes against normalized radius.

    A bin at centred offset ``(u, v)`` has radius ``sqrt((u/H)**2 + (v/W)**2)``;
    radii are split into `nbins` equal intervals over ``[0, sqrt(2)/2]``.
    """
    image = _single_channel(image)
    if nbins < 1:
        raise InvalidParameterError(f"nbins must be >= 1, got {nbins}")
    h, w = image.shape
    logmag = log_magnitude(fftshift(dft2(image))).grid
    u = (np.arange(h) - h // 2)[:, None] / h
    v = (np.arange(w) - w // 2)[None, :] / w
    radius = np.sqrt(u * u + v * v)
    edges = np.linspace(0.0, 0.5 * np.sqrt(2.0), nbins + 1)
    idx = np.clip(np.searchsorted(edges, radius, side="right") - 1, 0, nbins - 1).ravel()
    counts = np.bincount(idx, minlength=nbins)
    sums = np.bincount(idx, weights=logmag.ravel(), minlength=nbins)
    means = np.divide(sums, counts, out=np.zeros(nbins), where=counts > 0)
    return RadialHistogram(edges, counts, means)


def _g17(x):
    return "%.17g" % x


def histogram_csv(hist):
    """CSV text with header ``radius_lo,radius_hi,count,mean_log_mag``."""
    rows = ["radius_lo,radius_hi,count,mean_log_mag"]
    for i in range(len(hist.counts)):
        rows.append(",".join([_g17(hist.bin_edges[i]), _g17(hist.bin_edges[i + 1]),
                              str(int(hist.counts[i])), _g17(hist.mean_log_magnitude[i])]))
    return "\n".join(rows) + "\n"


def comparison_csv(hists):
    """Side-by-side CSV of histograms sharing bin edges.

    `hists` maps a column suffix (e.g. ``"ref"``) to a histogram; each gets a
    ``count_<name>`` and ``mean_log_mag_<name>`` column.
    """
    named = list(hists.items())
    edges = named[0][1].bin_edges
    header = ["radius_lo", "radius_hi"]
    for name, _ in named:
        header += [f"count_{name}", f"mean_log_mag_{name}"]
    rows = [",".join(header)]
    for i in range(len(edges) - 1):
        row = [_g17(edges[i]), _g17(edges[i + 1])]
        for _, h in named:
            row += [str(int(h.counts[i])), _g17(h.mean_log_magnitude[i])]
        rows.append(",".join(row))
    return "\n".join(rows) + "\n"
