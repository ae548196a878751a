"""Numerical toolkit for infrared super-resolution research.

Contourlet analysis, spectral fidelity loss, image quality metrics,
prompt-based degradation losses and reference attention forward passes.
"""

from .contourlet import (
    BINOMIAL_5,
    ContourletCoefficients,
    DirectionalSubbands,
    GaussianKernel,
    LaplacianPyramid,
    contourlet_decompose,
    contourlet_reconstruct,
    crg_fuse,
    dfb_decompose,
    dfb_reconstruct,
    lp_decompose,
    lp_reconstruct,
)
from .errors import (
    DegenerateSizeError,
    FormatError,
    InvalidParameterError,
    IrsrError,
    ShapeError,
    UnsupportedFormatError,
)
from .image import BorderPolicy, bicubic_resize, extend_border, load_pgm, pixel_shuffle, save_pgm
from .metrics import MetricReport, mse, psnr, ssim
from .spectral import dft2, radial_spectrum, spectral_fidelity_grad, spectral_fidelity_loss

__version__ = "0.1.0"
