"""Seeded numerical self-checks run by ``irsr selfcheck``.

Each check compares a fast path against a slow direct evaluation or a
mathematical identity and reports the measured error next to its tolerance.
"""

from dataclasses import dataclass
import math

import numpy as np

from .attention import (cab_forward, glia_forward, random_attention_params,
                        random_glia_params, sab_forward)
from .contourlet import (BINOMIAL_5, contourlet_decompose, contourlet_reconstruct,
                         lp_decompose, lp_reconstruct)
from .metrics import mse, psnr, ssim
from .prompt import PromptPair, classify_prob, degradation_loss
from .spectral import dft2, spectral_fidelity_grad, spectral_fidelity_loss

__all__ = ["CheckResult", "run_checks", "format_result"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    measured: float

    @property
    def passed(self):
        return self.measured <= self.tolerance


def format_result(r):
    status = "PASS" if r.passed else "FAIL"
    return f"{status} {r.name:<28} tol={r.tolerance:.17g} measured={r.measured:.17g}"


def _naive_dft(x):
    h, w = x.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            acc = 0j
            for r in range(h):
                for c in range(w):
                    acc += x[r, c] * complex(math.cos(-2 * math.pi * (u * r / h + v * c / w)),
                                             math.sin(-2 * math.pi * (u * r / h + v * c / w)))
            out[u, v] = acc
    return out


def _check_lp(rng, synthesis):
    worst = 0.0
    for levels in range(1, 5):
        x = rng.random((64, 64)) * 255
        rec = lp_reconstruct(lp_decompose(x, levels), synthesis)
        worst = max(worst, float(np.max(np.abs(rec - x))))
    return CheckResult("lp_perfect_reconstruction", 1e-9, worst)


def _check_contourlet(rng, synthesis):
    worst = 0.0
    for levels in range(1, 5):
        for d in range(1, 5):
            x = rng.random((64, 64)) * 255
            rec = contourlet_reconstruct(contourlet_decompose(x, [d] * levels), synthesis)
            worst = max(worst, float(np.max(np.abs(rec - x))))
    return CheckResult("contourlet_reconstruction", 1e-6, worst)


def _check_dft(rng):
    worst = 0.0
    for _ in range(3):
        x = rng.random((8, 8))
        worst = max(worst, float(np.max(np.abs(dft2(x).bins - _naive_dft(x)))))
    return CheckResult("dft_naive_oracle", 1e-9, worst)


def _check_parseval(rng):
    x = rng.random((32, 48))
    lhs = float(np.sum(np.abs(dft2(x).bins) ** 2))
    rhs = x.size * float(np.sum(x * x))
    return CheckResult("parseval_relative", 1e-6, abs(lhs - rhs) / rhs)


def _check_sf_identity(rng):
    x = rng.random((16, 16))
    return CheckResult("spectral_loss_identity", 0.0, spectral_fidelity_loss(x, x))


def _check_sf_gradient(rng, step=1e-5):
    hr, sr = rng.random((8, 8)), rng.random((8, 8))
    grad = spectral_fidelity_grad(hr, sr)
    worst = 0.0
    for idx in np.ndindex(sr.shape):
        e = np.zeros_like(sr)
        e[idx] = step
        fd = (spectral_fidelity_loss(hr, sr + e) - spectral_fidelity_loss(hr, sr - e)) / (2 * step)
        worst = max(worst, abs(grad[idx] - fd) / max(abs(fd), 1e-12))
    return CheckResult("spectral_grad_vs_fd", 1e-4, worst)


def _check_metrics(rng):
    x = rng.integers(16, 240, size=(32, 32)).astype(float)
    results = [CheckResult("psnr_uniform16", 1e-3, abs(psnr(x, x + 16.0) - 24.0486)),
               CheckResult("ssim_identity", 1e-12, abs(ssim(x, x) - 1.0))]
    a, b = rng.random((32, 32)), rng.random((32, 32))
    naive = sum((p - q) ** 2 for p, q in zip(a.ravel(), b.ravel())) / a.size
    results.append(CheckResult("mse_naive_oracle", 1e-12, abs(mse(a, b) - naive)))
    return results


def _check_attention(rng):
    x = rng.standard_normal((8, 8, 4))
    rows = []
    _, a = sab_forward(x, random_attention_params(rng, 4, heads=2, window=4), return_attn=True)
    rows.append(a)
    _, a = cab_forward(x, random_attention_params(rng, 4, heads=2, alpha=2.0), return_attn=True)
    rows.append(a)
    _, inter = glia_forward(x, random_glia_params(rng, 4, window=4, heads=2), return_intermediates=True)
    rows += [inter["attn_tokens"], inter["attn_joint"]]
    worst = max(float(np.max(np.abs(r.sum(axis=-1) - 1.0))) for r in rows)
    return CheckResult("softmax_row_sums", 1e-12, worst)


class _FixedProvider:
    def __init__(self, emb):
        self.emb = emb

    def image_embed(self, image):
        return self.emb

    def text_embed(self, text):
        raise NotImplementedError


def _check_prompt():
    e = np.eye(3)
    pair = PromptPair(e[0], -e[0])
    err = abs(classify_prob(e[0], pair) - math.e / (math.e + 1 / math.e))
    err = max(err, abs(classify_prob(e[1], pair) - 0.5))
    err = max(err, abs(degradation_loss([None], pair, _FixedProvider(e[0])) - math.exp(-2)))
    return CheckResult("prompt_loss_algebra", 1e-9, err)


def run_checks(seed=0, synthesis_kernel=BINOMIAL_5):
    """Run every check; `synthesis_kernel` replaces the reconstruction kernel."""
    rng = np.random.default_rng(seed)
    results = [
        _check_lp(rng, synthesis_kernel),
        _check_contourlet(rng, synthesis_kernel),
        _check_dft(rng),
        _check_parseval(rng),
        _check_sf_identity(rng),
        _check_sf_gradient(rng),
    ]
    results += _check_metrics(rng)
    results.append(_check_attention(rng))
    results.append(_check_prompt())
    return results
