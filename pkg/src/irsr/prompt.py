"""Prompt-based degradation losses over an abstract embedding provider.

Training with these losses alternates two phases:

1. Prompt refinement. Image encoder and restoration network are frozen;
   the prompt pair is tuned with :func:`bce_prompt_loss` on
   :func:`classify_prob` so that HR images (label 1) score high against the
   positive prompt and LR images (label 0) score low.
2. Network refinement. The prompts are frozen and the restoration network
   is trained on :func:`total_loss`, whose degradation term pulls SR
   outputs towards the positive prompt and away from the negative one.

Encoders are reached only through :class:`EmbeddingProvider`;
:class:`StubEmbedder` is a deterministic stand-in for tests.
"""

from dataclasses import dataclass
import hashlib
import math
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .errors import InvalidParameterError
from .metrics import mse
from .spectral import spectral_fidelity_loss

__all__ = [
    "BCE_CLAMP",
    "EmbeddingProvider",
    "StubEmbedder",
    "PromptPair",
    "LossWeights",
    "LossBreakdown",
    "sim",
    "classify_prob",
    "bce_prompt_loss",
    "degradation_loss",
    "total_loss",
]

BCE_CLAMP = 1e-7


class EmbeddingProvider(Protocol):
    """Image and text encoders mapping into a shared unit sphere."""

    def image_embed(self, image) -> np.ndarray: ...

    def text_embed(self, text: str) -> np.ndarray: ...


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


class StubEmbedder:
    """Deterministic embedder for tests.

    Images are summarized by a handful of intensity and gradient statistics
    that a fixed seeded projection maps onto the unit sphere. Text is hashed
    together with the seed to pick a point on the sphere.
    """

    n_stats = 6

    def __init__(self, seed=0, dim=32):
        if dim < 2:
            raise InvalidParameterError("embedding dimension must be at least 2")
        self.seed = int(seed)
        self.dim = int(dim)
        rng = np.random.default_rng(self.seed)
        self._projection = rng.standard_normal((self.dim, self.n_stats))

    def _stats(self, image):
        x = np.asarray(image, dtype=np.float64)
        if x.ndim == 3:
            x = x.mean(axis=2)
        gy = np.abs(np.diff(x, axis=0)).mean() if x.shape[0] > 1 else 0.0
        gx = np.abs(np.diff(x, axis=1)).mean() if x.shape[1] > 1 else 0.0
        spectrum = np.abs(np.fft.fft2(x - x.mean())) ** 2
        total = spectrum.sum()
        fy = np.abs(np.fft.fftfreq(x.shape[0]))[:, None]
        fx = np.abs(np.fft.fftfreq(x.shape[1]))[None, :]
        high = spectrum[np.maximum(fy, fx) > 0.25].sum() / total if total > 0 else 0.0
        return np.array([x.mean() / 255.0, x.std() / 255.0, gx / 255.0, gy / 255.0, high, 1.0])

    def image_embed(self, image):
        return _unit(self._projection @ self._stats(image))

    def text_embed(self, text):
        digest = hashlib.sha256(f"{self.seed}\x00{text}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return _unit(rng.standard_normal(self.dim))


@dataclass(frozen=True)
class PromptPair:
    """Embedded positive (high quality) and negative (degraded) prompts."""

    positive: np.ndarray
    negative: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positive, dtype=np.float64)
        neg = np.asarray(self.negative, dtype=np.float64)
        if pos.shape != neg.shape or pos.ndim != 1:
            raise InvalidParameterError("prompt embeddings must be vectors of equal length")
        for name, v in (("positive", pos), ("negative", neg)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise InvalidParameterError(f"{name} prompt embedding is not unit norm")
        if np.array_equal(pos, neg):
            raise InvalidParameterError("positive and negative prompts are identical")
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negative", neg)

    @classmethod
    def from_texts(cls, provider, positive, negative):
        return cls(provider.text_embed(positive), provider.text_embed(negative))


def sim(image_emb, text_emb):
    """``exp(cos(image_emb, text_emb))``."""
    a = np.asarray(image_emb, dtype=np.float64)
    b = np.asarray(text_emb, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidParameterError(f"embedding sizes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise InvalidParameterError("cannot compare a zero embedding")
    cos = float(np.dot(a, b) / (na * nb))
    return math.exp(min(1.0, max(-1.0, cos)))


def classify_prob(image_emb, prompts):
    """Probability that the image matches the positive prompt."""
    s_pos = sim(image_emb, prompts.positive)
    s_neg = sim(image_emb, prompts.negative)
    # the larger share is divided out and the smaller one taken as its complement,
    # so swapping the prompts maps p to exactly 1 - p
    if s_pos >= s_neg:
        return s_pos / (s_neg + s_pos)
    return 1.0 - s_neg / (s_neg + s_pos)


def bce_prompt_loss(y_hat, y):
    """Binary cross-entropy with ``y_hat`` clamped to ``[1e-7, 1 - 1e-7]``."""
    if y not in (0, 1):
        raise InvalidParameterError(f"label must be 0 or 1, got {y!r}")
    p = min(max(float(y_hat), BCE_CLAMP), 1.0 - BCE_CLAMP)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def degradation_loss(images: Sequence, prompts: PromptPair, provider: EmbeddingProvider):
    """Batch mean of ``SIM(I, T_neg) / SIM(I, T_pos)``."""
    if len(images) == 0:
        raise InvalidParameterError("degradation loss needs at least one image")
    total = 0.0
    for image in images:
        emb = provider.image_embed(image)
        total += sim(emb, prompts.negative) / sim(emb, prompts.positive)
    return total / len(images)


@dataclass(frozen=True)
class LossWeights:
    spectral: float = 1.0
    degradation: float = 1.0
    pixel: float = 1.0
    perceptual: float = 1.0


@dataclass(frozen=True)
class LossBreakdown:
    """Unweighted terms and the weighted total."""

    spectral: float
    degradation: float
    pixel: float
    perceptual: float
    total: float


def total_loss(hr, sr, prompts, provider, weights=LossWeights(),
               feature_extractor: Optional[Callable] = None):
    """Weighted sum of spectral fidelity, degradation, pixel and perceptual terms.

    The perceptual term is the MSE between ``feature_extractor`` outputs and
    is zero when no extractor is supplied.
    """
    terms = {
        "spectral": spectral_fidelity_loss(hr, sr),
        "degradation": degradation_loss([sr], prompts, provider),
        "pixel": mse(hr, sr),
        "perceptual": 0.0,
    }
    if feature_extractor is not None:
        fh = np.asarray(feature_extractor(hr), dtype=np.float64)
        fs = np.asarray(feature_extractor(sr), dtype=np.float64)
        terms["perceptual"] = float(np.mean((fh - fs) ** 2))
    total = sum(getattr(weights, name) * value for name, value in terms.items())
    return LossBreakdown(total=total, **terms)
