"""Forward-only NumPy reference passes for the attention blocks.

Feature maps are ``(H, W, C)`` float arrays. Projections act on the channel
axis as ``x @ W`` and no block carries biases. The passes are meant for
checking shapes and invariants at toy sizes, not for training.

Blocks
------
sab_forward
    Multi-head self-attention inside non-overlapping ``k x k`` windows.
cab_forward
    Transposed (channel) attention: a ``(C/h) x (C/h)`` attention map per
    head built from channel inner products over all positions.
sfnn_forward
    GELU expansion, channel split, depth-wise 3x3 gate, projection.
glia_forward
    Per-window tokens mixed globally, concatenated with the window tokens
    for a joint attention stage, then upsampled back onto the map.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import erf

from .errors import InvalidParameterError, ShapeError
from .image import BorderPolicy, as_image

__all__ = [
    "LN_EPS",
    "AttentionParams",
    "SfnnParams",
    "MlpParams",
    "GliaParams",
    "softmax",
    "layer_norm",
    "gelu",
    "window_partition",
    "window_merge",
    "multi_head_attention",
    "sab_forward",
    "cab_forward",
    "depthwise_conv3x3",
    "conv3x3",
    "sfnn_forward",
    "mlp",
    "glia_forward",
    "random_attention_params",
    "random_sfnn_params",
    "random_glia_params",
]

LN_EPS = 1e-5


def softmax(x, axis=-1):
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def layer_norm(x, eps=LN_EPS):
    """Normalize over the last axis (no affine parameters)."""
    mu = x.mean(axis=-1, keepdims=True)
    var = np.mean((x - mu) ** 2, axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps)


def gelu(x):
    """Exact (erf-based) GELU."""
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


# -- parameter blocks ---------------------------------------------------------

@dataclass
class AttentionParams:
    """Projection matrices and hyper-parameters for one attention layer.

    ``alpha`` scales the channel attention logits; ``window`` is the side of
    the square windows used by the spatial attention block.
    """

    q_proj: np.ndarray
    k_proj: np.ndarray
    v_proj: np.ndarray
    out_proj: np.ndarray
    heads: int = 1
    alpha: float = 1.0
    window: int = 1

    def __post_init__(self):
        mats = [np.asarray(m, dtype=np.float64) for m in
                (self.q_proj, self.k_proj, self.v_proj, self.out_proj)]
        self.q_proj, self.k_proj, self.v_proj, self.out_proj = mats
        c = mats[0].shape[0]
        if any(m.shape != (c, c) for m in mats):
            raise ShapeError(f"projections must all be {c}x{c}")
        if self.heads < 1 or c % self.heads:
            raise ShapeError(f"{c} channels cannot be split into {self.heads} heads")
        if not self.alpha > 0:
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")
        if self.window < 1:
            raise InvalidParameterError(f"window must be positive, got {self.window}")

    @property
    def channels(self):
        return self.q_proj.shape[0]

    @classmethod
    def identity(cls, channels, heads=1, window=1, alpha=1.0):
        eye = np.eye(channels)
        return cls(eye, eye, eye, eye, heads=heads, alpha=alpha, window=window)


@dataclass
class SfnnParams:
    """``w1``: C x 2C' expansion, ``wd``: C' x 3 x 3 depth-wise, ``w2``: C' x C."""

    w1: np.ndarray
    wd: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        self.w1, self.wd, self.w2 = (np.asarray(m, dtype=np.float64)
                                     for m in (self.w1, self.wd, self.w2))
        expanded = self.w1.shape[1]
        if expanded % 2:
            raise ShapeError(f"expansion width {expanded} must be even for the channel split")
        half = expanded // 2
        if self.wd.shape != (half, 3, 3):
            raise ShapeError(f"depth-wise kernels must be ({half}, 3, 3), got {self.wd.shape}")
        if self.w2.shape != (half, self.w1.shape[0]):
            raise ShapeError(f"projection must be ({half}, {self.w1.shape[0]}), got {self.w2.shape}")


@dataclass
class MlpParams:
    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        if self.w2.shape != self.w1.shape[::-1]:
            raise ShapeError(f"mlp weights {self.w1.shape} and {self.w2.shape} do not chain")


@dataclass
class GliaParams:
    """Parameters of the global-local interactive attention block.

    ``token_conv`` has shape ``(3, 3, C, C)``. The token stage mixes all
    ``n * L`` tokens with ``token_msa``/``token_mlp``; the joint stage runs
    ``joint_msa``/``joint_mlp`` inside each window over its ``k*k + L``
    tokens. ``gammas`` scale the four residual updates in that order.
    """

    token_conv: np.ndarray
    token_msa: AttentionParams
    token_mlp: MlpParams
    joint_msa: AttentionParams
    joint_mlp: MlpParams
    window: int
    tokens_per_window: int = 1
    gammas: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        self.token_conv = np.asarray(self.token_conv, dtype=np.float64)
        c = self.token_msa.channels
        if self.token_conv.shape != (3, 3, c, c):
            raise ShapeError(f"token conv must be (3, 3, {c}, {c}), got {self.token_conv.shape}")
        if self.joint_msa.channels != c:
            raise ShapeError("token and joint stages disagree on the channel count")
        if self.tokens_per_window < 1:
            raise InvalidParameterError("tokens_per_window must be >= 1")
        if (self.window * self.window) % self.tokens_per_window:
            raise ShapeError(
                f"{self.window}x{self.window} window cannot pool into {self.tokens_per_window} tokens"
            )
        self.gammas = tuple(float(g) for g in self.gammas)
        if len(self.gammas) != 4:
            raise InvalidParameterError("expected four gamma scaling factors")


# -- windows ------------------------------------------------------------------

def _feature_map(x):
    x = as_image(x, name="feature map")
    return x if x.ndim == 3 else x[:, :, None]


def window_partition(x, k):
    """Split ``(H, W, C)`` into ``(H/k * W/k, k, k, C)`` windows, row-major order."""
    x = _feature_map(x)
    h, w, c = x.shape
    if k < 1 or h % k or w % k:
        raise ShapeError(f"{h}x{w} map is not divisible into {k}x{k} windows")
    return x.reshape(h // k, k, w // k, k, c).transpose(0, 2, 1, 3, 4).reshape(-1, k, k, c)


def window_merge(windows, height, width):
    """Inverse of :func:`window_partition`."""
    n, k, _, c = windows.shape
    if n != (height // k) * (width // k) or height % k or width % k:
        raise ShapeError(f"{n} windows of size {k} do not tile {height}x{width}")
    return (windows.reshape(height // k, width // k, k, k, c)
            .transpose(0, 2, 1, 3, 4).reshape(height, width, c))


# -- attention ----------------------------------------------------------------

def _split_heads(t, heads):
    *lead, n, c = t.shape
    return np.swapaxes(t.reshape(*lead, n, heads, c // heads), -2, -3)


def _merge_heads(t):
    *lead, h, n, d = t.shape
    return np.swapaxes(t, -2, -3).reshape(*lead, n, h * d)


def multi_head_attention(tokens, p):
    """Scaled dot-product self-attention over the second-to-last axis.

    Returns ``(output, weights)`` with weights shaped ``(..., heads, N, N)``.
    """
    d = p.channels // p.heads
    q = _split_heads(tokens @ p.q_proj, p.heads)
    k = _split_heads(tokens @ p.k_proj, p.heads)
    v = _split_heads(tokens @ p.v_proj, p.heads)
    attn = softmax(q @ np.swapaxes(k, -1, -2) / math.sqrt(d))
    return _merge_heads(attn @ v) @ p.out_proj, attn


def sab_forward(x, p, return_attn=False):
    """Window self-attention; output has the shape of `x`."""
    x = _feature_map(x)
    h, w, c = x.shape
    if c != p.channels:
        raise ShapeError(f"feature map has {c} channels, params expect {p.channels}")
    k = p.window
    windows = window_partition(x, k).reshape(-1, k * k, c)
    y, attn = multi_head_attention(windows, p)
    out = window_merge(y.reshape(-1, k, k, c), h, w)
    return (out, attn) if return_attn else out


def cab_forward(x, p, return_attn=False):
    """Channel attention ``softmax(Q^T K / alpha)`` applied along channels of V."""
    x = _feature_map(x)
    h, w, c = x.shape
    if c != p.channels:
        raise ShapeError(f"feature map has {c} channels, params expect {p.channels}")
    t = x.reshape(h * w, c)
    q = _split_heads(t @ p.q_proj, p.heads)     # (heads, HW, d)
    k = _split_heads(t @ p.k_proj, p.heads)
    v = _split_heads(t @ p.v_proj, p.heads)
    attn = softmax(np.swapaxes(q, -1, -2) @ k / p.alpha)  # (heads, d, d)
    y = v @ np.swapaxes(attn, -1, -2)
    out = (_merge_heads(y) @ p.out_proj).reshape(h, w, c)
    return (out, attn) if return_attn else out


# -- convolutions and feed-forward ---------------------------------------------

def depthwise_conv3x3(x, kernels, policy=BorderPolicy.SYMMETRIC):
    """Per-channel 3x3 cross-correlation; `kernels` is ``(C, 3, 3)``."""
    x = _feature_map(x)
    h, w, _ = x.shape
    padded = np.pad(x, ((1, 1), (1, 1), (0, 0)), mode=BorderPolicy(policy).pad_mode)
    out = np.zeros_like(x)
    for dy in range(3):
        for dx in range(3):
            out += padded[dy:dy + h, dx:dx + w, :] * kernels[:, dy, dx]
    return out


def conv3x3(x, weights, policy=BorderPolicy.SYMMETRIC):
    """Dense 3x3 cross-correlation with ``(3, 3, C_in, C_out)`` weights."""
    x = _feature_map(x)
    h, w, _ = x.shape
    padded = np.pad(x, ((1, 1), (1, 1), (0, 0)), mode=BorderPolicy(policy).pad_mode)
    out = np.zeros((h, w, weights.shape[3]))
    for dy in range(3):
        for dx in range(3):
            out += padded[dy:dy + h, dx:dx + w, :] @ weights[dy, dx]
    return out


def sfnn_forward(x, p):
    """Spatial gated feed-forward: ``W2 (X1 * dw3x3(X2))`` with ``[X1, X2] = GELU(W1 x)``."""
    x = _feature_map(x)
    if x.shape[2] != p.w1.shape[0]:
        raise ShapeError(f"feature map has {x.shape[2]} channels, params expect {p.w1.shape[0]}")
    expanded = gelu(x @ p.w1)
    half = expanded.shape[2] // 2
    gated = expanded[:, :, :half] * depthwise_conv3x3(expanded[:, :, half:], p.wd)
    return gated @ p.w2


def mlp(x, p):
    return gelu(x @ p.w1) @ p.w2


def glia_forward(x, p, return_intermediates=False):
    """Global-local interactive attention.

    With ``return_intermediates`` the second return value is a dict holding
    the pooled ``tokens``, the layer-norm outputs ``ln1``..``ln4`` and the
    attention weights ``attn_tokens``/``attn_joint``.
    """
    x = _feature_map(x)
    h, w, c = x.shape
    if c != p.token_msa.channels:
        raise ShapeError(f"feature map has {c} channels, params expect {p.token_msa.channels}")
    k, ntok = p.window, p.tokens_per_window
    g1, g2, g3, g4 = p.gammas
    area = k * k

    # local tokens: 3x3 conv, then average-pool each window into ntok tokens
    conv = window_partition(conv3x3(x, p.token_conv), k).reshape(-1, area, c)
    nwin = conv.shape[0]
    tokens = conv.reshape(nwin, ntok, area // ntok, c).mean(axis=2)

    # global mixing across all windows' tokens
    t = tokens.reshape(nwin * ntok, c)
    ln1 = layer_norm(t)
    a1, attn_tokens = multi_head_attention(ln1, p.token_msa)
    t = t + g1 * a1
    ln2 = layer_norm(t)
    t = t + g2 * mlp(ln2, p.token_mlp)

    # joint local/global stage inside each window
    local = window_partition(x, k).reshape(nwin, area, c)
    joint = np.concatenate([local, t.reshape(nwin, ntok, c)], axis=1)
    ln3 = layer_norm(joint)
    a3, attn_joint = multi_head_attention(ln3, p.joint_msa)
    joint = joint + g3 * a3
    ln4 = layer_norm(joint)
    joint = joint + g4 * mlp(ln4, p.joint_mlp)

    local, tokens_out = joint[:, :area], joint[:, area:]
    # nearest-neighbour upsampling: token j covers the j-th run of area/ntok positions
    upsampled = np.repeat(tokens_out, area // ntok, axis=1)
    out = window_merge((local + upsampled).reshape(nwin, k, k, c), h, w)
    if not return_intermediates:
        return out
    return out, {
        "tokens": tokens, "ln1": ln1, "ln2": ln2, "ln3": ln3, "ln4": ln4,
        "attn_tokens": attn_tokens, "attn_joint": attn_joint,
    }


# -- random initialisation ------------------------------------------------------

def _gauss(rng, *shape):
    return rng.standard_normal(shape) / math.sqrt(shape[0])


def random_attention_params(rng, channels, heads=1, window=1, alpha=1.0):
    return AttentionParams(*(_gauss(rng, channels, channels) for _ in range(4)),
                           heads=heads, alpha=alpha, window=window)


def random_sfnn_params(rng, channels, hidden=None):
    hidden = hidden or 2 * channels
    return SfnnParams(_gauss(rng, channels, 2 * hidden), _gauss(rng, hidden, 3, 3) * 0.5,
                      _gauss(rng, hidden, channels))


def random_glia_params(rng, channels, window, heads=1, tokens_per_window=1,
                       gammas=(1.0, 1.0, 1.0, 1.0), hidden=None):
    hidden = hidden or 2 * channels
    conv = rng.standard_normal((3, 3, channels, channels)) / math.sqrt(9 * channels)
    return GliaParams(
        token_conv=conv,
        token_msa=random_attention_params(rng, channels, heads),
        token_mlp=MlpParams(_gauss(rng, channels, hidden), _gauss(rng, hidden, channels)),
        joint_msa=random_attention_params(rng, channels, heads),
        joint_mlp=MlpParams(_gauss(rng, channels, hidden), _gauss(rng, hidden, channels)),
        window=window,
        tokens_per_window=tokens_per_window,
        gammas=gammas,
    )
