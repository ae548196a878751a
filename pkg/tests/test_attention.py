import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsr.attention import (AttentionParams, GliaParams, MlpParams, SfnnParams, cab_forward,
                            depthwise_conv3x3, gelu, glia_forward, layer_norm, random_attention_params,
                            random_glia_params, random_sfnn_params, sab_forward, sfnn_forward, softmax,
                            window_merge, window_partition)
from irsr.errors import InvalidParameterError, ShapeError

from oracles import naive_window_attention


def zero_token_glia(rng, channels, window, heads=1, tokens=1):
    p = random_glia_params(rng, channels, window, heads, tokens, gammas=(0, 0, 0, 0))
    p.token_conv = np.zeros_like(p.token_conv)
    return p


def test_softmax_rows(rng):
    x = rng.standard_normal((5, 7)) * 50
    s = softmax(x)
    assert np.max(np.abs(s.sum(axis=-1) - 1)) <= 1e-12
    assert np.all(s >= 0)


def test_softmax_overflow_safe():
    s = softmax(np.array([1000.0, 1000.0, -1000.0]))
    np.testing.assert_allclose(s, [0.5, 0.5, 0.0])


def test_gelu_reference_values():
    np.testing.assert_allclose(gelu(np.array([0.0, 1.0, -1.0])), [0.0, 0.8413447460685429, -0.15865525393145707],
                               rtol=1e-12)


def test_layer_norm_statistics(rng):
    x = rng.standard_normal((6, 8)) * 0.01
    y = layer_norm(x)
    var = x.var(axis=-1)
    assert np.max(np.abs(y.mean(axis=-1))) <= 1e-12
    np.testing.assert_allclose(y.var(axis=-1), var / (var + 1e-5), rtol=1e-9)


def test_layer_norm_large_input_is_unit_variance(rng):
    y = layer_norm(rng.standard_normal((4, 16)) * 1000)
    assert np.max(np.abs(y.var(axis=-1) - 1)) <= 1e-6


def test_window_round_trip(rng):
    x = rng.standard_normal((8, 12, 3))
    w = window_partition(x, 4)
    assert w.shape == (6, 4, 4, 3)
    np.testing.assert_array_equal(w[1], x[0:4, 4:8])
    np.testing.assert_array_equal(window_merge(w, 8, 12), x)


def test_window_not_divisible():
    with pytest.raises(ShapeError):
        window_partition(np.zeros((6, 6, 1)), 4)


def test_params_validation(rng):
    with pytest.raises(ShapeError):
        AttentionParams.identity(6, heads=4)
    with pytest.raises(InvalidParameterError):
        AttentionParams.identity(4, alpha=0)
    with pytest.raises(ShapeError):
        AttentionParams(np.eye(3), np.eye(3), np.eye(4), np.eye(3))


def test_sab_window_one_is_identity(rng):
    x = rng.standard_normal((5, 7, 3))
    out, attn = sab_forward(x, AttentionParams.identity(3, window=1), return_attn=True)
    np.testing.assert_allclose(out, x, atol=1e-15)
    assert np.all(attn == 1)


def test_sab_matches_naive(rng):
    x = rng.standard_normal((8, 8, 4))
    p = random_attention_params(rng, 4, heads=2, window=4)
    expected = naive_window_attention(x, p.q_proj, p.k_proj, p.v_proj, p.out_proj, 2, 4)
    assert np.max(np.abs(sab_forward(x, p) - expected)) <= 1e-10


def test_sab_rows_sum_to_one(rng):
    x = rng.standard_normal((8, 4, 6))
    _, attn = sab_forward(x, random_attention_params(rng, 6, heads=3, window=4), return_attn=True)
    assert attn.shape == (2, 3, 16, 16)
    assert np.max(np.abs(attn.sum(axis=-1) - 1)) <= 1e-12


def test_sab_window_permutation_equivariance(rng):
    x = rng.standard_normal((8, 8, 2))
    p = random_attention_params(rng, 2, window=4)
    w = window_partition(x, 4)
    perm = [2, 0, 3, 1]
    permuted = window_merge(w[perm], 8, 8)
    expected = window_merge(window_partition(sab_forward(x, p), 4)[perm], 8, 8)
    assert np.max(np.abs(sab_forward(permuted, p) - expected)) <= 1e-12


def test_sab_isolates_windows(rng):
    x = rng.standard_normal((4, 8, 2))
    p = random_attention_params(rng, 2, window=4)
    y = x.copy()
    y[:, 4:] += 1.0
    np.testing.assert_allclose(sab_forward(y, p)[:, :4], sab_forward(x, p)[:, :4], atol=1e-15)


def test_cab_large_alpha_averages_channels(rng):
    x = rng.standard_normal((4, 4, 4))
    out, attn = cab_forward(x, AttentionParams.identity(4, heads=2, alpha=1e12), return_attn=True)
    np.testing.assert_allclose(attn, 0.5, atol=1e-9)
    expected = np.repeat(x.reshape(4, 4, 2, 2).mean(axis=-1), 2, axis=-1)
    np.testing.assert_allclose(out, expected, atol=1e-9)


def test_cab_attention_shape(rng):
    x = rng.standard_normal((3, 5, 6))
    _, attn = cab_forward(x, random_attention_params(rng, 6, heads=3, alpha=2.0), return_attn=True)
    assert attn.shape == (3, 2, 2)
    assert np.max(np.abs(attn.sum(axis=-1) - 1)) <= 1e-12


def test_cab_spatial_permutation_equivariance(rng):
    x = rng.standard_normal((6, 5, 4))
    p = random_attention_params(rng, 4, heads=2, alpha=1.5)
    perm = rng.permutation(30)
    flat = x.reshape(30, 4)
    lhs = cab_forward(flat[perm].reshape(6, 5, 4), p).reshape(30, 4)
    rhs = cab_forward(x, p).reshape(30, 4)[perm]
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_sfnn_zero_input(rng):
    p = random_sfnn_params(rng, 3)
    assert not sfnn_forward(np.zeros((4, 4, 3)), p).any()


def test_sfnn_with_delta_kernel(rng):
    c, hidden = 2, 3
    p = random_sfnn_params(rng, c, hidden)
    p.wd = np.zeros((hidden, 3, 3))
    p.wd[:, 1, 1] = 1.0
    x = rng.standard_normal((4, 5, c))
    e = gelu(x @ p.w1)
    np.testing.assert_allclose(sfnn_forward(x, p), (e[..., :hidden] * e[..., hidden:]) @ p.w2, atol=1e-14)


def test_sfnn_odd_expansion():
    with pytest.raises(ShapeError):
        SfnnParams(np.zeros((2, 5)), np.zeros((2, 3, 3)), np.zeros((2, 2)))


def test_depthwise_conv_constant_preserved():
    k = np.full((2, 3, 3), 1 / 9)
    np.testing.assert_allclose(depthwise_conv3x3(np.full((5, 5, 2), 3.0), k), 3.0, atol=1e-14)


def test_glia_neutral_configuration_returns_input(rng):
    x = rng.standard_normal((8, 8, 4))
    for tokens in (1, 2, 4):
        p = zero_token_glia(rng, 4, 4, heads=2, tokens=tokens)
        np.testing.assert_array_equal(glia_forward(x, p), x)


def test_glia_intermediates(rng):
    x = rng.standard_normal((8, 8, 4))
    p = random_glia_params(rng, 4, window=4, heads=2, tokens_per_window=2)
    out, inter = glia_forward(x, p, return_intermediates=True)
    assert out.shape == x.shape
    assert inter["tokens"].shape == (4, 2, 4)
    assert inter["attn_tokens"].shape == (2, 8, 8)
    assert inter["attn_joint"].shape == (4, 2, 18, 18)
    for name in ("attn_tokens", "attn_joint"):
        assert np.max(np.abs(inter[name].sum(axis=-1) - 1)) <= 1e-12
    for name in ("ln1", "ln2", "ln3", "ln4"):
        assert np.max(np.abs(inter[name].mean(axis=-1))) <= 1e-12


def test_glia_tokens_are_window_means(rng):
    x = rng.standard_normal((4, 8, 2))
    p = random_glia_params(rng, 2, window=4)
    p.token_conv = np.zeros((3, 3, 2, 2))
    p.token_conv[1, 1] = np.eye(2)
    _, inter = glia_forward(x, p, return_intermediates=True)
    np.testing.assert_allclose(inter["tokens"][:, 0], [x[:, :4].mean(axis=(0, 1)), x[:, 4:].mean(axis=(0, 1))],
                               atol=1e-14)


def test_glia_validation(rng):
    p = random_glia_params(rng, 2, window=3)
    with pytest.raises(ShapeError):
        GliaParams(p.token_conv, p.token_msa, p.token_mlp, p.joint_msa, p.joint_mlp, window=3,
                   tokens_per_window=2)
    with pytest.raises(ShapeError):
        MlpParams(np.zeros((2, 4)), np.zeros((3, 2)))


def test_forward_passes_are_deterministic():
    def run(seed):
        r = np.random.default_rng(seed)
        x = r.standard_normal((8, 8, 4))
        return glia_forward(x, random_glia_params(r, 4, window=4, heads=2))
    np.testing.assert_array_equal(run(3), run(3))


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([1, 2, 4]), st.integers(1, 3), st.integers(1, 3), st.sampled_from([1, 2]),
       st.integers(0, 2 ** 32 - 1))
def test_all_blocks_preserve_shape(window, ny, nx, heads, seed):
    r = np.random.default_rng(seed)
    c = 2 * heads
    x = r.standard_normal((window * ny, window * nx, c))
    assert sab_forward(x, random_attention_params(r, c, heads, window)).shape == x.shape
    assert cab_forward(x, random_attention_params(r, c, heads, alpha=2.0)).shape == x.shape
    assert sfnn_forward(x, random_sfnn_params(r, c)).shape == x.shape
    assert glia_forward(x, random_glia_params(r, c, window, heads)).shape == x.shape
