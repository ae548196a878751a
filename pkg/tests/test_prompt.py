import math

import numpy as np
import pytest

from irsr.errors import InvalidParameterError
from irsr.prompt import (LossBreakdown, LossWeights, PromptPair, StubEmbedder, bce_prompt_loss,
                         classify_prob, degradation_loss, sim, total_loss)
from irsr.spectral import spectral_fidelity_loss

E = np.eye(3)


class Lookup:
    """Provider that returns a stored embedding per image key."""

    def __init__(self, table):
        self.table = table

    def image_embed(self, image):
        return self.table[image]

    def text_embed(self, text):
        return self.table[text]


def test_sim_values():
    assert sim(E[0], E[0]) == pytest.approx(math.e)
    assert sim(E[0], E[1]) == pytest.approx(1.0)
    assert sim(E[0], -E[0]) == pytest.approx(1 / math.e)


def test_sim_is_scale_free():
    assert sim(3 * E[0] + E[1], E[0]) == pytest.approx(sim(E[0] + E[1] / 3, 5 * E[0]))


def test_sim_rejects_zero_and_mismatch():
    with pytest.raises(InvalidParameterError):
        sim(np.zeros(3), E[0])
    with pytest.raises(InvalidParameterError):
        sim(E[0], np.ones(2))


def test_probability_equidistant():
    assert classify_prob(E[1], PromptPair(E[0], -E[0])) == 0.5


def test_probability_antipodal():
    p = classify_prob(E[0], PromptPair(E[0], -E[0]))
    assert abs(p - math.e / (math.e + 1 / math.e)) <= 1e-9
    assert p == pytest.approx(0.8807970779778823, abs=1e-12)


def test_swap_symmetry(rng):
    for _ in range(200):
        pos, neg = (v / np.linalg.norm(v) for v in rng.standard_normal((2, 8)))
        img = rng.standard_normal(8)
        a = classify_prob(img, PromptPair(pos, neg))
        assert classify_prob(img, PromptPair(neg, pos)) == 1.0 - a


def test_bce_values():
    assert bce_prompt_loss(0.5, 1) == pytest.approx(math.log(2))
    assert bce_prompt_loss(0.5, 0) == pytest.approx(math.log(2))
    assert bce_prompt_loss(0.880797, 1) == pytest.approx(0.126928, abs=1e-6)


def test_bce_clamps():
    assert bce_prompt_loss(0.0, 1) == pytest.approx(-math.log(1e-7))
    assert bce_prompt_loss(1.0, 0) == pytest.approx(-math.log(1e-7), rel=1e-6)
    assert math.isfinite(bce_prompt_loss(1.0, 1))


def test_bce_rejects_soft_labels():
    with pytest.raises(InvalidParameterError):
        bce_prompt_loss(0.5, 0.3)


def test_degradation_loss_values():
    pair = PromptPair(E[0], -E[0])
    assert degradation_loss(["a"], pair, Lookup({"a": E[1]})) == pytest.approx(1.0)
    assert abs(degradation_loss(["a"], pair, Lookup({"a": E[0]})) - math.exp(-2)) <= 1e-9
    mean = degradation_loss(["a", "b"], pair, Lookup({"a": E[0], "b": E[1]}))
    assert mean == pytest.approx((math.exp(-2) + 1) / 2)


def test_degradation_loss_monotone_in_alignment():
    pair = PromptPair(E[0], E[1])
    angles = np.linspace(0, math.pi / 2, 7)
    values = [degradation_loss(["x"], pair, Lookup({"x": np.array([math.cos(t), math.sin(t), 0])}))
              for t in angles]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_degradation_loss_empty_batch():
    with pytest.raises(InvalidParameterError):
        degradation_loss([], PromptPair(E[0], E[1]), Lookup({}))


def test_prompt_pair_validation():
    with pytest.raises(InvalidParameterError):
        PromptPair(E[0], E[0])
    with pytest.raises(InvalidParameterError):
        PromptPair(2 * E[0], E[1])
    with pytest.raises(InvalidParameterError):
        PromptPair(E[0], np.array([1.0, 0.0]))


def test_total_loss_breakdown_example(rng):
    hr = rng.random((8, 8)) * 255
    sr = hr.copy()
    pair = PromptPair(E[0], -E[0])
    provider = Lookup({})
    provider.image_embed = lambda image: E[1]
    out = total_loss(hr, sr, pair, provider)
    assert isinstance(out, LossBreakdown)
    assert (out.spectral, out.degradation, out.pixel, out.perceptual) == (0.0, pytest.approx(1.0), 0.0, 0.0)
    assert out.total == pytest.approx(1.0)


def test_total_loss_zero_weights(rng):
    hr, sr = rng.random((8, 8)), rng.random((8, 8))
    emb = StubEmbedder()
    pair = PromptPair.from_texts(emb, "sharp", "blurry")
    assert total_loss(hr, sr, pair, emb, LossWeights(0, 0, 0, 0), lambda x: x * 2).total == 0.0


def test_total_loss_recomposes(rng):
    hr, sr = rng.random((16, 16)) * 255, rng.random((16, 16)) * 255
    emb = StubEmbedder(seed=4)
    pair = PromptPair.from_texts(emb, "clean infrared image", "low resolution infrared image")
    w = LossWeights(0.3, 0.1, 1e-3, 0.5)
    out = total_loss(hr, sr, pair, emb, w, feature_extractor=lambda x: x[::2, ::2])
    assert out.spectral == spectral_fidelity_loss(hr, sr)
    assert out.perceptual == pytest.approx(np.mean((hr[::2, ::2] - sr[::2, ::2]) ** 2))
    recomposed = 0.3 * out.spectral + 0.1 * out.degradation + 1e-3 * out.pixel + 0.5 * out.perceptual
    assert abs(out.total - recomposed) <= 1e-12


def test_stub_embedder(rng):
    a, b = StubEmbedder(seed=1), StubEmbedder(seed=1)
    img = rng.random((16, 16)) * 255
    np.testing.assert_array_equal(a.image_embed(img), b.image_embed(img))
    np.testing.assert_array_equal(a.text_embed("x"), b.text_embed("x"))
    assert np.linalg.norm(a.image_embed(img)) == pytest.approx(1.0)
    assert np.linalg.norm(a.text_embed("x")) == pytest.approx(1.0)
    assert not np.allclose(a.text_embed("x"), StubEmbedder(seed=2).text_embed("x"))
    assert not np.allclose(a.text_embed("x"), a.text_embed("y"))
