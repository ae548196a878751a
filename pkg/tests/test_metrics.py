import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsr.errors import ShapeError
from irsr.metrics import MetricReport, gaussian_window, mse, psnr, report, ssim, ssim_map

from oracles import naive_ssim


def test_mse_small_example():
    assert mse([[0, 0], [0, 4]], [[1, 0], [0, 0]]) == pytest.approx(17 / 4)


def test_mse_uniform_offset():
    assert mse(np.zeros((5, 5)), np.full((5, 5), 16.0)) == 256.0


def test_mse_naive(rng):
    a, b = rng.random((13, 9)), rng.random((13, 9))
    naive = sum((p - q) ** 2 for p, q in zip(a.ravel(), b.ravel())) / a.size
    assert abs(mse(a, b) - naive) <= 1e-12


def test_psnr_uniform_sixteen():
    x = np.full((32, 32), 100.0)
    assert abs(psnr(x, x + 16) - 24.0486) <= 1e-3


def test_psnr_halving_error_adds_6db(rng):
    x = rng.random((16, 16)) * 255
    d = rng.standard_normal((16, 16)) * 10
    assert psnr(x, x + d / 2) - psnr(x, x + d) == pytest.approx(20 * math.log10(2), abs=1e-9)


def test_psnr_infinite_on_identity(rng):
    x = rng.random((8, 8))
    assert psnr(x, x) == math.inf


def test_psnr_peak_scaling():
    x = np.zeros((4, 4))
    assert psnr(x, x + 1, peak=1.0) == pytest.approx(0.0)


def test_psnr_rejects_bad_peak():
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 2)), np.ones((2, 2)), peak=0)


def test_window_normalized():
    w = gaussian_window()
    assert w.shape == (11, 11)
    assert abs(w.sum() - 1) <= 1e-12
    np.testing.assert_allclose(w, w.T)


def test_ssim_identity(rng):
    x = rng.random((24, 24)) * 255
    assert abs(ssim(x, x) - 1) <= 1e-12


def test_ssim_against_constant_is_below_one(rng):
    x = rng.random((16, 16)) * 255
    assert ssim(x, np.full_like(x, x.mean())) < 1


def test_ssim_matches_naive(rng):
    a = rng.random((16, 16)) * 255
    b = np.clip(a + rng.standard_normal((16, 16)) * 20, 0, 255)
    assert abs(ssim(a, b) - naive_ssim(a, b)) <= 1e-9


def test_ssim_symmetric(rng):
    a, b = rng.random((12, 14)) * 255, rng.random((12, 14)) * 255
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_map_shape(rng):
    a = rng.random((20, 15))
    assert ssim_map(a, a).shape == (10, 5)


def test_ssim_too_small():
    with pytest.raises(ShapeError):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        mse(np.zeros((3, 3)), np.zeros((3, 4)))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 10), st.floats(1.01, 4), st.integers(0, 2 ** 32 - 1))
def test_psnr_decreases_with_noise(sigma, factor, seed):
    r = np.random.default_rng(seed)
    x = r.random((8, 8)) * 255
    n = r.standard_normal((8, 8))
    assert psnr(x, x + sigma * factor * n) < psnr(x, x + sigma * n)


def test_metrics_ignore_joint_permutation(rng):
    a, b = rng.random((9, 9)), rng.random((9, 9))
    perm = rng.permutation(81)
    pa, pb = a.ravel()[perm].reshape(9, 9), b.ravel()[perm].reshape(9, 9)
    assert mse(pa, pb) == pytest.approx(mse(a, b), abs=1e-15)
    assert psnr(pa, pb) == pytest.approx(psnr(a, b), abs=1e-9)


def test_report_json(rng):
    a = rng.random((16, 16)) * 255
    r = report(a, a + 1)
    data = json.loads(r.to_json())
    assert set(data) == {"psnr", "mse", "ssim"}
    assert data["mse"] == pytest.approx(1.0)
    assert data["psnr"] == r.psnr
    assert json.loads(MetricReport(math.inf, 0.0, 1.0).to_json()) == {"psnr": "inf", "mse": 0, "ssim": 1}


def test_report_peak_only_affects_psnr(rng):
    a = rng.random((16, 16)) * 255
    b = a + rng.standard_normal((16, 16))
    r1, r2 = report(a, b, 255.0), report(a, b, 1023.0)
    assert r1.ssim == r2.ssim and r1.mse == r2.mse
    assert r2.psnr > r1.psnr
