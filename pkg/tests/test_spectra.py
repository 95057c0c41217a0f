import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cohstream.errors import ParseError, ValidationError
from cohstream.spectra import (
    CoherenceResult,
    SmootherConfig,
    SpectralTensor,
    _periodic_boxcar,
    coherence,
    correct_and_smooth,
    default_bandwidth,
    default_max_scale,
    fisher_z,
    raw_periodogram,
    read_spectral_csv,
    write_spectral_csv,
)
from cohstream.wavelet import WaveletFilter, inner_product_matrix, invert_inner_product, ndwt

from .oracles import boxcar_bruteforce

RNG = np.random.default_rng(271828)


def _smoother(m=2):
    return SmootherConfig(bandwidth=m)


# ---------------------------------------------------------------- defaults
def test_default_bandwidth_values():
    # floor(w**0.7 / 2); 1024**0.7 = 128 exactly, guard against fp dust.
    assert default_bandwidth(64) == 9
    assert default_bandwidth(256) == 24
    assert default_bandwidth(1024) == 64


def test_default_max_scale():
    assert default_max_scale(8) == 6
    assert default_max_scale(10) == 8
    assert default_max_scale(2) == 1
    assert default_max_scale(1) == 1


def test_smoother_config_validation():
    with pytest.raises(ValidationError):
        SmootherConfig(bandwidth=-1)
    with pytest.raises(ValidationError):
        SmootherConfig(bandwidth=2, eps_power=0.0)
    with pytest.raises(ValidationError):
        SmootherConfig(bandwidth=2, eps_rho=0.5)


# ---------------------------------------------------------------- periodogram
def test_raw_periodogram_is_outer_product():
    detail = RNG.standard_normal((3, 2, 8))
    per = raw_periodogram(detail)
    assert per.shape == (3, 8, 2, 2)
    for j in range(3):
        for k in range(8):
            d = detail[j, :, k]
            assert np.allclose(per[j, k], np.outer(d, d), atol=1e-14)


def test_raw_periodogram_accepts_pyramid():
    x = RNG.standard_normal((2, 16))
    pyr = ndwt(x, 4)
    assert np.allclose(raw_periodogram(pyr), raw_periodogram(pyr.detail))


def test_raw_periodogram_single_channel():
    per = raw_periodogram(RNG.standard_normal((2, 8)))
    assert per.shape == (2, 8, 1, 1)


def test_raw_periodogram_matrices_are_psd_rank_one():
    per = raw_periodogram(RNG.standard_normal((2, 3, 8)))
    for j in range(2):
        for k in range(8):
            eigs = np.linalg.eigvalsh(per[j, k])
            assert np.all(eigs >= -1e-12)
            assert np.sum(eigs > 1e-12) <= 1


# ---------------------------------------------------------------- smoothing
@pytest.mark.parametrize("m", [0, 1, 3, 7])
def test_periodic_boxcar_matches_bruteforce(m):
    x = RNG.standard_normal((4, 16, 2, 2))
    smoothed = _periodic_boxcar(x, m, axis=1)
    for j in range(4):
        for p in range(2):
            for q in range(2):
                brute = boxcar_bruteforce(x[j, :, p, q], m)
                assert np.allclose(smoothed[j, :, p, q], brute, atol=1e-12)


def test_periodic_boxcar_preserves_constants():
    x = np.full((1, 8, 1, 1), 2.5)
    assert np.allclose(_periodic_boxcar(x, 3, axis=1), 2.5)


def test_periodic_boxcar_span_limit():
    with pytest.raises(ValidationError):
        _periodic_boxcar(np.zeros((1, 8, 1, 1)), 4, axis=1)


def test_boxcar_full_span_is_global_mean():
    x = RNG.standard_normal((1, 9, 1, 1))
    out = _periodic_boxcar(x, 4, axis=1)
    assert np.allclose(out, x.mean(axis=1, keepdims=True), atol=1e-12)


def test_correct_and_smooth_is_linear():
    a = inner_product_matrix(WaveletFilter.from_name("haar"), 4)
    a_inv = invert_inner_product(a)
    i1 = RNG.standard_normal((4, 16, 2, 2))
    i2 = RNG.standard_normal((4, 16, 2, 2))
    alpha, beta = 1.7, -0.4
    lhs = correct_and_smooth(alpha * i1 + beta * i2, a_inv, 2)
    rhs = alpha * correct_and_smooth(i1, a_inv, 2) + beta * correct_and_smooth(i2, a_inv, 2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_correct_and_smooth_row_slicing():
    """Keeping only fine-scale rows of the inverse must reproduce the
    corresponding slices of the full output."""
    a_inv = invert_inner_product(inner_product_matrix("haar", 5))
    per = RNG.standard_normal((5, 32, 2, 2))
    full = correct_and_smooth(per, a_inv, 3)
    sliced = correct_and_smooth(per, a_inv[:2], 3)
    assert np.allclose(sliced, full[:2], atol=1e-12)


def test_correct_and_smooth_shape_mismatch():
    with pytest.raises(ValidationError):
        correct_and_smooth(np.zeros((3, 8, 1, 1)), np.eye(4), 1)


def test_white_noise_spectrum_near_dyadic():
    """Monte-Carlo: corrected spectrum of unit white noise ~= 2^-j."""
    a_inv = invert_inner_product(inner_product_matrix("haar", 5))
    reps = 400
    acc = np.zeros(3)
    for _ in range(reps):
        pyr = ndwt(RNG.standard_normal(32), 5)
        s = correct_and_smooth(raw_periodogram(pyr.detail), a_inv[:3], 15)
        acc += s[:, :, 0, 0].mean(axis=1)
    acc /= reps
    assert np.allclose(acc, [0.5, 0.25, 0.125], atol=0.02)


# ---------------------------------------------------------------- coherence
def _toy_spectra():
    """Constant 2x2 cross-spectra with known coherence 0.6."""
    s = np.zeros((2, 8, 2, 2))
    s[..., 0, 0] = 4.0
    s[..., 1, 1] = 1.0
    s[..., 0, 1] = s[..., 1, 0] = 1.2  # rho = 1.2 / sqrt(4*1) = 0.6
    return s


def test_coherence_known_value():
    res = coherence(_toy_spectra(), _smoother())
    assert np.allclose(res.values[..., 0, 1], 0.6, atol=1e-12)
    assert res.power_floor_hits == 0
    assert res.clamp_hits == 0


def test_coherence_diagonal_is_one_and_symmetric():
    factors = RNG.standard_normal((3, 8, 3, 5))
    s = np.einsum("jkpr,jkqr->jkpq", factors, factors)
    res = coherence(s, _smoother())
    idx = np.arange(3)
    assert np.allclose(res.values[..., idx, idx], 1.0)
    assert np.allclose(res.values, np.swapaxes(res.values, -1, -2), atol=1e-12)
    assert np.all(np.abs(res.values) <= 1.0)


def test_coherence_power_floor_counts():
    s = _toy_spectra()
    s[0, :, 1, 1] = -5.0  # negative power: floored, rho clamps follow
    res = coherence(s, SmootherConfig(bandwidth=2, eps_power=1e-10, eps_rho=1e-6))
    assert res.power_floor_hits == 8
    assert res.clamp_hits == 16  # both off-diagonal mirror entries, 8 locations
    assert np.allclose(np.abs(res.values[0, :, 0, 1]), 1 - 1e-6)


def test_coherence_clamp_keeps_sign():
    s = _toy_spectra()
    s[..., 0, 1] = s[..., 1, 0] = -3.0  # rho would be -1.5
    res = coherence(s, _smoother())
    assert np.allclose(res.values[..., 0, 1], -(1 - 1e-6))


def test_perfectly_dependent_channels_clamp():
    x = RNG.standard_normal(16)
    detail = ndwt(np.vstack([x, x]), 4).detail
    s = _periodic_boxcar(raw_periodogram(detail), 2, axis=1)
    res = coherence(s, _smoother())
    assert np.allclose(res.values[..., 0, 1], 1 - 1e-6)
    assert res.clamp_hits > 0


# ---------------------------------------------------------------- fisher z
def test_fisher_z_known_values():
    rho = np.zeros((1, 1, 2, 2))
    rho[..., 0, 1] = rho[..., 1, 0] = 0.5
    rho[..., 0, 0] = rho[..., 1, 1] = 1.0
    z = fisher_z(rho)
    assert np.allclose(z[..., 0, 1], np.arctanh(0.5), atol=1e-14)
    assert np.allclose(z[..., 0, 0], 0.0)


def test_fisher_z_is_odd():
    rho = np.clip(RNG.uniform(-0.999, 0.999, size=(2, 4, 3, 3)), -0.999, 0.999)
    assert np.allclose(fisher_z(-rho), -fisher_z(rho), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-0.999999, max_value=0.999999))
def test_fisher_z_odd_property(r):
    rho = np.full((1, 1, 2, 2), r)
    z, zneg = fisher_z(rho), fisher_z(-rho)
    assert np.isclose(z[0, 0, 0, 1], -zneg[0, 0, 0, 1], atol=1e-12)
    assert np.isclose(z[0, 0, 0, 1], np.arctanh(r), atol=1e-12)


def test_fisher_z_monotone():
    rhos = np.linspace(-0.99, 0.99, 101)
    grid = np.zeros((1, len(rhos), 2, 2))
    grid[..., 0, 1] = rhos
    z = fisher_z(grid)[0, :, 0, 1]
    assert np.all(np.diff(z) > 0)


# ---------------------------------------------------------------- tensor IO
def test_spectral_tensor_validation():
    with pytest.raises(ValidationError):
        SpectralTensor(np.zeros((2, 4, 2, 3)))
    t = SpectralTensor(np.zeros((2, 4, 3, 3)))
    assert (t.levels, t.window, t.channels) == (2, 4, 3)


def test_spectral_csv_roundtrip(tmp_path):
    values = RNG.standard_normal((2, 4, 2, 2))
    f = tmp_path / "s.csv"
    write_spectral_csv(SpectralTensor(values), f)
    back = read_spectral_csv(f)
    assert np.array_equal(back.values, values)


def test_spectral_csv_rejects_bad_header(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ParseError):
        read_spectral_csv(f)


def test_spectral_csv_rejects_missing_entries(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("j,k,p,q,value\n1,0,1,1,1.0\n2,1,1,1,1.0\n")
    with pytest.raises(ParseError):
        read_spectral_csv(f)


# ------------------------------------------------- statistical ground truth
def test_coherence_recovers_known_correlations():
    """Trivariate white noise with correlations (0, 0.3, 0.7): the coherence
    of the time-and-scale-averaged spectrum estimates the correlation matrix.
    (Averaging the per-location coherence ratios instead would attenuate.)"""
    cov = np.array([[1, 0, 0.3], [0, 1, 0.7], [0.3, 0.7, 1.0]])
    chol = np.linalg.cholesky(cov)
    w, levels, m = 512, 4, default_bandwidth(512)
    a_inv = invert_inner_product(inner_product_matrix("haar", int(np.log2(w))))
    reps = 30
    acc = np.zeros((3, 3))
    for _ in range(reps):
        x = chol @ RNG.standard_normal((3, w))
        pyr = ndwt(x, int(np.log2(w)))
        s = correct_and_smooth(raw_periodogram(pyr.detail), a_inv[:levels], m)
        acc += s.mean(axis=(0, 1))
    acc /= reps
    rho = acc / np.sqrt(np.outer(np.diag(acc), np.diag(acc)))
    estimates = [rho[0, 1], rho[0, 2], rho[1, 2]]
    assert np.allclose(estimates, [0.0, 0.3, 0.7], atol=0.05)
