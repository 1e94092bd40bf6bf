import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import (
    autocorr_matrix_direct,
    eig2x2,
    energy_direct,
    lag_autocorr_direct,
    periodogram_direct,
    time_lag_direct,
)
from setidetect import detectors as det
from setidetect.detectors import DegenerateInputError, DetectorSpec, STANDARD_DETECTORS
from setidetect.eigen import eigvalsh, jacobi_eigvalsh
from setidetect.siggen import NoiseModel, SignalKind, SignalModel, gen_noise, gen_signal


def noise(n, seed=0, var=1.0):
    return gen_noise(n, NoiseModel(var, seed))


# ---- specs and names -------------------------------------------------------

def test_standard_detector_names():
    assert [d.name for d in STANDARD_DETECTORS] == [
        "time_lag", "perio_1", "perio_8", "perio_64",
        "perio_ham_1", "perio_ham_8", "perio_ham_64", "max_KLT", "energy"]


@pytest.mark.parametrize("name", ["energy", "time_lag", "time_lag_unbiased", "perio_8",
                                  "perio_ham_64", "max_KLT", "klt_8"])
def test_name_roundtrip(name):
    assert DetectorSpec.parse(name).name == name


def test_unknown_name():
    with pytest.raises(ValueError):
        DetectorSpec.parse("matched_filter")


# ---- energy ----------------------------------------------------------------

def test_energy_trivial():
    assert det.energy(np.zeros(10)).value == 0
    assert det.energy(np.full(7, 2 - 1j)).value == pytest.approx(5.0)


def test_energy_matches_direct_sum():
    x = noise(256, 1)
    assert det.energy(x).value == pytest.approx(energy_direct(x), rel=1e-12)


# ---- periodogram -----------------------------------------------------------

def test_periodogram_zero():
    assert det.averaged_periodogram(np.zeros(64), 8).value == 0


@pytest.mark.parametrize("k", [0, 5, 63])
def test_on_bin_carrier(k):
    nb = 64
    x = gen_signal(nb, SignalModel(SignalKind.CARRIER, f0=k / nb))
    s = det.averaged_periodogram(x, 1)
    assert s.value == pytest.approx(nb**2, rel=1e-12)
    assert s.argmax_location == k


@pytest.mark.parametrize("blocks", [1, 8, 64])
@pytest.mark.parametrize("windowed", [False, True])
def test_periodogram_matches_direct_dft(blocks, windowed):
    x = noise(512, 2)
    fast = det.periodogram_bins(x, blocks, windowed)
    slow = periodogram_direct(x, blocks, windowed)
    np.testing.assert_allclose(fast, slow, rtol=1e-10, atol=1e-10 * slow.max())
    assert det.averaged_periodogram(x, blocks, windowed).value == pytest.approx(slow.max(), rel=1e-10)


def test_periodogram_rejects_indivisible():
    with pytest.raises(ValueError):
        det.averaged_periodogram(noise(100), 8)


def test_parseval():
    x = noise(1024, 3)
    p = det.periodogram_bins(x, 1)
    assert p.mean() == pytest.approx(x.size * det.energy(x).value, rel=1e-10)


def test_hamming_convention():
    w = np.hamming(9)
    k = np.arange(9)
    np.testing.assert_allclose(w, 0.54 - 0.46 * np.cos(2 * np.pi * k / 8), atol=1e-15)


# ---- time lag --------------------------------------------------------------

@pytest.mark.parametrize("unbiased", [False, True])
def test_time_lag_matches_double_loop(unbiased):
    x = noise(256, 4)
    np.testing.assert_allclose(det.lag_autocorrelation(x, unbiased),
                               lag_autocorr_direct(x, unbiased), rtol=1e-10, atol=1e-12)
    assert det.time_lag(x, unbiased).value == pytest.approx(time_lag_direct(x, unbiased), rel=1e-10)


def test_lag_sums_have_no_circular_wrap():
    x = np.zeros(8, dtype=complex)
    x[0] = x[7] = 1
    r = det.lag_sums(x)
    np.testing.assert_allclose(r, [2, 0, 0, 0, 0, 0, 0, 1], atol=1e-14)


def test_time_lag_constant_series():
    x = np.ones(16)
    # 1/N: R(tau) = (N - tau) / N, largest at lag 1
    s = det.time_lag(x)
    assert s.value == pytest.approx(15 / 16, rel=1e-12)
    assert s.argmax_location == 1
    # 1/(N - tau - 1): R(tau) = (N - tau) / (N - tau - 1), largest at lag N - 2
    s = det.time_lag(x, unbiased=True)
    assert s.value == pytest.approx(2.0, rel=1e-12)
    assert s.argmax_location == 14


def test_time_lag_scale_invariant():
    x = noise(300, 5)
    assert det.time_lag(3 * x).value == pytest.approx(det.time_lag(x).value, rel=1e-12)


def test_time_lag_errors():
    with pytest.raises(ValueError):
        det.time_lag(np.ones(2))
    with pytest.raises(DegenerateInputError):
        det.time_lag(np.zeros(10))


# ---- autocorrelation matrix and KLT -----------------------------------------

def test_autocorr_constant_series():
    n, m = 40, 5
    r = det.autocorr_matrix(np.ones(n), m)
    np.testing.assert_allclose(r, np.full((m, m), (n - m) / (n - m - 1)), rtol=1e-12)


@pytest.mark.parametrize("n, m", [(512, 8), (512, 64), (100, 30), (257, 3)])
def test_autocorr_matches_naive(n, m):
    x = noise(n, 6)
    fast = det.autocorr_matrix(x, m)
    slow = autocorr_matrix_direct(x, m)
    assert np.abs(fast - slow).max() <= 1e-12 * np.abs(slow).max()


def test_autocorr_hermitian():
    x = noise(2048, 7) + gen_signal(2048, SignalModel(SignalKind.BPSK, f0=0.2))
    r = det.autocorr_matrix(x, 16)
    assert np.abs(r - r.conj().T).max() <= 1e-12 * np.trace(r).real


def test_autocorr_dimension_check():
    with pytest.raises(ValueError):
        det.autocorr_matrix(noise(10), 9)


def test_klt_constant_series():
    s = det.klt(np.ones(200), 8)
    assert s.value == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_klt_2x2_closed_form(seed):
    x = noise(64, seed) + 0.5 * np.roll(noise(64, seed), 1)
    r = det.autocorr_matrix(x, 2)
    np.testing.assert_allclose(eigvalsh(r), eig2x2(r), rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(jacobi_eigvalsh(r), eig2x2(r), rtol=1e-10, atol=1e-10)
    lam = eig2x2(r)
    assert det.klt(x, 2).value == pytest.approx(lam[1] / np.trace(r).real, rel=1e-10)


def test_klt_eigen_sum_and_bounds():
    x = noise(4096, 8) + 0.3 * gen_signal(4096, SignalModel(SignalKind.BPSK, f0=0.1))
    r = det.autocorr_matrix(x, 32)
    lam = eigvalsh(r)
    tr = np.trace(r).real
    assert lam.sum() == pytest.approx(tr, rel=1e-9)
    assert lam.min() >= -1e-10 * tr
    v = det.klt(x, 32).value
    assert 1 / 32 - 1e-9 <= v <= 1 + 1e-9


def test_klt_white_noise_band():
    # H0 brute force (300 trials, N = 2^16, dim 64) gave 64 * value in [1.05, 1.11]
    v = det.klt(noise(2**16, 9), 64).value
    assert 1 / 64 < v < 3 / 64


def test_klt_zero_trace():
    with pytest.raises(DegenerateInputError):
        det.klt(np.zeros(100), 4)


# ---- Jacobi solver ---------------------------------------------------------

@pytest.mark.parametrize("m", [1, 2, 3, 7, 16, 64])
def test_jacobi_matches_lapack(m):
    g = np.random.default_rng(m)
    a = g.standard_normal((m, m)) + 1j * g.standard_normal((m, m))
    a = a + a.conj().T
    np.testing.assert_allclose(jacobi_eigvalsh(a), np.linalg.eigvalsh(a),
                               atol=1e-10 * np.linalg.norm(a))


def test_klt_jacobi_route():
    x = noise(2048, 10)
    assert det.klt(x, 16, method="jacobi").value == pytest.approx(det.klt(x, 16).value, rel=1e-10)


# ---- shared evaluation and properties ---------------------------------------

def test_evaluate_many_matches_single():
    x = noise(2**12, 11) + 0.1 * gen_signal(2**12, SignalModel(SignalKind.CHIRP, f0=0.3, d=1e-5))
    specs = list(STANDARD_DETECTORS) + [DetectorSpec.time_lag(unbiased=True), DetectorSpec.klt(8)]
    many = det.evaluate_many(x, specs)
    single = [det.evaluate(x, s).value for s in specs]
    np.testing.assert_allclose(many, single, rtol=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.sampled_from([1e-3, 0.5, 7.0, 1e3]),
       n=st.sampled_from([64, 128, 512]))
def test_scale_behaviour(seed, alpha, n):
    x = noise(n, seed)
    a2 = alpha**2
    assert det.energy(alpha * x).value == pytest.approx(a2 * det.energy(x).value, rel=1e-12)
    assert det.averaged_periodogram(alpha * x, 8).value == pytest.approx(
        a2 * det.averaged_periodogram(x, 8).value, rel=1e-12)
    assert det.time_lag(alpha * x).value == pytest.approx(det.time_lag(x).value, rel=1e-12)
    assert det.klt(alpha * x, 8).value == pytest.approx(det.klt(x, 8).value, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(20, 200), m=st.integers(1, 8))
def test_klt_range(seed, n, m):
    v = det.klt(noise(n, seed), m).value
    assert 1 / m - 1e-9 <= v <= 1 + 1e-9


def test_nonfinite_input_rejected():
    with pytest.raises(ValueError):
        det.energy([1, np.nan])
