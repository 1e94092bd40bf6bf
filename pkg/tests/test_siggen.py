import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setidetect.detectors import energy
from setidetect.siggen import (
    NoiseModel,
    SignalKind,
    SignalModel,
    bpsk_symbols,
    gen_noise,
    gen_signal,
    make_trial,
    sample_trial_params,
    snr_to_amplitude,
)


def test_noise_is_deterministic():
    a = gen_noise(4, NoiseModel(1.0, seed=11))
    b = gen_noise(4, NoiseModel(1.0, seed=11))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gen_noise(4, NoiseModel(1.0, seed=12)))


def test_noise_rejects_empty():
    with pytest.raises(ValueError):
        gen_noise(0, NoiseModel())


def test_noise_moments():
    # 5 standard errors at n = 1e5, variance 2:
    #   mean: sqrt(2/n) = 0.0045 -> 0.022;  power: sigma^2/sqrt(n) = 0.0063 -> 0.032
    n = 10**5
    x = gen_noise(n, NoiseModel(2.0, seed=3))
    assert abs(x.mean()) <= 0.03
    assert 1.94 <= np.mean(np.abs(x - x.mean()) ** 2) <= 2.06
    assert abs(np.mean(x**2)) <= 0.03
    assert abs(np.mean(x**2)) <= 5 * 2.0 / math.sqrt(n)
    # each quadrature carries half the power
    assert np.var(x.real) == pytest.approx(1.0, abs=0.03)
    assert np.var(x.imag) == pytest.approx(1.0, abs=0.03)


def test_noise_energy_concentrates():
    # energy of unit noise has standard error 1/sqrt(n) = 0.00316; 0.015 is ~4.7 SE
    x = gen_noise(10**5, NoiseModel(1.0, seed=4))
    assert 0.985 <= energy(x).value <= 1.015


def test_carrier_zero_frequency():
    x = gen_signal(3, SignalModel(SignalKind.CARRIER, amplitude=1.0))
    np.testing.assert_allclose(x, [1, 1, 1], atol=1e-15)


def test_chirp_phase_law_by_hand():
    x = gen_signal(3, SignalModel(SignalKind.CHIRP, amplitude=1.0, f0=0.0, d=0.25))
    np.testing.assert_allclose(x, [1, 1j, 1], atol=1e-15)


def test_carrier_is_chirp_with_zero_rate():
    kw = dict(amplitude=0.7, f0=0.123, phase=0.4)
    a = gen_signal(100, SignalModel(SignalKind.CARRIER, d=0.3, **kw))
    b = gen_signal(100, SignalModel(SignalKind.CHIRP, d=0.0, **kw))
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_chirp_matches_direct_formula():
    m = SignalModel(SignalKind.CHIRP, amplitude=2.0, f0=0.31, d=1e-3, phase=0.2)
    k = np.arange(500)
    expected = 2.0 * np.exp(2j * np.pi * (m.d * k + m.f0) * k) * np.exp(2j * np.pi * m.phase)
    np.testing.assert_allclose(gen_signal(500, m), expected, atol=1e-9)


def test_bpsk_phase_jumps_only_at_symbol_boundaries():
    m = SignalModel(SignalKind.BPSK, amplitude=1.0, f0=0.17, phase=0.05, oversample=8, symbol_seed=5)
    x = gen_signal(64, m)
    k = np.arange(64)
    baseband = x * np.exp(-2j * np.pi * (m.f0 * k + m.phase))
    # direct evaluation of the model: held symbols times the carrier
    symbols = np.repeat(bpsk_symbols(8, 5), 8)
    np.testing.assert_allclose(baseband, symbols, atol=1e-12)
    np.testing.assert_allclose(baseband.imag, 0, atol=1e-12)
    jumps = np.flatnonzero(np.diff(np.sign(baseband.real))) + 1
    assert jumps.size > 0
    assert np.all(jumps % 8 == 0)


def test_bpsk_symbols_are_balanced():
    s = bpsk_symbols(10**5, 9)
    assert set(np.unique(s)) == {-1.0, 1.0}
    assert abs(s.mean()) < 5 / math.sqrt(10**5)


@pytest.mark.parametrize("kind", [SignalKind.CARRIER, SignalKind.CHIRP, SignalKind.BPSK])
def test_constant_modulus(kind):
    m = SignalModel(kind, amplitude=0.3, f0=0.4, d=1e-4, phase=0.9, symbol_seed=2)
    np.testing.assert_allclose(np.abs(gen_signal(4096, m)), 0.3, rtol=1e-12)


@pytest.mark.parametrize("kind", list(SignalKind))
@pytest.mark.parametrize("oversample", [1, 4, 8, 13])
def test_power_calibration(kind, oversample):
    m = SignalModel(kind, amplitude=1.5, f0=0.2, d=2 / 4096, oversample=oversample, symbol_seed=1)
    x = gen_signal(2**12, m)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.5**2, rel=0.02)


def test_windowed_bpsk_is_smoothed():
    n = 2**12
    raw = gen_signal(n, SignalModel(SignalKind.BPSK, symbol_seed=3))
    smooth = gen_signal(n, SignalModel(SignalKind.BPSK_WINDOWED, symbol_seed=3))
    # the Hamming-smoothed envelope has far less out-of-band power
    def far_power(x):
        p = np.abs(np.fft.fft(x)) ** 2
        f = np.abs(np.fft.fftfreq(n))
        return p[f > 0.25].sum() / p.sum()
    assert far_power(smooth) < 0.1 * far_power(raw)


@pytest.mark.parametrize("bad", [dict(f0=float("nan")), dict(d=float("inf")), dict(amplitude=-1.0),
                                 dict(oversample=0)])
def test_signal_model_validation(bad):
    with pytest.raises(ValueError):
        SignalModel(SignalKind.CHIRP, **bad)


def test_trial_params_deterministic_and_bounded():
    n = 2**16
    assert sample_trial_params(5, 17, n) == sample_trial_params(5, 17, n)
    draws = np.array([sample_trial_params(5, i, n) for i in range(10**4)])
    f0, d, phase = draws.T
    # uniform mean standard error 0.2887 / 100 -> 5 SE = 0.0144
    assert 0.485 <= f0.mean() <= 0.515
    assert 0.485 <= phase.mean() <= 0.515
    assert np.all((f0 >= 0) & (f0 <= 1) & (phase >= 0) & (phase <= 1))
    assert np.all(np.abs(d) <= 2 / n)
    assert d.min() < -1.9 / n and d.max() > 1.9 / n


def test_make_trial_h0_is_noise():
    noise = NoiseModel(1.0, seed=8)
    assert np.array_equal(make_trial(256, None, noise), gen_noise(256, noise))


def test_make_trial_h1_amplitude():
    noise = NoiseModel(1.0, seed=8)
    m = SignalModel(SignalKind.CARRIER, f0=0.1)
    x = make_trial(256, m, noise, snr=0.0)
    np.testing.assert_allclose(x - gen_noise(256, noise), gen_signal(256, m), atol=1e-14)
    assert snr_to_amplitude(0.0, 1.0) == 1.0
    assert snr_to_amplitude(-10.0, 1.0) ** 2 == pytest.approx(0.1, rel=1e-12)
    assert snr_to_amplitude(3.0, 4.0) ** 2 / 4.0 == pytest.approx(10**0.3, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(1, 300))
def test_generators_are_pure(seed, n):
    m = SignalModel(SignalKind.BPSK_WINDOWED, f0=0.3, symbol_seed=seed)
    assert np.array_equal(gen_signal(n, m), gen_signal(n, m))
    assert np.all(np.isfinite(gen_noise(n, NoiseModel(1.0, seed))))
