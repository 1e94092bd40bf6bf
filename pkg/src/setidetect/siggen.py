"""Noise and artificial-signal generators for the H0/H1 detection problem.

All frequencies are in cycles per sample and phases in cycles. Series are
returned as 1-D ``complex128`` numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .rng import ROLE_PARAMS, ROLE_SYMBOLS, substream

DEFAULT_OVERSAMPLE = 8


class SignalKind(str, enum.Enum):
    CARRIER = "carrier"
    CHIRP = "chirp"
    BPSK = "bpsk"
    BPSK_WINDOWED = "bpsk_windowed"


@dataclass(frozen=True)
class SignalModel:
    """Parameters of an ET transmission model.

    ``d`` is only used by :attr:`SignalKind.CHIRP`; ``oversample`` (samples per
    symbol) and ``symbol_seed`` only by the two BPSK kinds.
    """

    kind: SignalKind
    amplitude: float = 1.0
    f0: float = 0.0
    d: float = 0.0
    phase: float = 0.0
    oversample: int = DEFAULT_OVERSAMPLE
    symbol_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SignalKind(self.kind))
        for name in ("amplitude", "f0", "d", "phase"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if int(self.oversample) != self.oversample or self.oversample < 1:
            raise ValueError(f"oversample must be a positive integer, got {self.oversample}")


@dataclass(frozen=True)
class NoiseModel:
    variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ValueError(f"noise variance must be positive and finite, got {self.variance}")


def _check_length(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"series length must be a positive integer, got {n}")
    return int(n)


def gen_noise(n: int, noise: NoiseModel) -> np.ndarray:
    """Circular complex white Gaussian noise of variance ``noise.variance``.

    Real and imaginary parts are independent with variance ``variance / 2``.
    """
    n = _check_length(n)
    g = substream(noise.seed, 0)
    scale = math.sqrt(noise.variance / 2.0)
    return scale * g.standard_normal(2 * n).view(np.complex128)


def bpsk_symbols(n_symbols: int, symbol_seed: int) -> np.ndarray:
    """Equiprobable i.i.d. +/-1 symbols from the stream keyed by ``symbol_seed``."""
    g = substream(symbol_seed, ROLE_SYMBOLS)
    return 2.0 * g.integers(0, 2, size=n_symbols) - 1.0


def bpsk_envelope(n: int, oversample: int, symbol_seed: int, windowed: bool = False) -> np.ndarray:
    """Real baseband envelope of a (windowed) BPSK message, unit mean power when windowed."""
    n_symbols = -(-n // oversample)
    env = np.repeat(bpsk_symbols(n_symbols, symbol_seed), oversample)[:n]
    if not windowed:
        return env
    start = (oversample - 1) // 2
    env = np.convolve(env, np.hamming(oversample))[start:start + n]
    power = np.mean(env**2)
    if power == 0:
        raise ValueError("windowed BPSK envelope vanished; increase n")
    return env / math.sqrt(power)


def gen_signal(n: int, model: SignalModel) -> np.ndarray:
    """Noise-free ET signal ``x_ET[k]`` for ``k = 0..n-1``.

    Carrier/chirp follow ``A exp(i 2 pi [(d k + f0) k + phase])``, so the
    instantaneous frequency is ``f0 + 2 d k``. BPSK kinds multiply a drift-free
    carrier by the +/-1 symbol envelope.
    """
    n = _check_length(n)
    k = np.arange(n, dtype=np.float64)
    if model.kind in (SignalKind.CARRIER, SignalKind.CHIRP):
        d = model.d if model.kind is SignalKind.CHIRP else 0.0
        cycles = (d * k + model.f0) * k + model.phase
        return model.amplitude * np.exp(2j * np.pi * np.mod(cycles, 1.0))

    carrier = np.exp(2j * np.pi * np.mod(model.f0 * k + model.phase, 1.0))
    env = bpsk_envelope(n, model.oversample, model.symbol_seed,
                        windowed=model.kind is SignalKind.BPSK_WINDOWED)
    return model.amplitude * env * carrier


def snr_to_amplitude(snr_db: float, variance: float) -> float:
    """Amplitude ``A`` with ``A**2 / variance == 10**(snr_db / 10)``."""
    if not math.isfinite(snr_db):
        raise ValueError(f"snr must be finite, got {snr_db}")
    return math.sqrt(variance) * 10.0 ** (snr_db / 20.0)


def sample_trial_params(master_seed: int, trial_index: int, n: int) -> tuple[float, float, float]:
    """Draw ``(f0, d, phase)`` for one Monte Carlo trial.

    ``f0`` and ``phase`` are uniform on [0, 1], ``d`` uniform on [-2/n, 2/n].
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    g = substream(master_seed, ROLE_PARAMS, trial_index)
    f0, u, phase = g.random(3)
    d = (2.0 * u - 1.0) * (2.0 / n)
    return float(f0), float(d), float(phase)


def make_trial(n: int, model: SignalModel | None, noise: NoiseModel, snr: float = 0.0) -> np.ndarray:
    """One H0 (``model is None``) or H1 series.

    Under H1 the model's amplitude is replaced by ``sigma * 10**(snr/20)``.
    """
    x = gen_noise(n, noise)
    if model is None:
        return x
    amp = snr_to_amplitude(snr, noise.variance)
    return x + gen_signal(n, replace(model, amplitude=amp))
