"""Empirical threshold calibration and detection-rate estimation.

Thresholds are upper order statistics of simulated H0 statistics. Each Monte
Carlo trial draws its noise, signal parameters and BPSK symbols from streams
keyed by ``(master seed, role, trial index)``, so results do not depend on
how trials are split across worker processes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .detectors import DetectorSpec, evaluate_many
from .rng import ROLE_H0, ROLE_H1, ROLE_SYMBOLS, derive_seed
from .siggen import NoiseModel, SignalModel, make_trial, sample_trial_params

Z95 = 1.959963984540054
CHUNK = 25


class InsufficientTrialsError(ValueError):
    pass


@dataclass(frozen=True)
class RatePoint:
    probability: float
    ci_low: float
    ci_high: float
    trials: int


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1 + z**2 / trials
    centre = (p + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def rate_point(successes: int, trials: int) -> RatePoint:
    lo, hi = wilson_interval(successes, trials)
    p = successes / trials
    return RatePoint(p, min(lo, p), max(hi, p), trials)


# -- trial generation ---------------------------------------------------------

def trial_model(model: SignalModel, seed: int, index: int, n: int) -> SignalModel:
    """The H1 model of trial ``index`` with freshly drawn f0, d, phase and symbols."""
    f0, d, phase = sample_trial_params(seed, index, n)
    return replace(model, f0=f0, d=d, phase=phase, symbol_seed=derive_seed(seed, ROLE_SYMBOLS, index))


def _trial_series(n, noise_variance, model, snr, seed, role, index):
    noise = NoiseModel(noise_variance, derive_seed(seed, role, index))
    m = None if model is None else trial_model(model, seed, index, n)
    return make_trial(n, m, noise, snr)


def _run_chunk(args):
    specs, n, variance, model, snr, seed, role, start, stop = args
    out = np.empty((stop - start, len(specs)))
    for row, i in enumerate(range(start, stop)):
        out[row] = evaluate_many(_trial_series(n, variance, model, snr, seed, role, i), specs)
    return out


def trial_statistics(specs: Sequence[DetectorSpec], n: int, noise: NoiseModel,
                     model: SignalModel | None, snr: float, trials: int, seed: int,
                     role: int, workers: int = 1, executor=None) -> np.ndarray:
    """Statistics of ``trials`` independent series, shape ``(trials, len(specs))``.

    ``role`` selects the stream family (:data:`ROLE_H0` for calibration,
    :data:`ROLE_H1` for rate estimation). ``noise.seed`` is not used; each
    trial gets its own noise seed. An existing ``executor`` is reused instead
    of starting a pool of ``workers`` processes.
    """
    specs = tuple(specs)
    for s in specs:
        s.check_length(n)
    tasks = [(specs, n, noise.variance, model, snr, seed, role, a, min(a + CHUNK, trials))
             for a in range(0, trials, CHUNK)]
    if executor is not None:
        parts = list(executor.map(_run_chunk, tasks))
    elif workers <= 1 or len(tasks) <= 1:
        parts = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    if not parts:
        return np.empty((0, len(specs)))
    return np.concatenate(parts, axis=0)


# -- thresholds ---------------------------------------------------------------

def order_statistic_index(pfa: float, trials: int) -> int:
    """1-based rank ``k = ceil((1 - pfa) * trials)`` of the threshold."""
    return max(1, math.ceil((1.0 - pfa) * trials - 1e-9))


def threshold_from_sample(values, pfa: float) -> float:
    """Upper order statistic of ``values`` for a target false-alarm rate."""
    if not 0 < pfa < 1:
        raise ValueError(f"pfa must be in (0, 1), got {pfa}")
    v = np.sort(np.asarray(values, dtype=float))
    return float(v[order_statistic_index(pfa, v.size) - 1])


def _check_trials(trials: int, pfa: float) -> None:
    if not 0 < pfa < 1:
        raise ValueError(f"pfa must be in (0, 1), got {pfa}")
    if trials * pfa < 10 - 1e-9:
        need = math.ceil(10 / pfa - 1e-9)
        raise InsufficientTrialsError(f"calibration at pfa={pfa} needs at least {need} trials, got {trials}")


def calibrate_threshold(spec: DetectorSpec, n: int, noise: NoiseModel, pfa: float,
                        trials: int, seed: int, workers: int = 1) -> float:
    """Threshold giving false-alarm rate ``pfa`` on ``trials`` simulated H0 series."""
    _check_trials(trials, pfa)
    h0 = trial_statistics([spec], n, noise, None, 0.0, trials, seed, ROLE_H0, workers)
    return threshold_from_sample(h0[:, 0], pfa)


@dataclass
class ThresholdTable:
    """Calibrated thresholds keyed by ``(detector name, n, noise variance)``."""

    pfa: float
    trials: int
    master_seed: int
    entries: dict[tuple[str, int, float], float] = field(default_factory=dict)

    def __post_init__(self):
        _check_trials(self.trials, self.pfa)

    def set(self, spec: DetectorSpec | str, n: int, variance: float, gamma: float) -> None:
        if not math.isfinite(gamma):
            raise ValueError(f"threshold must be finite, got {gamma}")
        self.entries[(str(spec), int(n), float(variance))] = float(gamma)

    def get(self, spec: DetectorSpec | str, n: int, variance: float) -> float:
        return self.entries[(str(spec), int(n), float(variance))]

    def to_dict(self) -> dict:
        return {
            "pfa": self.pfa,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "entries": [{"detector": d, "n": n, "variance": v, "gamma": g}
                        for (d, n, v), g in sorted(self.entries.items())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "ThresholdTable":
        table = cls(doc["pfa"], doc["trials"], doc["master_seed"])
        for e in doc["entries"]:
            DetectorSpec.parse(e["detector"])
            table.set(e["detector"], e["n"], e["variance"], e["gamma"])
        return table

    @classmethod
    def from_json(cls, text: str) -> "ThresholdTable":
        return cls.from_dict(json.loads(text))


def calibrate_thresholds(specs: Sequence[DetectorSpec], n: int, noise: NoiseModel, pfa: float,
                         trials: int, seed: int, workers: int = 1, executor=None) -> ThresholdTable:
    """Calibrate several detectors on one shared set of H0 trials."""
    _check_trials(trials, pfa)
    h0 = trial_statistics(specs, n, noise, None, 0.0, trials, seed, ROLE_H0, workers, executor)
    table = ThresholdTable(pfa, trials, seed)
    for j, spec in enumerate(specs):
        table.set(spec, n, noise.variance, threshold_from_sample(h0[:, j], pfa))
    return table


# -- rates --------------------------------------------------------------------

def estimate_rate(spec: DetectorSpec, gamma: float, n: int, noise: NoiseModel,
                  model: SignalModel | None, snr: float, trials: int, seed: int,
                  workers: int = 1) -> RatePoint:
    """Fraction of fresh trials whose statistic exceeds ``gamma``.

    With ``model=None`` this measures the false-alarm rate on H0 series drawn
    from a stream disjoint from the calibration stream of the same seed.
    """
    if trials < 100:
        raise ValueError(f"rate estimation needs at least 100 trials, got {trials}")
    stats = trial_statistics([spec], n, noise, model, snr, trials, seed, ROLE_H1, workers)
    return rate_point(int(np.count_nonzero(stats[:, 0] > gamma)), trials)


def roc_curve(spec: DetectorSpec, n: int, noise: NoiseModel, model: SignalModel | None,
              snr: float, trials: int, seed: int, workers: int = 1) -> list[tuple[float, float]]:
    """(Pfa, Pd) pairs swept over the H0 order statistics, sorted by Pfa."""
    if trials < 1000:
        raise ValueError(f"ROC estimation needs at least 1000 trials, got {trials}")
    h0 = trial_statistics([spec], n, noise, None, 0.0, trials, seed, ROLE_H0, workers)[:, 0]
    h1 = trial_statistics([spec], n, noise, model, snr, trials, seed, ROLE_H1, workers)[:, 0]
    h0s = np.sort(h0)
    h1s = np.sort(h1)
    gammas = np.concatenate([[-np.inf], np.unique(h0s)])
    pfa = 1.0 - np.searchsorted(h0s, gammas, side="right") / h0s.size
    pd = 1.0 - np.searchsorted(h1s, gammas, side="right") / h1s.size
    return sorted(zip(pfa.tolist(), pd.tolist()))
