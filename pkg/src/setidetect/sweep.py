"""Monte Carlo comparison of detectors: Pd versus SNR at a fixed Pfa.

Each detector is calibrated once on shared H0 trials. For every signal model
the same per-trial noise, parameter draws and symbols are reused across the
SNR grid and across detectors (common random numbers), so curves differ only
through the signal amplitude and the statistic.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .calibration import RatePoint, calibrate_thresholds, rate_point, trial_statistics
from .detectors import DetectorKind, DetectorSpec, STANDARD_DETECTORS
from .rng import ROLE_CELL, ROLE_H1, derive_seed
from .siggen import DEFAULT_OVERSAMPLE, NoiseModel, SignalKind, SignalModel

DEFAULT_SNR_GRID = tuple(round(-30.0 + 1.5 * i, 10) for i in range(21))
CSV_HEADER = ["model", "detector", "snr_db", "pd", "ci_low", "ci_high", "trials"]


def _default_models():
    return list(SignalKind)


def _default_detectors():
    return list(STANDARD_DETECTORS)


@dataclass
class SweepConfig:
    n: int = 2**16
    trials: int = 1000
    pfa: float = 0.01
    snr_grid: Sequence[float] = DEFAULT_SNR_GRID
    models: Sequence[SignalKind] = field(default_factory=_default_models)
    detectors: Sequence[DetectorSpec] = field(default_factory=_default_detectors)
    master_seed: int = 0
    oversample: int = DEFAULT_OVERSAMPLE
    noise_variance: float = 1.0
    calibration_trials: int | None = None

    def __post_init__(self):
        self.snr_grid = [float(s) for s in self.snr_grid]
        self.models = [SignalKind(m) for m in self.models]
        self.detectors = [d if isinstance(d, DetectorSpec) else DetectorSpec.parse(d)
                          for d in self.detectors]
        if self.calibration_trials is None:
            self.calibration_trials = max(self.trials, math.ceil(10 / self.pfa - 1e-9))
        self.validate()

    @classmethod
    def quick(cls, **overrides) -> "SweepConfig":
        """Desk-scale preset (n = 2^12, 200 trials); far smaller than the default n = 2^16."""
        return cls(**{"n": 2**12, "trials": 200, **overrides})

    def validate(self) -> None:
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not 0 < self.pfa < 1:
            raise ValueError(f"pfa must be in (0, 1), got {self.pfa}")
        if not self.snr_grid:
            raise ValueError("snr_grid is empty")
        if any(b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])):
            raise ValueError("snr_grid must be strictly increasing")
        if not all(math.isfinite(s) for s in self.snr_grid):
            raise ValueError("snr_grid values must be finite")
        for d in self.detectors:
            d.check_length(self.n)
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate detectors in {names}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "pfa": self.pfa,
            "snr_grid": list(self.snr_grid),
            "models": [m.value for m in self.models],
            "detectors": [d.name for d in self.detectors],
            "master_seed": self.master_seed,
            "oversample": self.oversample,
            "noise_variance": self.noise_variance,
            "calibration_trials": self.calibration_trials,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        return cls(**doc)


@dataclass(frozen=True)
class SweepRecord:
    model: SignalKind
    detector: str
    snr_db: float
    rate: RatePoint


@dataclass
class SweepResult:
    records: list[SweepRecord]
    config: SweepConfig
    thresholds: dict[str, float] = field(default_factory=dict)
    runtime_s: float = 0.0
    failures: list[dict] = field(default_factory=list)

    def curve(self, model, detector) -> tuple[np.ndarray, list[RatePoint]]:
        """SNR points and rates of one (model, detector) curve, SNR ascending."""
        model = SignalKind(model)
        detector = str(detector)
        recs = sorted((r for r in self.records if r.model is model and r.detector == detector),
                      key=lambda r: r.snr_db)
        return np.array([r.snr_db for r in recs]), [r.rate for r in recs]

    def pd(self, model, detector) -> np.ndarray:
        return np.array([p.probability for p in self.curve(model, detector)[1]])


def run_sweep(config: SweepConfig, workers: int = 1) -> SweepResult:
    """Calibrate every detector, then estimate Pd on each (model, SNR) cell."""
    start = time.perf_counter()
    noise = NoiseModel(config.noise_variance)
    specs = list(config.detectors)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        table = calibrate_thresholds(specs, config.n, noise, config.pfa, config.calibration_trials,
                                     config.master_seed, executor=pool)
        gammas = np.array([table.get(s, config.n, noise.variance) for s in specs])
        records, failures = [], []
        for model_kind in config.models:
            cell_seed = derive_seed(config.master_seed, ROLE_CELL, list(SignalKind).index(model_kind))
            model = SignalModel(model_kind, oversample=config.oversample)
            for snr in config.snr_grid:
                try:
                    stats = trial_statistics(specs, config.n, noise, model, snr, config.trials,
                                             cell_seed, ROLE_H1, executor=pool)
                except Exception as exc:  # keep the rest of the sweep alive
                    failures.extend({"model": model_kind.value, "detector": s.name, "snr_db": snr,
                                     "error": f"{type(exc).__name__}: {exc}"} for s in specs)
                    continue
                hits = np.count_nonzero(stats > gammas, axis=0)
                records.extend(SweepRecord(model_kind, s.name, snr, rate_point(int(h), config.trials))
                               for s, h in zip(specs, hits))
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(records, config, {s.name: float(g) for s, g in zip(specs, gammas)},
                       time.perf_counter() - start, failures)


# -- tables -------------------------------------------------------------------

def emit_table(result: SweepResult, path) -> Path:
    """Write one CSV row per record; floats use shortest round-trip repr."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in result.records:
                w.writerow([r.model.value, r.detector, repr(r.snr_db), repr(r.rate.probability),
                            repr(r.rate.ci_low), repr(r.rate.ci_high), r.rate.trials])
    except OSError as exc:
        raise OSError(f"cannot write sweep table {path}: {exc}") from exc
    return path


def read_table(path) -> list[SweepRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
    return [SweepRecord(SignalKind(m), d, float(s), RatePoint(float(p), float(lo), float(hi), int(t)))
            for m, d, s, p, lo, hi, t in rows[1:]]


# -- plots --------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

PLOT = dict(width=640, height=400, left=60, right=150, top=30, bottom=50)


def plot_y(pd: float) -> float:
    """SVG y-coordinate of a detection probability (affine, 1 at the top)."""
    inner = PLOT["height"] - PLOT["top"] - PLOT["bottom"]
    return PLOT["top"] + (1.0 - pd) * inner


def plot_x(snr: float, lo: float, hi: float) -> float:
    inner = PLOT["width"] - PLOT["left"] - PLOT["right"]
    frac = 0.5 if hi == lo else (snr - lo) / (hi - lo)
    return PLOT["left"] + frac * inner


def emit_plot(result: SweepResult, model, path) -> Path:
    """SVG of Pd versus SNR for one signal model, one polyline per detector."""
    try:
        model = SignalKind(model)
    except ValueError:
        raise ValueError(f"unknown model kind {model!r}") from None
    detectors = [d.name for d in result.config.detectors]
    snrs = sorted({r.snr_db for r in result.records if r.model is model} or result.config.snr_grid)
    lo, hi = snrs[0], snrs[-1]
    W, H = PLOT["width"], PLOT["height"]
    x0, x1 = PLOT["left"], W - PLOT["right"]
    y0, y1 = plot_y(1.0), plot_y(0.0)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<title>Pd vs SNR ({escape(model.value)}, Pfa={result.config.pfa:g})</title>',
           f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" fill="none" stroke="black"/>']
    for pd in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = plot_y(pd)
        out.append(f'<text class="ytick" x="{x0 - 6}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-size="11">{pd:g}</text>')
    for s in snrs[:: max(1, len(snrs) // 6)]:
        x = plot_x(s, lo, hi)
        out.append(f'<text class="xtick" x="{x:.2f}" y="{y1 + 16}" text-anchor="middle" '
                   f'font-size="11">{s:g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{H - 10}" text-anchor="middle" font-size="12">SNR (dB)</text>')
    out.append(f'<text x="14" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {(y0 + y1) / 2})">Pd</text>')
    for i, name in enumerate(detectors):
        snr, rates = result.curve(model, name)
        if not len(snr):
            continue
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{plot_x(s, lo, hi):.6f},{plot_y(r.probability):.6f}" for s, r in zip(snr, rates))
        out.append(f'<polyline data-detector="{escape(name)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{pts}"/>')
        ly = y0 + 10 + 16 * i
        out.append(f'<line x1="{x1 + 10}" y1="{ly}" x2="{x1 + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{x1 + 35}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
