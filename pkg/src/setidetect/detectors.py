"""Scalar detection statistics: energy, averaged periodogram, time-lag and KLT.

The transforms are unnormalized (forward DFT without 1/N). Thresholds are
calibrated empirically, so any fixed convention is self-consistent.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import eigen


class DegenerateInputError(ValueError):
    """Raised when a statistic is undefined for the input (e.g. zero energy)."""


class DetectorKind(str, enum.Enum):
    ENERGY = "energy"
    PERIODOGRAM = "periodogram"
    TIME_LAG = "time_lag"
    KLT = "klt"


@dataclass(frozen=True)
class DetectorSpec:
    """Detector configuration.

    ``blocks`` and ``windowed`` apply to the periodogram, ``dim`` to the KLT,
    ``unbiased`` to the time-lag detector. Names follow the parameterization
    labels used throughout the package: ``energy``, ``time_lag``,
    ``time_lag_unbiased``, ``perio_8``, ``perio_ham_64``, ``max_KLT``
    (dimension 64) or ``klt_<dim>``.
    """

    kind: DetectorKind
    blocks: int = 1
    windowed: bool = False
    dim: int = 64
    unbiased: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", DetectorKind(self.kind))
        if self.blocks < 1:
            raise ValueError(f"blocks must be >= 1, got {self.blocks}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        # canonicalize unused fields so equal detectors compare (and hash) equal
        if self.kind is not DetectorKind.PERIODOGRAM:
            object.__setattr__(self, "blocks", 1)
            object.__setattr__(self, "windowed", False)
        if self.kind is not DetectorKind.KLT:
            object.__setattr__(self, "dim", 64)
        if self.kind is not DetectorKind.TIME_LAG:
            object.__setattr__(self, "unbiased", False)

    @classmethod
    def energy(cls) -> "DetectorSpec":
        return cls(DetectorKind.ENERGY)

    @classmethod
    def periodogram(cls, blocks: int = 1, windowed: bool = False) -> "DetectorSpec":
        return cls(DetectorKind.PERIODOGRAM, blocks=blocks, windowed=windowed)

    @classmethod
    def time_lag(cls, unbiased: bool = False) -> "DetectorSpec":
        return cls(DetectorKind.TIME_LAG, unbiased=unbiased)

    @classmethod
    def klt(cls, dim: int = 64) -> "DetectorSpec":
        return cls(DetectorKind.KLT, dim=dim)

    @property
    def name(self) -> str:
        if self.kind is DetectorKind.PERIODOGRAM:
            return f"perio_{'ham_' if self.windowed else ''}{self.blocks}"
        if self.kind is DetectorKind.KLT:
            return "max_KLT" if self.dim == 64 else f"klt_{self.dim}"
        if self.kind is DetectorKind.TIME_LAG and self.unbiased:
            return "time_lag_unbiased"
        return self.kind.value

    @classmethod
    def parse(cls, name: str) -> "DetectorSpec":
        name = name.strip()
        if name == "energy":
            return cls.energy()
        if name == "time_lag":
            return cls.time_lag()
        if name == "time_lag_unbiased":
            return cls.time_lag(unbiased=True)
        if name == "max_KLT":
            return cls.klt(64)
        m = re.fullmatch(r"klt_(\d+)", name)
        if m:
            return cls.klt(int(m.group(1)))
        m = re.fullmatch(r"perio_(ham_)?(\d+)", name)
        if m:
            return cls.periodogram(int(m.group(2)), windowed=bool(m.group(1)))
        raise ValueError(f"unknown detector name {name!r}")

    def check_length(self, n: int) -> None:
        """Raise ``ValueError`` if a length-``n`` series is invalid for this detector."""
        if self.kind is DetectorKind.PERIODOGRAM:
            if n % self.blocks:
                raise ValueError(f"series length {n} is not divisible by {self.blocks} blocks")
            if n // self.blocks < 2:
                raise ValueError(f"block length {n // self.blocks} < 2")
        elif self.kind is DetectorKind.TIME_LAG and n < 3:
            raise ValueError(f"time-lag detector needs n >= 3, got {n}")
        elif self.kind is DetectorKind.KLT and self.dim >= n - 1:
            raise ValueError(f"KLT dimension {self.dim} must be < n - 1 = {n - 1}")

    def __str__(self) -> str:
        return self.name


#: The nine parameterizations compared in the Monte Carlo study.
STANDARD_DETECTORS: tuple[DetectorSpec, ...] = tuple(
    DetectorSpec.parse(n)
    for n in ("time_lag", "perio_1", "perio_8", "perio_64",
              "perio_ham_1", "perio_ham_8", "perio_ham_64", "max_KLT", "energy")
)


@dataclass(frozen=True)
class DetectionStatistic:
    value: float
    detector: DetectorSpec
    argmax_location: int | None = None


def as_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"expected a non-empty 1-D series, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains NaN or Inf samples")
    return x


def _energy(x: np.ndarray) -> float:
    return float(np.vdot(x, x).real) / x.size


def energy(x) -> DetectionStatistic:
    """Mean power ``(1/N) sum |x[n]|^2``."""
    x = as_series(x)
    return DetectionStatistic(_energy(x), DetectorSpec.energy())


def periodogram_bins(x, blocks: int = 1, windowed: bool = False) -> np.ndarray:
    """Per-bin average of ``|DFT|^2`` over ``blocks`` non-overlapping blocks."""
    x = as_series(x)
    DetectorSpec.periodogram(blocks, windowed).check_length(x.size)
    frames = x.reshape(blocks, -1)
    if windowed:
        frames = frames * np.hamming(frames.shape[1])
    spec = np.fft.fft(frames, axis=1)
    return np.mean(spec.real**2 + spec.imag**2, axis=0)


def averaged_periodogram(x, blocks: int = 1, windowed: bool = False) -> DetectionStatistic:
    """Maximum over frequency bins of the block-averaged periodogram."""
    p = periodogram_bins(x, blocks, windowed)
    k = int(np.argmax(p))
    return DetectionStatistic(float(p[k]), DetectorSpec.periodogram(blocks, windowed), k)


def lag_sums(x) -> np.ndarray:
    """``r[tau] = sum_{n=tau}^{N-1} x[n] conj(x[n - tau])`` for ``tau = 0..N-1``.

    Computed through a zero-padded FFT of length >= 2N (no circular wrap).
    """
    x = as_series(x)
    n = x.size
    nfft = 1 << int(2 * n - 1).bit_length()
    spec = np.fft.fft(x, nfft)
    return np.fft.ifft(spec.real**2 + spec.imag**2)[:n]


def lag_autocorrelation(x, unbiased: bool = False, sums: np.ndarray | None = None) -> np.ndarray:
    """Autocorrelation ``R(tau)`` for ``tau = 1..N-2`` (index 0 is lag 1).

    The default divides every lag sum by ``N``. With ``unbiased=True`` lag
    ``tau`` is divided by ``N - tau - 1``; the few-product lags near ``N``
    then dominate the maximum and the statistic stops responding to signals.
    """
    x = as_series(x)
    n = x.size
    if n < 3:
        raise ValueError(f"time-lag detector needs n >= 3, got {n}")
    r = lag_sums(x) if sums is None else sums
    if not unbiased:
        return r[1:n - 1] / n
    tau = np.arange(1, n - 1)
    return r[1:n - 1] / (n - tau - 1)


def time_lag(x, unbiased: bool = False, sums: np.ndarray | None = None) -> DetectionStatistic:
    """``max_tau |R(tau)| / energy(x)`` over lags ``1..N-2``; location is the lag."""
    x = as_series(x)
    e = _energy(x)
    if e == 0:
        raise DegenerateInputError("time-lag statistic undefined for an all-zero series")
    mag = np.abs(lag_autocorrelation(x, unbiased, sums))
    k = int(np.argmax(mag))
    return DetectionStatistic(float(mag[k] / e), DetectorSpec.time_lag(unbiased), k + 1)


def _autocorr_direct(x: np.ndarray, dim: int) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(x, dim)[: x.size - dim]
    w = np.ascontiguousarray(windows)
    return w.T @ w.conj()


def _autocorr_from_lags(x: np.ndarray, dim: int, r: np.ndarray) -> np.ndarray:
    # R[i, j] (i >= j, l = i - j) is the full lag sum r[l] minus the products
    # that fall outside the window range at the head (m < j) and the tail.
    n, m = x.size, dim
    L = n - m
    l = np.arange(m)[:, None]
    k = np.arange(m)[None, :]
    head = x[k + l] * np.conj(x[k])
    head_cum = np.zeros((m, m + 1), dtype=np.complex128)
    np.cumsum(head, axis=1, out=head_cum[:, 1:])
    valid = k < m - l
    tail = np.where(valid, x[np.where(valid, L + k + l, 0)] * np.conj(x[L + k]), 0)
    tail_suffix = np.cumsum(tail[:, ::-1], axis=1)[:, ::-1]
    ii, jj = np.tril_indices(m)
    ll = ii - jj
    vals = r[ll] - head_cum[ll, jj] - tail_suffix[ll, jj]
    out = np.empty((m, m), dtype=np.complex128)
    out[ii, jj] = vals
    out[jj, ii] = np.conj(vals)
    return out


def autocorr_matrix(x, dim: int, sums: np.ndarray | None = None) -> np.ndarray:
    """Hermitian ``dim x dim`` autocorrelation matrix.

    Sum of ``w_n w_n^H`` over the ``N - dim`` overlapping windows
    ``w_n = x[n:n+dim]``, divided by ``N - dim - 1``. Long series go through
    the FFT lag sums plus O(dim^2) edge corrections instead of the
    O(N dim^2) accumulation.
    """
    x = as_series(x)
    n = x.size
    DetectorSpec.klt(dim).check_length(n)
    if n < 4 * dim:
        acc = _autocorr_direct(x, dim)
    else:
        acc = _autocorr_from_lags(x, dim, lag_sums(x) if sums is None else sums)
    acc /= n - dim - 1
    return 0.5 * (acc + acc.conj().T)


def klt(x, dim: int = 64, method: str = "lapack", sums: np.ndarray | None = None) -> DetectionStatistic:
    """Largest eigenvalue of the autocorrelation matrix over its trace."""
    r = autocorr_matrix(x, dim, sums)
    tr = float(np.trace(r).real)
    if tr <= 0:
        raise DegenerateInputError("KLT statistic undefined for a zero-trace autocorrelation matrix")
    lam = eigen.eigvalsh(r, method)
    k = int(np.argmax(lam))
    return DetectionStatistic(float(lam[k] / tr), DetectorSpec.klt(dim), k)


def evaluate(x, spec: DetectorSpec) -> DetectionStatistic:
    """Apply one detector to a series."""
    kind = spec.kind
    if kind is DetectorKind.ENERGY:
        return energy(x)
    if kind is DetectorKind.PERIODOGRAM:
        return averaged_periodogram(x, spec.blocks, spec.windowed)
    if kind is DetectorKind.TIME_LAG:
        return time_lag(x, spec.unbiased)
    return klt(x, spec.dim)


def evaluate_many(x, specs: Sequence[DetectorSpec]) -> np.ndarray:
    """Statistic values for several detectors, sharing the FFT lag sums."""
    x = as_series(x)
    sums = None
    if any(s.kind in (DetectorKind.TIME_LAG, DetectorKind.KLT) for s in specs):
        sums = lag_sums(x)
    out = np.empty(len(specs))
    for i, spec in enumerate(specs):
        if spec.kind is DetectorKind.TIME_LAG:
            out[i] = time_lag(x, spec.unbiased, sums).value
        elif spec.kind is DetectorKind.KLT:
            out[i] = klt(x, spec.dim, sums=sums).value
        else:
            out[i] = evaluate(x, spec).value
    return out


def parse_detectors(names: str | Iterable[str]) -> list[DetectorSpec]:
    if isinstance(names, str):
        names = [s for s in names.split(",") if s.strip()]
    return [DetectorSpec.parse(n) for n in names]
