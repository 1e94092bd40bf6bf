"""Channelize-then-detect workflow for wideband baseband recordings.

Recordings are a raw little-endian payload (``cf32``: interleaved float32 I/Q,
``ci8``: interleaved int8 I/Q) plus a JSON sidecar ``<payload>.hdr.json``::

    {"sample_rate": 3e6, "center_freq": 1.4e9, "sample_format": "cf32",
     "n_samples": 4194304, "description": "..."}

The stream is split into ``n_channels`` channels by a transform channelizer,
each channel is cut into cells of ``block_len`` samples, a detector runs on
every cell and thresholds are set from operator-declared empty channels.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .calibration import threshold_from_sample
from .detectors import DetectorKind, DetectorSpec, evaluate
from .rng import substream

FORMATS = {"cf32": np.dtype("<f4"), "ci8": np.dtype("i1")}
DEFAULT_CHANNELS = 128
DEFAULT_BLOCK_LEN = 1024


class BasebandFormatError(ValueError):
    pass


class TruncatedPayloadError(BasebandFormatError):
    pass


class InsufficientPoolError(ValueError):
    pass


@dataclass(frozen=True)
class BasebandHeader:
    sample_rate: float
    center_freq: float
    sample_format: str
    n_samples: int
    description: str = ""

    def __post_init__(self):
        if self.sample_format not in FORMATS:
            raise BasebandFormatError(f"unknown sample format {self.sample_format!r}")
        if not (isinstance(self.sample_rate, (int, float)) and self.sample_rate > 0):
            raise BasebandFormatError(f"sample_rate must be positive, got {self.sample_rate!r}")
        if not isinstance(self.n_samples, int) or self.n_samples < 0:
            raise BasebandFormatError(f"n_samples must be a non-negative integer, got {self.n_samples!r}")

    @property
    def bytes_per_sample(self) -> int:
        return 2 * FORMATS[self.sample_format].itemsize

    def to_dict(self) -> dict:
        return {"sample_rate": self.sample_rate, "center_freq": self.center_freq,
                "sample_format": self.sample_format, "n_samples": self.n_samples,
                "description": self.description}


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".hdr.json")


# -- I/O ----------------------------------------------------------------------

def _encode(samples: np.ndarray, sample_format: str) -> bytes:
    if sample_format == "cf32":
        return np.ascontiguousarray(samples, dtype=np.complex64).view("<f4").tobytes()
    iq = np.empty(2 * samples.size)
    iq[0::2], iq[1::2] = samples.real, samples.imag
    return np.clip(np.round(iq * 128), -128, 127).astype(np.int8).tobytes()


def write_baseband(path, samples, sample_rate: float, center_freq: float = 0.0,
                   sample_format: str = "cf32", description: str = "") -> BasebandHeader:
    """Write a payload file and its sidecar header.

    ``samples`` is an array or an iterable of arrays (written chunk by chunk).
    ``ci8`` quantizes with ``round(128 s)`` clipped to [-128, 127].
    """
    path = Path(path)
    if sample_format not in FORMATS:
        raise BasebandFormatError(f"unknown sample format {sample_format!r}")
    chunks = [samples] if isinstance(samples, np.ndarray) else samples
    count = 0
    with path.open("wb") as fh:
        for chunk in chunks:
            chunk = np.asarray(chunk).ravel()
            fh.write(_encode(chunk, sample_format))
            count += chunk.size
    header = BasebandHeader(float(sample_rate), float(center_freq), sample_format, count, description)
    header_path(path).write_text(json.dumps(header.to_dict(), indent=2) + "\n")
    return header


def read_header(path) -> BasebandHeader:
    hp = header_path(path)
    try:
        doc = json.loads(hp.read_text())
    except FileNotFoundError:
        raise BasebandFormatError(f"missing header sidecar {hp}") from None
    except json.JSONDecodeError as exc:
        raise BasebandFormatError(f"malformed header {hp}: {exc}") from None
    try:
        return BasebandHeader(sample_rate=doc["sample_rate"], center_freq=doc.get("center_freq", 0.0),
                              sample_format=doc["sample_format"], n_samples=doc["n_samples"],
                              description=doc.get("description", ""))
    except (KeyError, TypeError) as exc:
        raise BasebandFormatError(f"malformed header {hp}: missing or invalid field {exc}") from None


def _stream(path: Path, header: BasebandHeader, chunk_samples: int) -> Iterator[np.ndarray]:
    dtype = FORMATS[header.sample_format]
    remaining = header.n_samples
    with path.open("rb") as fh:
        while remaining > 0:
            k = min(chunk_samples, remaining)
            raw = np.fromfile(fh, dtype=dtype, count=2 * k)
            if raw.size < 2 * k:
                raise TruncatedPayloadError(f"{path}: payload ended early")
            if header.sample_format == "cf32":
                yield raw.view(np.complex64)
            else:
                f = raw.astype(np.float32) / 128.0
                yield f.view(np.complex64)
            remaining -= k


def read_baseband(path, chunk_samples: int = 1 << 20) -> tuple[BasebandHeader, Iterator[np.ndarray]]:
    """Open a recording; returns its header and a lazy stream of ``complex64`` chunks."""
    path = Path(path)
    header = read_header(path)
    if not path.exists():
        raise BasebandFormatError(f"missing payload {path}")
    size = path.stat().st_size
    available, rem = divmod(size, header.bytes_per_sample)
    if rem or available != header.n_samples:
        kind = "truncated" if available < header.n_samples else "oversized"
        raise TruncatedPayloadError(
            f"{path}: {kind} payload: header declares {header.n_samples} samples, "
            f"payload holds {available}" + (f" (+{rem} stray bytes)" if rem else ""))
    return header, _stream(path, header, chunk_samples)


def read_all(path) -> tuple[BasebandHeader, np.ndarray]:
    header, stream = read_baseband(path)
    parts = list(stream)
    data = np.concatenate(parts) if parts else np.empty(0, np.complex64)
    return header, data


# -- channelization -----------------------------------------------------------

@dataclass(frozen=True)
class ChannelizedBlock:
    n_channels: int
    block_len: int
    data: np.ndarray = field(repr=False)  # (n_channels, block_len) complex
    block_index: int


def channel_width(sample_rate: float, n_channels: int) -> float:
    return sample_rate / n_channels


def channel_frequencies(header: BasebandHeader, n_channels: int) -> np.ndarray:
    """Sky frequency of each channel centre, in channel (DFT bin) order."""
    return header.center_freq + np.fft.fftfreq(n_channels, d=1.0 / header.sample_rate)


def _window(window, n_channels):
    if window is None or (isinstance(window, str) and window in ("none", "rect")):
        return None
    if isinstance(window, str):
        if window != "hamming":
            raise ValueError(f"unknown window {window!r}")
        return np.hamming(n_channels)
    w = np.asarray(window, dtype=float)
    if w.shape != (n_channels,):
        raise ValueError(f"window must have length {n_channels}")
    return w


def channelize(stream, n_channels: int = DEFAULT_CHANNELS, window=None,
               block_len: int = DEFAULT_BLOCK_LEN) -> Iterator[ChannelizedBlock]:
    """Critically sampled transform channelizer.

    Consecutive length-``n_channels`` frames are (optionally windowed and)
    DFT-transformed; channel ``c`` at time ``t`` is bin ``c`` of frame ``t``.
    Frames are grouped ``block_len`` at a time; a trailing partial block is
    dropped.
    """
    if n_channels < 1 or n_channels & (n_channels - 1):
        raise ValueError(f"n_channels must be a power of two, got {n_channels}")
    if block_len < 1:
        raise ValueError(f"block_len must be positive, got {block_len}")
    w = _window(window, n_channels)
    if isinstance(stream, np.ndarray):
        stream = [stream]
    need = n_channels * block_len
    buf = np.empty(0, np.complex128)
    seen = 0
    index = 0
    for chunk in stream:
        chunk = np.asarray(chunk, dtype=np.complex128).ravel()
        seen += chunk.size
        buf = np.concatenate([buf, chunk]) if buf.size else chunk
        n_blocks = buf.size // need
        if not n_blocks:
            continue
        frames = buf[: n_blocks * need].reshape(n_blocks, block_len, n_channels)
        if w is not None:
            frames = frames * w
        spec = np.fft.fft(frames, axis=2)
        for b in range(n_blocks):
            yield ChannelizedBlock(n_channels, block_len, np.ascontiguousarray(spec[b].T), index)
            index += 1
        buf = buf[n_blocks * need:]
    if seen < n_channels:
        raise ValueError(f"stream of {seen} samples is shorter than one {n_channels}-sample frame")
    if index == 0:
        raise ValueError(f"stream of {seen} samples is shorter than one block "
                         f"({block_len} frames of {n_channels})")


def estimate_psd(blocks: Iterable[ChannelizedBlock], duration: float | None = None,
                 channel_rate: float | None = None) -> np.ndarray:
    """Time-averaged per-channel power.

    With ``duration`` (seconds) and ``channel_rate`` (frames per second), only
    the first ``duration * channel_rate`` frames are averaged.
    """
    limit = None
    if duration is not None:
        if channel_rate is None:
            raise ValueError("duration needs channel_rate")
        limit = max(1, int(round(duration * channel_rate)))
    acc, frames = None, 0
    for blk in blocks:
        data = blk.data
        if limit is not None:
            data = data[:, : max(0, limit - frames)]
            if data.shape[1] == 0:
                break
        p = np.sum(data.real**2 + data.imag**2, axis=1)
        acc = p if acc is None else acc + p
        frames += data.shape[1]
    if acc is None:
        raise ValueError("estimate_psd needs at least one block")
    return acc / frames


# -- detection ----------------------------------------------------------------

def parse_channel_ranges(text: str, n_channels: int | None = None) -> list[int]:
    """``"0-10,100-127,50"`` -> sorted channel indices (ranges inclusive)."""
    out: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)(?:\s*[-:]\s*(\d+))?", part)
        if not m:
            raise ValueError(f"bad channel range {part!r}")
        a = int(m.group(1))
        b = int(m.group(2)) if m.group(2) else a
        if b < a:
            raise ValueError(f"bad channel range {part!r}")
        out.update(range(a, b + 1))
    if n_channels is not None and out and max(out) >= n_channels:
        raise ValueError(f"channel {max(out)} out of range for {n_channels} channels")
    return sorted(out)


def statistic_grid(blocks: Sequence[ChannelizedBlock], spec: DetectorSpec,
                   block_len: int | None = None) -> np.ndarray:
    """Detector statistic of every (time block, channel) cell."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("no channelized blocks")
    block_len = blocks[0].block_len if block_len is None else block_len
    spec.check_length(block_len)
    out = np.empty((len(blocks), blocks[0].n_channels))
    for t, blk in enumerate(blocks):
        if blk.block_len != block_len:
            raise ValueError(f"block {blk.block_index} has length {blk.block_len}, expected {block_len}")
        if spec.kind is DetectorKind.ENERGY:
            d = blk.data
            out[t] = np.mean(d.real**2 + d.imag**2, axis=1)
            continue
        for c in range(blk.n_channels):
            out[t, c] = evaluate(blk.data[c], spec).value
    return out


def default_threshold_mode(spec: DetectorSpec) -> str:
    """Scale-invariant detectors share one threshold; the others scale per channel."""
    return "global" if spec.kind in (DetectorKind.KLT, DetectorKind.TIME_LAG) else "per_channel"


def noise_baseline(psd: np.ndarray, empty_channels: Sequence[int]) -> np.ndarray:
    """Per-channel noise floor, interpolated across the declared empty channels."""
    empty = np.asarray(sorted(empty_channels))
    return np.interp(np.arange(psd.size), empty, psd[empty])


def calibrate_empty_bands(blocks: Sequence[ChannelizedBlock], empty_channels: Sequence[int],
                          spec: DetectorSpec, pfa: float, block_len: int | None = None,
                          mode: str = "global", stats: np.ndarray | None = None):
    """Threshold from the statistics of declared signal-free channels.

    ``mode="global"`` returns one float: the upper ``(1 - pfa)`` order
    statistic of all (block, empty channel) cells. ``mode="per_channel"``
    returns one threshold per channel: cells are divided by the channel noise
    floor (PSD interpolated across the empty channels) before pooling and the
    pooled quantile is scaled back by each channel's floor. ``"auto"`` picks
    :func:`default_threshold_mode`.
    """
    blocks = list(blocks)
    empty = sorted(set(int(c) for c in empty_channels))
    if not empty:
        raise InsufficientPoolError("no empty channels declared")
    if stats is None:
        stats = statistic_grid(blocks, spec, block_len)
    n_channels = stats.shape[1]
    if empty[0] < 0 or empty[-1] >= n_channels:
        raise ValueError(f"empty channels must lie in [0, {n_channels})")
    need = math.ceil(10 / pfa - 1e-9)
    have = stats.shape[0] * len(empty)
    if have < need:
        raise InsufficientPoolError(f"empty-band pool too small at pfa={pfa}: need {need} cells, have {have}")
    if mode == "auto":
        mode = default_threshold_mode(spec)
    if mode == "global":
        return threshold_from_sample(stats[:, empty].ravel(), pfa)
    if mode != "per_channel":
        raise ValueError(f"unknown threshold mode {mode!r}")
    base = noise_baseline(estimate_psd(blocks), empty)
    if np.any(base[empty] <= 0):
        raise ValueError("empty channels carry no power; cannot normalize")
    q = threshold_from_sample((stats[:, empty] / base[empty]).ravel(), pfa)
    return q * base


@dataclass
class BinarySpectrogram:
    grid: np.ndarray             # (time blocks, channels) of 0/1
    statistic_grid: np.ndarray   # same shape, float
    thresholds: np.ndarray       # one per channel
    detector: DetectorSpec
    block_len: int
    block_times: np.ndarray | None = None     # seconds from start of recording
    channel_freqs: np.ndarray | None = None   # Hz

    def recompute(self) -> np.ndarray:
        return (self.statistic_grid > self.thresholds[None, :]).astype(np.uint8)


def binarize(blocks: Sequence[ChannelizedBlock], spec: DetectorSpec, gamma,
             block_len: int | None = None, stats: np.ndarray | None = None,
             header: BasebandHeader | None = None) -> BinarySpectrogram:
    """Threshold every cell's statistic; ``gamma`` is global or per channel."""
    blocks = list(blocks)
    if stats is None:
        stats = statistic_grid(blocks, spec, block_len)
    block_len = blocks[0].block_len if block_len is None else block_len
    thresholds = np.broadcast_to(np.asarray(gamma, dtype=float), (stats.shape[1],)).copy()
    grid = (stats > thresholds[None, :]).astype(np.uint8)
    times = freqs = None
    if header is not None:
        n_channels = stats.shape[1]
        frame_rate = header.sample_rate / n_channels
        times = np.array([b.block_index for b in blocks]) * block_len / frame_rate
        freqs = channel_frequencies(header, n_channels)
    return BinarySpectrogram(grid, stats, thresholds, spec, block_len, times, freqs)


def emit_spectrogram(sg: BinarySpectrogram, stem) -> list[Path]:
    """Write ``<stem>.pgm`` (P5, width = channels), ``<stem>.csv`` and ``<stem>.json``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    rows, cols = sg.grid.shape
    pgm = stem.with_name(stem.name + ".pgm")
    pgm.write_bytes(f"P5\n{cols} {rows}\n255\n".encode() + (sg.grid.astype(np.uint8) * 255).tobytes())
    csv_path = stem.with_name(stem.name + ".csv")
    np.savetxt(csv_path, sg.statistic_grid, delimiter=",", fmt="%.17g")
    meta = {
        "detector": sg.detector.name,
        "block_len": sg.block_len,
        "shape": [rows, cols],
        "thresholds": sg.thresholds.tolist(),
        "detection_rate": float(sg.grid.mean()),
        "axes": {"rows": "time block", "cols": "channel (DFT bin order)"},
    }
    if sg.block_times is not None:
        meta["block_times_s"] = sg.block_times.tolist()
    if sg.channel_freqs is not None:
        meta["channel_freqs_hz"] = sg.channel_freqs.tolist()
    meta_path = stem.with_name(stem.name + ".json")
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return [pgm, csv_path, meta_path]


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, dims, maxval, body = raw.split(b"\n", 3)
    if magic != b"P5":
        raise ValueError(f"{path}: not a binary graymap")
    w, h = map(int, dims.split())
    return np.frombuffer(body, dtype=np.uint8, count=w * h).reshape(h, w)


# -- synthetic recordings -----------------------------------------------------

def synthesize_recording(path, n_blocks: int, injections: Sequence[tuple[int, float]] = (),
                         n_channels: int = DEFAULT_CHANNELS, block_len: int = DEFAULT_BLOCK_LEN,
                         sample_rate: float = 3e6, center_freq: float = 0.0, variance: float = 1.0,
                         seed: int = 0, sample_format: str = "cf32") -> BasebandHeader:
    """White-noise recording with carriers injected at channel centres.

    ``injections`` holds ``(channel, per-channel SNR in dB)`` pairs. The
    per-channel SNR is the carrier-to-noise power ratio after channelization:
    an input tone of amplitude ``a`` gains ``n_channels**2 a**2`` while the
    noise gains ``n_channels * variance``.
    """
    g = substream(seed, 0)
    total = n_blocks * n_channels * block_len
    chunk = n_channels * block_len
    tones = []
    for c, snr in injections:
        amp = math.sqrt(variance * 10 ** (snr / 10) / n_channels)
        tones.append((c / n_channels, amp, g.random()))

    def chunks():
        for start in range(0, total, chunk):
            k = np.arange(start, start + chunk)
            x = math.sqrt(variance / 2) * g.standard_normal(2 * chunk).view(np.complex128)
            for f, amp, ph in tones:
                x = x + amp * np.exp(2j * np.pi * (np.mod(f * k, 1.0) + ph))
            yield x

    desc = "synthetic: " + (", ".join(f"ch{c}@{s:g}dB" for c, s in injections) or "noise only")
    return write_baseband(path, chunks(), sample_rate, center_freq, sample_format, desc)
