"""Command-line entry point: ``setidetect {gen,detect,calibrate,bench,spectrogram}``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime failures.
Batch subcommands write a ``manifest.json`` (resolved config, seed, version,
timestamps and SHA-256 digests of every output) into ``--out-dir``; passing
that manifest back through ``--config`` reproduces the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import calibrate_thresholds
from .detectors import STANDARD_DETECTORS, DetectorKind, evaluate, parse_detectors
from .pipeline import (
    DEFAULT_BLOCK_LEN,
    DEFAULT_CHANNELS,
    binarize,
    calibrate_empty_bands,
    channel_width,
    channelize,
    default_threshold_mode,
    emit_spectrogram,
    estimate_psd,
    parse_channel_ranges,
    read_all,
    read_baseband,
    statistic_grid,
    write_baseband,
)
from .siggen import NoiseModel, SignalKind, SignalModel, gen_noise, gen_signal, snr_to_amplitude
from .sweep import DEFAULT_SNR_GRID, SweepConfig, emit_plot, emit_table, run_sweep


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# Defaults for options that may also come from a --config file. Parser-level
# defaults are None so that "not given on the command line" is detectable.
DEFAULTS = {
    "gen": dict(model="noise", n=4096, snr=0.0, f0=0.0, d=0.0, phase=0.0, oversample=8,
                variance=1.0, format="cf32", sample_rate=3e6, center_freq=0.0, output="baseband.cf32"),
    "detect": dict(input=None, detectors=",".join(d.name for d in STANDARD_DETECTORS)),
    "calibrate": dict(n=2**16, trials=1000, pfa=0.01, variance=1.0,
                      detectors=",".join(d.name for d in STANDARD_DETECTORS)),
    "bench": dict(n=2**16, trials=1000, pfa=0.01, snr=None, models=",".join(k.value for k in SignalKind),
                  detectors=",".join(d.name for d in STANDARD_DETECTORS), calibration_trials=None,
                  oversample=8, quick=False),
    "spectrogram": dict(input=None, channels=DEFAULT_CHANNELS, detector="energy,max_KLT,perio_8",
                        pfa=0.01, empty=None, block_len=DEFAULT_BLOCK_LEN, window="none",
                        threshold_mode="auto", duration=None),
}
GLOBAL_DEFAULTS = dict(seed=0, workers=1, out_dir=".")


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--workers", type=int, help="worker processes; results do not depend on it (default 1)")
    g.add_argument("--out-dir", help="output directory (default .)")
    g.add_argument("--config", help="JSON config file or a previous run's manifest.json")

    parser = _Parser(prog="setidetect", description="Artificial-signal detectors for radio SETI.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic baseband recording")
    p.add_argument("--model", choices=["noise"] + [k.value for k in SignalKind])
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--snr", type=float, help="SNR in dB (signal models)")
    p.add_argument("--f0", type=float, help="frequency, cycles/sample")
    p.add_argument("--d", type=float, help="chirp rate term, cycles/sample^2")
    p.add_argument("--phase", type=float, help="phase, cycles")
    p.add_argument("--oversample", type=int, help="samples per BPSK symbol")
    p.add_argument("--variance", type=float, help="noise variance")
    p.add_argument("--format", choices=["cf32", "ci8"])
    p.add_argument("--sample-rate", type=float)
    p.add_argument("--center-freq", type=float)
    p.add_argument("--output", help="payload file name, relative to --out-dir")

    p = sub.add_parser("detect", parents=[common], help="run detectors on a recording")
    p.add_argument("--input", help="baseband payload (sidecar <input>.hdr.json)")
    p.add_argument("--detectors", help="comma-separated detector names")

    p = sub.add_parser("calibrate", parents=[common], help="calibrate thresholds under simulated H0")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--pfa", type=float)
    p.add_argument("--variance", type=float)
    p.add_argument("--detectors")

    p = sub.add_parser("bench", parents=[common], help="Monte Carlo Pd-vs-SNR sweep")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--pfa", type=float)
    p.add_argument("--snr", help="start:stop:step (inclusive) or comma list, dB")
    p.add_argument("--models")
    p.add_argument("--detectors")
    p.add_argument("--calibration-trials", type=int)
    p.add_argument("--oversample", type=int)
    p.add_argument("--quick", action="store_true", default=None,
                   help="desk-scale preset: n=4096, 200 trials")

    p = sub.add_parser("spectrogram", parents=[common], help="binarized spectrograms of a recording")
    p.add_argument("--input")
    p.add_argument("--channels", type=int)
    p.add_argument("--detector", help="detector name or comma list")
    p.add_argument("--pfa", type=float)
    p.add_argument("--empty", help="empty channel ranges, e.g. 0-10,100-127")
    p.add_argument("--block-len", type=int)
    p.add_argument("--window", choices=["none", "hamming"])
    p.add_argument("--threshold-mode", choices=["auto", "global", "per_channel"])
    p.add_argument("--duration", type=float, help="PSD integration time, seconds")

    parser.epilog = "subcommands:\n" + "\n".join(
        "  " + sp.format_usage().strip().removeprefix("usage: ") for sp in sub.choices.values())
    parser.formatter_class = argparse.RawDescriptionHelpFormatter
    return parser


def _load_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    if isinstance(doc, dict) and "config" in doc and "subcommand" in doc:
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise UsageError("--config: expected a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def _resolve(args) -> dict:
    defaults = {**GLOBAL_DEFAULTS, **DEFAULTS[args.command]}
    file_cfg = _load_config(args.config) if args.config else {}
    if args.command == "bench" and (args.quick or file_cfg.get("quick")):
        quick = SweepConfig.quick()
        defaults.update(n=quick.n, trials=quick.trials)
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise UsageError(f"--config: unknown keys {sorted(unknown)}")
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else file_cfg.get(key, default)
    return out


def _parse_snr(text) -> list[float]:
    if isinstance(text, list):
        return [float(v) for v in text]
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--snr: cannot parse {text!r}") from None


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, cfg: dict, started: float, outputs, extra=None) -> Path:
    manifest = {
        "subcommand": command,
        "config": cfg,
        "master_seed": cfg["seed"],
        "tool_version": __version__,
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": {p.name: _digest(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _detectors(text, flag):
    try:
        return parse_detectors(text)
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None


# -- subcommands --------------------------------------------------------------

def cmd_gen(cfg, out_dir):
    n = cfg["n"]
    if n < 1:
        raise UsageError("--n: must be positive")
    x = gen_noise(n, NoiseModel(cfg["variance"], cfg["seed"]))
    if cfg["model"] != "noise":
        amp = snr_to_amplitude(cfg["snr"], cfg["variance"])
        model = SignalModel(cfg["model"], amp, cfg["f0"], cfg["d"], cfg["phase"],
                            cfg["oversample"], cfg["seed"])
        x = x + gen_signal(n, model)
    path = out_dir / cfg["output"]
    desc = f"gen model={cfg['model']} snr={cfg['snr']:g}dB seed={cfg['seed']}"
    write_baseband(path, x, cfg["sample_rate"], cfg["center_freq"], cfg["format"], desc)
    print(f"wrote {n} samples to {path}")
    return [path, path.with_name(path.name + ".hdr.json")], None


def cmd_detect(cfg, out_dir):
    if not cfg["input"]:
        raise UsageError("--input: required")
    specs = _detectors(cfg["detectors"], "--detectors")
    header, x = read_all(cfg["input"])
    x = x.astype(np.complex128)
    print(f"# {cfg['input']}: {x.size} samples, {header.sample_format}, {header.sample_rate:g} Hz")
    print(f"{'detector':<18}{'statistic':>24}{'argmax':>10}{'seconds':>12}")
    for spec in specs:
        y = x
        if spec.kind is DetectorKind.PERIODOGRAM and x.size % spec.blocks:
            y = x[: x.size - x.size % spec.blocks]
            print(f"# {spec.name}: using first {y.size} samples (multiple of {spec.blocks})", file=sys.stderr)
        t = time.perf_counter()
        s = evaluate(y, spec)
        dt = time.perf_counter() - t
        loc = "-" if s.argmax_location is None else str(s.argmax_location)
        print(f"{spec.name:<18}{s.value:>24.12g}{loc:>10}{dt:>12.6f}")
    return [], None


def cmd_calibrate(cfg, out_dir):
    specs = _detectors(cfg["detectors"], "--detectors")
    for spec in specs:
        try:
            spec.check_length(cfg["n"])
        except ValueError as exc:
            raise UsageError(f"--n: {exc}") from None
    table = calibrate_thresholds(specs, cfg["n"], NoiseModel(cfg["variance"]), cfg["pfa"],
                                 cfg["trials"], cfg["seed"], workers=cfg["workers"])
    path = out_dir / "thresholds.json"
    path.write_text(table.to_json() + "\n")
    print(table.to_json())
    return [path], None


def _bench_config(cfg) -> SweepConfig:
    kw = dict(pfa=cfg["pfa"], master_seed=cfg["seed"], oversample=cfg["oversample"],
              models=[m for m in str(cfg["models"]).split(",") if m.strip()] if isinstance(cfg["models"], str)
              else cfg["models"],
              detectors=_detectors(cfg["detectors"], "--detectors"),
              calibration_trials=cfg["calibration_trials"])
    kw["snr_grid"] = DEFAULT_SNR_GRID if cfg["snr"] is None else _parse_snr(cfg["snr"])
    kw.update(n=cfg["n"], trials=cfg["trials"])
    try:
        return SweepConfig(**kw)
    except ValueError as exc:
        raise UsageError(f"bench: invalid configuration: {exc}") from None


def cmd_bench(cfg, out_dir):
    config = _bench_config(cfg)
    print(f"bench: n={config.n} trials={config.trials} calibration_trials={config.calibration_trials} "
          f"pfa={config.pfa} snr_points={len(config.snr_grid)} models={len(config.models)} "
          f"detectors={len(config.detectors)} workers={cfg['workers']}")
    result = run_sweep(config, workers=cfg["workers"])
    outputs = [emit_table(result, out_dir / "sweep.csv")]
    for kind in config.models:
        outputs.append(emit_plot(result, kind, out_dir / f"{kind.value}.svg"))
    for f in result.failures:
        print(f"failed: {f}", file=sys.stderr)
    print(f"bench: {len(result.records)} records in {result.runtime_s:.1f} s")
    extra = {"sweep_config": config.to_dict(), "thresholds": result.thresholds,
             "runtimes": {"total_s": result.runtime_s}, "failures": result.failures}
    return outputs, extra


def cmd_spectrogram(cfg, out_dir):
    if not cfg["input"]:
        raise UsageError("--input: required")
    if not cfg["empty"]:
        raise UsageError("--empty: required (channel ranges of signal-free bands)")
    specs = _detectors(cfg["detector"], "--detector")
    try:
        empty = parse_channel_ranges(str(cfg["empty"]), cfg["channels"])
    except ValueError as exc:
        raise UsageError(f"--empty: {exc}") from None
    header, stream = read_baseband(cfg["input"])
    window = None if cfg["window"] == "none" else cfg["window"]
    blocks = list(channelize(stream, cfg["channels"], window, cfg["block_len"]))
    frame_rate = channel_width(header.sample_rate, cfg["channels"])
    psd = estimate_psd(blocks, cfg["duration"], frame_rate if cfg["duration"] else None)
    outputs = []
    psd_path = out_dir / "psd.csv"
    freqs = header.center_freq + np.fft.fftfreq(cfg["channels"], 1.0 / header.sample_rate)
    np.savetxt(psd_path, np.column_stack([np.arange(cfg["channels"]), freqs, psd]), delimiter=",",
               fmt=["%d", "%.17g", "%.17g"], header="channel,freq_hz,power", comments="")
    outputs.append(psd_path)
    summary = {}
    for spec in specs:
        stats = statistic_grid(blocks, spec, cfg["block_len"])
        mode = default_threshold_mode(spec) if cfg["threshold_mode"] == "auto" else cfg["threshold_mode"]
        gamma = calibrate_empty_bands(blocks, empty, spec, cfg["pfa"], cfg["block_len"], mode, stats)
        sg = binarize(blocks, spec, gamma, cfg["block_len"], stats, header)
        outputs.extend(emit_spectrogram(sg, out_dir / spec.name))
        summary[spec.name] = {"threshold_mode": mode, "detection_rate": float(sg.grid.mean())}
        print(f"{spec.name:<14} mode={mode:<12} cells={sg.grid.size} detections={int(sg.grid.sum())}")
    return outputs, {"spectrograms": summary, "channel_width_hz": frame_rate}


COMMANDS = {"gen": cmd_gen, "detect": cmd_detect, "calibrate": cmd_calibrate,
            "bench": cmd_bench, "spectrogram": cmd_spectrogram}


def _join_negative_values(argv):
    """Rewrite ``--snr -10:0:2`` as ``--snr=-10:0:2`` so argparse does not see an option."""
    out, it = [], iter(argv)
    for a in it:
        if a == "--snr":
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 1
        cfg = _resolve(args)
        if cfg["workers"] < 1:
            raise UsageError("--workers: must be >= 1")
        out_dir = Path(cfg["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        started = time.time()
        outputs, extra = COMMANDS[args.command](cfg, out_dir)
        if args.command != "detect":
            _write_manifest(out_dir, args.command, cfg, started, outputs, extra)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
