"""A small Pd-vs-SNR sweep; writes sweep.csv and one SVG per model."""
import sys
from pathlib import Path

from setidetect.sweep import SweepConfig, emit_plot, emit_table, run_sweep

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_sweep")
out.mkdir(exist_ok=True)
cfg = SweepConfig.quick(trials=100, snr_grid=[-24, -20, -16, -12, -8],
                        models=["carrier", "chirp", "bpsk"], master_seed=0)
res = run_sweep(cfg)
emit_table(res, out / "sweep.csv")
for m in cfg.models:
    emit_plot(res, m, out / f"{m.value}.svg")
    print(m.value)
    for d in cfg.detectors:
        print(f"  {d.name:14s}", " ".join(f"{p:5.2f}" for p in res.pd(m, d.name)))
print(f"{res.runtime_s:.1f} s, outputs in {out}/")
