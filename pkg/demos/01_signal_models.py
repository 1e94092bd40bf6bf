"""Generate each signal model, add noise and look at a few basic properties."""
import numpy as np

from setidetect.siggen import (NoiseModel, SignalKind, SignalModel, gen_noise, gen_signal,
                               sample_trial_params, snr_to_amplitude)

n = 4096
amp = snr_to_amplitude(-10.0, 1.0)
f0, d, phase = sample_trial_params(master_seed=0, trial_index=0, n=n)
print(f"trial 0: f0={f0:.4f} d={d:.2e} phase={phase:.4f} A={amp:.4f}")

for kind in SignalKind:
    x = gen_signal(n, SignalModel(kind, amp, f0, d, phase, oversample=8, symbol_seed=1))
    spec = np.abs(np.fft.fft(x)) ** 2
    # fraction of the power in the 16 strongest bins: high for a carrier, low for BPSK
    top = np.sort(spec)[-16:].sum() / spec.sum()
    print(f"{kind.value:14s} power={np.mean(np.abs(x) ** 2):.4f} top16 bins={top:.3f}")

noise = gen_noise(n, NoiseModel(variance=1.0, seed=3))
print("noise variance", np.var(noise).round(3), " |E[x^2]|", abs(np.mean(noise ** 2)).round(3))
