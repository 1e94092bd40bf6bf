"""Calibrate a threshold under H0, check it on fresh trials, trace a small ROC."""
from setidetect.calibration import calibrate_threshold, estimate_rate, roc_curve
from setidetect.detectors import DetectorSpec
from setidetect.siggen import NoiseModel, SignalKind, SignalModel

n, noise = 1024, NoiseModel(1.0)
spec = DetectorSpec.periodogram(8)
gamma = calibrate_threshold(spec, n, noise, pfa=0.01, trials=10000, seed=0)
print("gamma =", gamma)

fa = estimate_rate(spec, gamma, n, noise, None, 0.0, trials=5000, seed=1)
print(f"held-out Pfa = {fa.probability:.4f}  [{fa.ci_low:.4f}, {fa.ci_high:.4f}]")

model = SignalModel(SignalKind.CARRIER)
pd = estimate_rate(spec, gamma, n, noise, model, -12.0, trials=500, seed=2)
print(f"Pd at -12 dB = {pd.probability:.3f}")

roc = roc_curve(spec, n, noise, model, -15.0, trials=1000, seed=3)
for pfa, p in roc[:: max(1, len(roc) // 8)]:
    print(f"  pfa={pfa:.3f} pd={p:.3f}")
