"""Detectors for artificial signals in single-receiver radio SETI data.

Submodules:

- :mod:`setidetect.siggen`: noise, chirp and BPSK generators, H0/H1 trials
- :mod:`setidetect.detectors`: energy, averaged periodogram, time-lag, KLT
- :mod:`setidetect.calibration`: empirical thresholds, Pd/Pfa with Wilson CIs
- :mod:`setidetect.sweep`: Pd-vs-SNR Monte Carlo comparison, CSV/SVG output
- :mod:`setidetect.pipeline`: channelize-then-detect binarized spectrograms
"""

__version__ = "0.1.0"
