"""
ENIR calibration toolkit: near-isotonic path ensembles, isotonic and histogram
baselines, calibration metrics and the benchmarking harness.
"""
__version__ = "1.0.0"
