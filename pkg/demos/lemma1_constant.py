"""Measure the constant in the Fourier-side bilinear inequality.

At n = 5 both sides are the same number.  For n = 6, 7 the ratio
LHS/RHS is computed over seeded mean-free random fields; values above 1
mean the inequality needs a constant larger than one.
"""
import numpy as np

from fourthnls.config import DataSpec, ExperimentConfig
from fourthnls.experiments import run_lemma1_check

for n, P, seeds in ((5, 8, 20), (6, 8, 100), (7, 6, 50)):
    config = ExperimentConfig(kind="lemma1", n=n, P=P, L=2 * np.pi, data=DataSpec(kind="random"), seeds=seeds)
    report = run_lemma1_check(config)
    ratios = np.array([row[3] for row in report.curves["sides"]["rows"]])
    print(
        f"n = {n}, P = {P}, {seeds} seeds: LHS/RHS min {ratios.min():.4f}, median {np.median(ratios):.4f}, "
        f"max {ratios.max():.4f}, above 1: {report.scalars['violations']}"
    )
