"""Timing statistics over repeated procedure runs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import stats as _st

Z95 = 1.96


@dataclass(frozen=True)
class TimingStats:
    n: int
    mean_s: float
    std_s: float            # sample standard deviation
    ci95: tuple             # (lower_s, upper_s)

    @classmethod
    def from_summary(cls, n: int, mean_s: float, std_s: float, t_dist: bool = False) -> "TimingStats":
        """CI of the mean as mean +/- k * std / sqrt(n).

        ``k`` is 1.96 by default, or the two-sided 95% Student-t quantile with
        n - 1 degrees of freedom when ``t_dist`` is set.
        """
        if n < 2:
            raise ValueError("need at least two samples")
        if std_s < 0:
            raise ValueError("standard deviation must be >= 0")
        k = float(_st.t.ppf(0.975, n - 1)) if t_dist else Z95
        half = k * std_s / math.sqrt(n)
        return cls(n, float(mean_s), float(std_s), (mean_s - half, mean_s + half))

    @classmethod
    def from_samples(cls, samples_s: Iterable, t_dist: bool = False) -> "TimingStats":
        x = np.asarray(list(samples_s), dtype=float)
        if x.size < 2:
            raise ValueError("need at least two samples")
        return cls.from_summary(int(x.size), float(x.mean()), float(x.std(ddof=1)), t_dist)

    def rounded(self, digits: int = 2) -> tuple:
        """``(mean, std, lower, upper)`` rounded for display."""
        return tuple(round(v, digits) for v in (self.mean_s, self.std_s, *self.ci95))
