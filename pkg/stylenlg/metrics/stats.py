from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ..errors import DataError, ZeroVariance


@dataclass(frozen=True)
class Correlation:
    r: float
    p_value: float
    n: int


def pearson(xs: Sequence[float], ys: Sequence[float]) -> Correlation:
    """Sample Pearson r, with the two-sided p-value of the t-test alongside."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(
            f"pearson needs two equal-length series, got {x.shape} and {y.shape}"
        )
    if x.size < 2:
        raise DataError("pearson needs at least two points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ZeroVariance("one of the series is constant")

    r, p = stats.pearsonr(x, y)
    return Correlation(float(r), float(p), int(x.size))
