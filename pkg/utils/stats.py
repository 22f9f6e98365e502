"""
Statistical helpers shared by the protocol modules and the validate suite.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats


def contrast(i_max: float, i_min: float) -> Optional[float]:
    """V = (I_max - I_min) / (I_max + I_min), None when both are zero."""
    total = i_max + i_min
    if total <= 0:
        return None
    return (i_max - i_min) / total


def contrast_with_error(high: np.ndarray, low: np.ndarray) -> Tuple[Optional[float], float]:
    """
    Contrast of two count samples and its delta-method standard error.

    Args:
        high: Counts recorded at constructive phase
        low: Counts recorded at destructive phase

    Returns:
        (V, standard error); V is None when no counts were seen
    """
    high = np.asarray(high, dtype=float)
    low = np.asarray(low, dtype=float)
    if high.size == 0 or low.size == 0:
        return None, math.nan
    i_max, i_min = float(high.mean()), float(low.mean())
    v = contrast(i_max, i_min)
    if v is None:
        return None, math.nan
    s2 = (i_max + i_min) ** 2
    var_max = high.var(ddof=1) / high.size if high.size > 1 else 0.0
    var_min = low.var(ddof=1) / low.size if low.size > 1 else 0.0
    sem = math.sqrt((2 * i_min / s2) ** 2 * var_max + (2 * i_max / s2) ** 2 * var_min)
    return v, sem


def two_sample_chi2(a: Sequence[int], b: Sequence[int]) -> float:
    """
    p-value of a chi-square homogeneity test between two categorical samples.

    Categories with no observations in either sample are dropped.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    cats = np.union1d(a, b)
    table = np.array([[np.sum(a == c) for c in cats], [np.sum(b == c) for c in cats]])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 1.0
    _, p, _, _ = stats.chi2_contingency(table)
    return float(p)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.std() == 0 or b.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])
