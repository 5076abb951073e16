"""
Reporting statistics for repeated runs

summarize: best accuracy over all runs, mean of the runs between the first and
third quartile, and tolerance = half the interquartile range.

wilcoxon_signed_rank: paired signed-rank test; exact p by enumerating every
sign assignment when at most 12 non-zero differences remain, otherwise the
normal approximation with continuity and tie corrections.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import norm, rankdata

logger = logging.getLogger(__name__)

EXACT_MAX_N = 12


@dataclass(frozen=True)
class StatsSummary:
    best: float
    mean_trimmed: float
    tolerance: float
    q1: float
    q3: float
    n: int


class WilcoxonResult(NamedTuple):
    statistic: float
    p_value: float
    degenerate: bool = False
    exact: bool = True
    n_effective: int = 0


def summarize(accuracies: Sequence[float]) -> StatsSummary:
    """Summary of per-run accuracies (percent)"""
    values = np.sort(np.asarray(accuracies, dtype=float))
    if len(values) == 0:
        raise ValueError("Cannot summarize an empty list of accuracies")
    q1, q3 = np.quantile(values, [0.25, 0.75])
    inner = values[(values >= q1) & (values <= q3)]
    return StatsSummary(
        best=float(values[-1]),
        mean_trimmed=float(inner.mean()),
        tolerance=float((q3 - q1) / 2.0),
        q1=float(q1),
        q3=float(q3),
        n=len(values),
    )


def _sign_matrix(n: int) -> np.ndarray:
    """Every assignment of +/- to n ranks, one row per assignment (1 = positive)"""
    codes = np.arange(2 ** n)[:, None]
    return (codes >> np.arange(n)) & 1


def _exact_p(ranks: np.ndarray, w_plus: float, alternative: str) -> float:
    total = ranks.sum()
    plus = _sign_matrix(len(ranks)) @ ranks
    tol = 1e-9
    if alternative == 'greater':
        hits = plus >= w_plus - tol
    elif alternative == 'less':
        hits = plus <= w_plus + tol
    else:
        observed = min(w_plus, total - w_plus)
        hits = np.minimum(plus, total - plus) <= observed + tol
    return float(hits.mean())


def _normal_p(ranks: np.ndarray, w_plus: float, alternative: str) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts ** 3 - tie_counts).sum() / 48.0
    sd = np.sqrt(variance)
    if alternative == 'greater':
        return float(norm.sf((w_plus - mean - 0.5) / sd))
    if alternative == 'less':
        return float(norm.cdf((w_plus - mean + 0.5) / sd))
    w = min(w_plus, ranks.sum() - w_plus)
    z = min((w - mean + 0.5) / sd, 0.0)
    return float(min(1.0, 2.0 * norm.cdf(z)))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float],
                         alternative: str = 'two-sided') -> WilcoxonResult:
    """
    Paired Wilcoxon signed-rank test on d = a - b

    Zero differences are dropped and tied |d| share their average rank. The
    statistic is min(W+, W-) for the two-sided test and W+ for one-sided ones.
    """
    if alternative not in ('two-sided', 'greater', 'less'):
        raise ValueError(f"Unknown alternative '{alternative}'")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"Paired samples differ in length: {len(a)} vs {len(b)}")

    d = a - b
    d = d[d != 0]
    if len(d) == 0:
        return WilcoxonResult(statistic=0.0, p_value=1.0, degenerate=True, exact=True, n_effective=0)

    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks.sum() - w_plus)
    statistic = min(w_plus, w_minus) if alternative == 'two-sided' else w_plus

    exact = len(d) <= EXACT_MAX_N
    if exact:
        p_value = _exact_p(ranks, w_plus, alternative)
    else:
        p_value = _normal_p(ranks, w_plus, alternative)
    logger.debug(f"[Stats] Wilcoxon n={len(d)} W={statistic:g} p={p_value:.5g} exact={exact}")
    return WilcoxonResult(statistic=statistic, p_value=p_value, degenerate=False, exact=exact, n_effective=len(d))


def wilcoxon_signed_rank_two_tailed(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    return wilcoxon_signed_rank(a, b, 'two-sided')
