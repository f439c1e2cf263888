"""Centrality-ranked investment strategy with hypergeometric significance.

For each start year Y the candidate pool holds the firms first funded in
Y that have no exit dated on or before Y. Firms are ranked by one
centrality measure on the year-Y snapshot (descending, except VoteRank,
whose smaller ranks mean stronger spreaders) and the top n are picked.
A pick succeeds if the firm exits (acquisition, IPO, merger) within the
horizon, anchored at Y. The per-year success count is tested against
drawing n firms at random from the pool via the exact upper tail of the
hypergeometric distribution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .centrality import CentralityFrame
from .errors import ConfigError
from .ingest import FirmMeta

#: Measures ranked ascending instead of descending.
ASCENDING_MEASURES = frozenset({"voterank"})

SUPPORTED_HORIZONS = (6, 7, 8)


def _log_choose(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


def hypergeom_pvalue(pool_size: int, pool_successes: int, sample_size: int, observed: int) -> float:
    """Exact upper tail P(X >= observed) for Hypergeometric(N, K, n).

    Computed by log-factorial accumulation, so it stays stable for large
    parameters; exact 1.0 whenever the event is certain.
    """
    N, K, n, k = pool_size, pool_successes, sample_size, observed
    if not (isinstance(N, int) and isinstance(K, int) and isinstance(n, int) and isinstance(k, int)):
        raise ConfigError("hypergeometric parameters must be integers")
    if not (0 <= k <= n <= N and 0 <= K <= N):
        raise ConfigError(f"invalid hypergeometric parameters N={N}, K={K}, n={n}, k={k}")
    lo = max(0, n + K - N)
    hi = min(n, K)
    if k <= lo:
        return 1.0
    log_denom = _log_choose(N, n)
    total = 0.0
    for i in range(k, hi + 1):
        total += math.exp(_log_choose(K, i) + _log_choose(N - K, n - i) - log_denom)
    return min(1.0, total)


def hypergeom_pmf(pool_size: int, pool_successes: int, sample_size: int, value: int) -> float:
    """P(X = value) under the same parameterization (0 off the support)."""
    N, K, n, i = pool_size, pool_successes, sample_size, value
    if not (0 <= K <= N and 0 <= n <= N):
        raise ConfigError(f"invalid hypergeometric parameters N={N}, K={K}, n={n}")
    if i < max(0, n + K - N) or i > min(n, K):
        return 0.0
    return math.exp(_log_choose(K, i) + _log_choose(N - K, n - i) - _log_choose(N, n))


# ---------------------------------------------------------------------------
# Strategy
# ---------------------------------------------------------------------------

@dataclass
class YearResult:
    start_year: int
    pool_size: int
    pool_successes: int
    n_selected: int
    successes: int
    success_rate: float
    p_value: float
    short_pool: bool


@dataclass
class BacktestReport:
    measure: str
    top_n: int
    horizon: int
    years: list[YearResult]
    mean_rate: float
    sd_rate: float
    group: int | None = None


def run_strategy(frames: dict[int, CentralityFrame], meta: dict[str, FirmMeta],
                 first_years: dict[str, int], measure: str, top_n: int = 25,
                 horizon: int = 8, start_years: tuple[int, int] = (2000, 2010)) -> BacktestReport:
    """Backtest one centrality measure over a range of start years.

    ``frames`` maps start year to the firm-layer frame of that year's
    snapshot; ``first_years`` maps each firm to the calendar year of its
    first investment. Pools smaller than ``top_n`` are used in full and
    flagged. Success windows are anchored at the start year.
    """
    if horizon not in SUPPORTED_HORIZONS:
        raise ConfigError(f"horizon must be one of {SUPPORTED_HORIZONS}, got {horizon}")
    if top_n < 1:
        raise ConfigError("top_n must be >= 1")
    lo, hi = start_years
    if lo > hi:
        raise ConfigError(f"start year range {start_years} is empty")
    ascending = measure in ASCENDING_MEASURES

    years: list[YearResult] = []
    for year in range(lo, hi + 1):
        pool = sorted(
            firm for firm, fy in first_years.items()
            if fy == year and not _exited_by(meta.get(firm), year)
        )
        frame = frames.get(year)
        values = frame.measures.get(measure, {}) if frame is not None else {}
        missing_value = math.inf if ascending else -math.inf

        def sort_key(firm: str):
            v = values.get(firm, missing_value)
            return (v if ascending else -v, firm)

        ranked = sorted(pool, key=sort_key)
        selected = ranked[:top_n]
        successes = sum(1 for f in selected if _success_within(meta.get(f), year, horizon))
        pool_successes = sum(1 for f in pool if _success_within(meta.get(f), year, horizon))
        n_sel = len(selected)
        rate = successes / n_sel if n_sel else 0.0
        p = hypergeom_pvalue(len(pool), pool_successes, n_sel, successes) if n_sel else 1.0
        years.append(YearResult(year, len(pool), pool_successes, n_sel, successes,
                                rate, p, short_pool=len(pool) < top_n))

    rates = np.array([y.success_rate for y in years])
    sd = float(rates.std(ddof=1)) if len(rates) > 1 else 0.0
    return BacktestReport(measure, top_n, horizon, years, float(rates.mean()), sd)


def _exited_by(meta: FirmMeta | None, year: int) -> bool:
    return bool(meta is not None and meta.is_exit() and meta.status_date.year <= year)


def _success_within(meta: FirmMeta | None, start_year: int, horizon: int) -> bool:
    return bool(meta is not None and meta.is_exit()
                and meta.status_date.year - start_year <= horizon)


def write_backtest_csv(reports: list[BacktestReport], path: str | Path) -> None:
    """Per-year rows plus one ALL aggregate row per measure."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["measure", "start_year", "success_rate", "p_value", "rate_sd",
                         "n_selected", "pool_size", "pool_successes", "short_pool", "group"])
        for rep in reports:
            grp = "" if rep.group is None else str(rep.group)
            for y in rep.years:
                writer.writerow([rep.measure, str(y.start_year), repr(y.success_rate),
                                 repr(y.p_value), "", str(y.n_selected), str(y.pool_size),
                                 str(y.pool_successes), "1" if y.short_pool else "0", grp])
            writer.writerow([rep.measure, "ALL", repr(rep.mean_rate), "", repr(rep.sd_rate),
                             "", "", "", "", grp])
