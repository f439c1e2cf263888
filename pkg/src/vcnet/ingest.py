"""Deal-level CSV ingestion and seeded synthetic data generation.

Input schema (UTF-8 CSV with headers, exact column order):

* ``deals.csv``: ``firm_id,investor_id,round_id,date,amount``
* ``firms.csv``: ``firm_id,subsector,country,status,status_date``

Empty strings encode UNKNOWN/absent. Dates are ISO-8601 ``YYYY-MM-DD``.
Amounts are whole currency units (a single currency is assumed
throughout; no conversion is attempted). Rows violating an invariant are
collected into a rejects report instead of aborting the run; only a bad
header is fatal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

from .errors import ConfigError, SchemaError

DEAL_COLUMNS = ["firm_id", "investor_id", "round_id", "date", "amount"]
FIRM_COLUMNS = ["firm_id", "subsector", "country", "status", "status_date"]

STATUSES = ("ACTIVE", "ACQUIRED", "IPO", "MERGED", "INACTIVE")
EXIT_STATUSES = frozenset({"ACQUIRED", "IPO", "MERGED"})

UNKNOWN = ""

PathOrStream = Union[str, Path, IO[bytes]]


@dataclass(frozen=True)
class DealRecord:
    """One investment event: an investor putting money into a firm's round."""

    firm_id: str
    investor_id: str
    round_id: str
    date: Date
    amount: int


@dataclass(frozen=True)
class FirmMeta:
    """Static firm attributes; ``subsector``/``country`` may be UNKNOWN ('')."""

    firm_id: str
    subsector: str = UNKNOWN
    country: str = UNKNOWN
    status: str = "ACTIVE"
    status_date: Date | None = None

    def is_exit(self) -> bool:
        return self.status in EXIT_STATUSES


@dataclass(frozen=True)
class Reject:
    """A rejected input row: 1-based line number plus the violated rule."""

    line: int
    reason: str


@dataclass
class ParseResult:
    deals: list[DealRecord]
    firms: dict[str, FirmMeta]
    deal_rejects: list[Reject] = field(default_factory=list)
    firm_rejects: list[Reject] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _text_lines(source: PathOrStream) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _parse_date(raw: str) -> Date:
    return Date.fromisoformat(raw)


def parse_deals(deal_csv: PathOrStream, firm_csv: PathOrStream) -> ParseResult:
    """Parse deal and firm CSV streams into validated records.

    Every row becomes exactly one record or one reject (with its line
    number); file order is preserved. Firms referenced by deals but
    missing from the firm file are synthesized with UNKNOWN fields and a
    warning.

    Raises
    ------
    SchemaError
        If either file's header does not match the documented schema.
    """
    result = ParseResult(deals=[], firms={})

    with _text_lines(firm_csv) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FIRM_COLUMNS:
            raise SchemaError(f"firms.csv header must be {','.join(FIRM_COLUMNS)!r}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            reject = _parse_firm_row(row, result.firms)
            if reject is not None:
                result.firm_rejects.append(Reject(lineno, reject))

    with _text_lines(deal_csv) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DEAL_COLUMNS:
            raise SchemaError(f"deals.csv header must be {','.join(DEAL_COLUMNS)!r}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            rec_or_reason = _parse_deal_row(row)
            if isinstance(rec_or_reason, str):
                result.deal_rejects.append(Reject(lineno, rec_or_reason))
            else:
                result.deals.append(rec_or_reason)

    for rec in result.deals:
        if rec.firm_id not in result.firms:
            result.firms[rec.firm_id] = FirmMeta(firm_id=rec.firm_id)
            result.warnings.append(
                f"firm {rec.firm_id!r} appears in deals but not in firms.csv; synthesized UNKNOWN metadata"
            )

    return result


def _parse_deal_row(row: list[str]) -> DealRecord | str:
    if len(row) != len(DEAL_COLUMNS):
        return f"expected {len(DEAL_COLUMNS)} fields, got {len(row)}"
    firm_id, investor_id, round_id, raw_date, raw_amount = row
    if not firm_id:
        return "empty firm_id"
    if not investor_id:
        return "empty investor_id"
    if not round_id:
        return "empty round_id"
    try:
        when = _parse_date(raw_date)
    except ValueError:
        return f"invalid date {raw_date!r}"
    try:
        amount = int(raw_amount)
    except ValueError:
        return f"invalid amount {raw_amount!r}"
    if amount < 0:
        return f"negative amount {amount}"
    return DealRecord(firm_id, investor_id, round_id, when, amount)


def _parse_firm_row(row: list[str], firms: dict[str, FirmMeta]) -> str | None:
    if len(row) != len(FIRM_COLUMNS):
        return f"expected {len(FIRM_COLUMNS)} fields, got {len(row)}"
    firm_id, subsector, country, status, raw_status_date = row
    if not firm_id:
        return "empty firm_id"
    if firm_id in firms:
        return f"duplicate firm_id {firm_id!r}"
    if status == "":
        status = "ACTIVE"
    if status not in STATUSES:
        return f"unknown status {status!r}"
    status_date: Date | None = None
    if raw_status_date:
        try:
            status_date = _parse_date(raw_status_date)
        except ValueError:
            return f"invalid status_date {raw_status_date!r}"
    if status in EXIT_STATUSES and status_date is None:
        return f"status {status} requires a status_date"
    if status not in EXIT_STATUSES and status_date is not None:
        return f"status {status} must not carry a status_date"
    firms[firm_id] = FirmMeta(firm_id, subsector, country, status, status_date)
    return None


def write_deals(deals: Iterable[DealRecord], target: PathOrStream) -> None:
    """Serialize deals in the canonical CSV schema (inverse of parsing)."""
    _write_csv(target, DEAL_COLUMNS, (
        [d.firm_id, d.investor_id, d.round_id, d.date.isoformat(), str(d.amount)] for d in deals
    ))


def write_firms(firms: Iterable[FirmMeta], target: PathOrStream) -> None:
    """Serialize firm metadata in the canonical CSV schema."""
    _write_csv(target, FIRM_COLUMNS, (
        [m.firm_id, m.subsector, m.country, m.status,
         m.status_date.isoformat() if m.status_date is not None else ""]
        for m in firms
    ))


def write_rejects(rejects: Iterable[Reject], target: PathOrStream) -> None:
    """Write a rejects report: CSV ``line,reason``."""
    _write_csv(target, ["line", "reason"], ([str(r.line), r.reason] for r in rejects))


def _write_csv(target: PathOrStream, header: list[str], rows: Iterable[list[str]]) -> None:
    if isinstance(target, (str, Path)):
        fh: IO[str] = open(target, "w", encoding="utf-8", newline="")
        own = True
    else:
        fh = io.TextIOWrapper(target, encoding="utf-8", newline="")
        own = False
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        fh.flush()
    finally:
        if own:
            fh.close()
        else:
            fh.detach()  # leave the caller's byte stream open


def read_deals_csv(path: str | Path) -> list[DealRecord]:
    """Read back a canonical deals file; any reject is a hard error."""
    with open(path, "rb") as deal_fh:
        result = parse_deals(deal_fh, io.BytesIO(b"firm_id,subsector,country,status,status_date\n"))
    if result.deal_rejects:
        first = result.deal_rejects[0]
        raise SchemaError(f"{path}: line {first.line}: {first.reason}")
    return result.deals


def read_firms_csv(path: str | Path) -> dict[str, FirmMeta]:
    """Read back a canonical firms file; any reject is a hard error."""
    with open(path, "rb") as firm_fh:
        result = parse_deals(io.BytesIO(b"firm_id,investor_id,round_id,date,amount\n"), firm_fh)
    if result.firm_rejects:
        first = result.firm_rejects[0]
        raise SchemaError(f"{path}: line {first.line}: {first.reason}")
    return result.firms


# ---------------------------------------------------------------------------
# Synthetic data with planted two-regime structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the seeded synthetic deal generator.

    A fraction ``high_regime_fraction`` of firms is planted in a high
    funding regime: they raise more rounds, attract more investors per
    round (preferentially the hub investors), draw larger amounts, and
    exit with probability ``exit_rate_high`` instead of
    ``exit_rate_low``. Downstream clustering and the backtest are
    expected to recover exactly this structure.
    """

    n_firms: int
    n_investors: int
    n_subsectors: int
    year_range: tuple[int, int]
    high_regime_fraction: float
    seed: int
    amount_log_mean: float = 13.0
    amount_log_sd: float = 1.0
    exit_rate_high: float = 0.8
    exit_rate_low: float = 0.04

    def __post_init__(self) -> None:
        if min(self.n_firms, self.n_investors, self.n_subsectors) < 1:
            raise ConfigError("n_firms, n_investors and n_subsectors must all be >= 1")
        start, end = self.year_range
        if start > end:
            raise ConfigError(f"year_range start {start} exceeds end {end}")
        if not 0.0 < self.high_regime_fraction < 1.0:
            raise ConfigError("high_regime_fraction must lie in (0, 1)")
        if not (0.0 <= self.exit_rate_low <= 1.0 and 0.0 <= self.exit_rate_high <= 1.0):
            raise ConfigError("exit rates must lie in [0, 1]")
        if self.amount_log_sd <= 0:
            raise ConfigError("amount_log_sd must be positive")


@dataclass
class SyntheticDataset:
    deals: list[DealRecord]
    firms: dict[str, FirmMeta]
    planted_regimes: dict[str, str]  # firm_id -> HIGH | LOW


# Regime-specific shape constants of the generator. High-regime firms get
# more rounds, more (and better-connected) investors and a multiplicative
# amount boost; these gaps are what the trajectory clustering must find.
_LAMBDA_ROUNDS = {"HIGH": 3.5, "LOW": 1.1}
_AMOUNT_BOOST = {"HIGH": 1.8, "LOW": 0.0}
_HUB_SHARE = 20          # one hub investor per 20 investors
_FOLLOW_ON_SPAN = 10     # follow-on rounds land within 10 years of the first


def generate_synthetic(cfg: SyntheticConfig) -> SyntheticDataset:
    """Generate a seeded synthetic deal history with planted regimes.

    Output is a pure function of ``cfg``. Every firm receives at least
    one round; the second round of any multi-round firm lands within
    four years of the first so that trajectory eligibility does not
    depend on the window size.
    """
    rng = np.random.default_rng(cfg.seed)
    start, end = cfg.year_range

    firm_ids = [f"F{i:05d}" for i in range(cfg.n_firms)]
    investor_ids = [f"I{j:05d}" for j in range(cfg.n_investors)]
    # A few ids appear on both sides of the market (dual-role nodes).
    n_both = min(cfg.n_firms, cfg.n_investors) // 50
    for k in range(n_both):
        investor_ids[cfg.n_investors - 1 - k] = firm_ids[k]
    n_hubs = max(1, cfg.n_investors // _HUB_SHARE)

    subsectors = [f"S{k + 1:02d}" for k in range(cfg.n_subsectors)]
    first_year_span = max(0, (end - start) - _FOLLOW_ON_SPAN)

    deals: list[DealRecord] = []
    firms: dict[str, FirmMeta] = {}
    regimes: dict[str, str] = {}

    for firm in firm_ids:
        regime = "HIGH" if rng.random() < cfg.high_regime_fraction else "LOW"
        regimes[firm] = regime
        subsector = subsectors[int(rng.integers(0, cfg.n_subsectors))]
        first_year = start + int(rng.integers(0, first_year_span + 1))
        horizon = min(_FOLLOW_ON_SPAN, end - first_year)

        n_rounds = 1 + int(rng.poisson(_LAMBDA_ROUNDS[regime]))
        offsets = [0]
        if n_rounds >= 2 and horizon >= 1:
            offsets.append(int(rng.integers(1, min(4, horizon) + 1)))
            for _ in range(n_rounds - 2):
                offsets.append(int(rng.integers(1, horizon + 1)))
        offsets.sort()

        for r, off in enumerate(offsets):
            when = Date(first_year + off, int(rng.integers(1, 13)), int(rng.integers(1, 29)))
            round_id = f"{firm}-R{r:02d}"
            if regime == "HIGH":
                count = 2 + int(rng.binomial(3, 0.4))
            else:
                count = 1 + int(rng.binomial(2, 0.25))
            picks = _draw_round_investors(rng, investor_ids, n_hubs, count, hub_first=regime == "HIGH")
            for inv in picks:
                raw = math.exp(rng.normal(cfg.amount_log_mean + _AMOUNT_BOOST[regime], cfg.amount_log_sd))
                deals.append(DealRecord(firm, inv, round_id, when, max(1, int(round(raw)))))

        exit_rate = cfg.exit_rate_high if regime == "HIGH" else cfg.exit_rate_low
        if rng.random() < exit_rate:
            status = ("ACQUIRED", "IPO", "MERGED")[int(rng.integers(0, 3))]
            exit_year = first_year + int(rng.integers(2, 7))
            status_date = Date(exit_year, int(rng.integers(1, 13)), int(rng.integers(1, 29)))
        else:
            status = "ACTIVE" if rng.random() < 0.85 else "INACTIVE"
            status_date = None
        firms[firm] = FirmMeta(firm, subsector, "US", status, status_date)

    return SyntheticDataset(deals, firms, regimes)


def _draw_round_investors(rng: np.random.Generator, pool: list[str], n_hubs: int,
                          count: int, hub_first: bool) -> list[str]:
    """Draw ``count`` distinct investors; optionally guarantee one hub."""
    count = min(count, len(pool))
    picks: list[str] = []
    if hub_first and count >= 1:
        picks.append(pool[int(rng.integers(0, n_hubs))])
    while len(picks) < count:
        cand = pool[int(rng.integers(0, len(pool)))]
        if cand not in picks:
            picks.append(cand)
    return picks
