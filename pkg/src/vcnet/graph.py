"""Cumulative temporal bipartite multigraph and its single-layer projections.

The bipartite graph links investors to firms, one (parallel) edge per
deal. Snapshots are cumulative at calendar-year ends: the snapshot for
year Y contains every deal dated on or before Dec 31 of Y, so snapshot
edge sets are monotone in Y.

Projections are simple graphs. Two firms are linked when some investor
backed both within a configurable window (measured symmetrically in
exact days, ``window_years * 365.25``); two investors are linked when
they participated in the same financing round of the same firm. Edge
weights count the distinct witnesses (common investors / common rounds);
all centrality computations downstream ignore the weights.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path

import numpy as np

from .errors import NotFoundError
from .ingest import DealRecord

DAYS_PER_YEAR = 365.25

FIRM = "FIRM"
INVESTOR = "INVESTOR"
BOTH = "BOTH"


@dataclass(frozen=True)
class FirstRound:
    round_id: str
    date: Date
    amount_total: int
    investors: frozenset[str]


class TemporalBipartiteGraph:
    """Immutable container for deals with cumulative per-year views."""

    def __init__(self, deals: list[DealRecord]):
        # Stable, data-independent edge order: by date, then ids.
        self.edges: list[DealRecord] = sorted(
            deals, key=lambda d: (d.date, d.investor_id, d.firm_id, d.round_id, d.amount)
        )
        firm_side = {d.firm_id for d in deals}
        investor_side = {d.investor_id for d in deals}
        self.roles: dict[str, str] = {}
        for node in firm_side | investor_side:
            if node in firm_side and node in investor_side:
                self.roles[node] = BOTH
            elif node in firm_side:
                self.roles[node] = FIRM
            else:
                self.roles[node] = INVESTOR
        if self.edges:
            self.min_year = self.edges[0].date.year
            self.max_year = self.edges[-1].date.year
        else:
            self.min_year = self.max_year = None

    def __len__(self) -> int:
        return len(self.roles)

    def snapshot_deals(self, year: int) -> list[DealRecord]:
        """Deals dated on or before Dec 31 of ``year`` (cumulative)."""
        cut = _bisect_year(self.edges, year)
        return self.edges[:cut]

    def years(self) -> range:
        if self.min_year is None:
            return range(0)
        return range(self.min_year, self.max_year + 1)


def _bisect_year(edges: list[DealRecord], year: int) -> int:
    lo, hi = 0, len(edges)
    while lo < hi:
        mid = (lo + hi) // 2
        if edges[mid].date.year <= year:
            lo = mid + 1
        else:
            hi = mid
    return lo


def build_bipartite(deals: list[DealRecord]) -> TemporalBipartiteGraph:
    """Build the cumulative temporal bipartite multigraph from deals."""
    return TemporalBipartiteGraph(deals)


class ProjectedGraph:
    """Simple undirected graph from one bipartite layer at one snapshot."""

    def __init__(self, layer: str, snapshot_year: int, nodes: set[str],
                 edge_witnesses: dict[tuple[str, str], set], window_years: int | None = None):
        self.layer = layer
        self.snapshot_year = snapshot_year
        self.window_years = window_years
        self.nodes: tuple[str, ...] = tuple(sorted(nodes))
        self.edges: dict[tuple[str, str], int] = {
            pair: len(wit) for pair, wit in sorted(edge_witnesses.items())
        }
        self._arrays: _GraphArrays | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, node: str) -> list[str]:
        return [self.nodes[j] for j in self.arrays().adj[self.arrays().pos[node]]]

    def arrays(self) -> "_GraphArrays":
        if self._arrays is None:
            self._arrays = _GraphArrays(self.nodes, self.edges)
        return self._arrays

    def sorted_edges(self) -> list[tuple[str, str, int]]:
        return [(u, v, w) for (u, v), w in self.edges.items()]


class _GraphArrays:
    """Integer-indexed adjacency built once per projection."""

    def __init__(self, nodes: tuple[str, ...], edges: dict[tuple[str, str], int]):
        self.pos = {node: i for i, node in enumerate(nodes)}
        n = len(nodes)
        adj_sets: list[list[int]] = [[] for _ in range(n)]
        uv = np.empty((len(edges), 2), dtype=np.int64)
        for k, (u, v) in enumerate(edges):
            iu, iv = self.pos[u], self.pos[v]
            uv[k, 0], uv[k, 1] = iu, iv
            adj_sets[iu].append(iv)
            adj_sets[iv].append(iu)
        self.adj = [np.array(sorted(a), dtype=np.int64) for a in adj_sets]
        self.edge_uv = uv
        self.degrees = np.array([len(a) for a in self.adj], dtype=np.int64)


def _empty_projection(layer: str, year: int, window: int | None) -> ProjectedGraph:
    return ProjectedGraph(layer, year, set(), {}, window)


def project_firms(g: TemporalBipartiteGraph, snapshot_year: int, window_years: int = 7) -> ProjectedGraph:
    """Project onto the firm layer at a yearly snapshot.

    Firms f1 and f2 are linked when some investor holds deals in both,
    dated at most ``window_years`` apart (symmetric, in exact days) and
    both on or before the snapshot's year end. Edge weight counts the
    distinct common investors.
    """
    if g.min_year is None or not g.min_year <= snapshot_year <= g.max_year:
        warnings.warn(f"snapshot year {snapshot_year} outside data range; returning empty projection")
        return _empty_projection(FIRM, snapshot_year, window_years)

    deals = g.snapshot_deals(snapshot_year)
    nodes = {d.firm_id for d in deals}
    max_gap_days = window_years * DAYS_PER_YEAR

    by_investor: dict[str, dict[str, list[Date]]] = {}
    for d in deals:
        by_investor.setdefault(d.investor_id, {}).setdefault(d.firm_id, []).append(d.date)

    witnesses: dict[tuple[str, str], set] = {}
    for investor, portfolio in by_investor.items():
        firms = sorted(portfolio)
        for i, f1 in enumerate(firms):
            d1s = portfolio[f1]
            for f2 in firms[i + 1:]:
                if any(abs((a - b).days) <= max_gap_days for a in d1s for b in portfolio[f2]):
                    witnesses.setdefault((f1, f2), set()).add(investor)
    return ProjectedGraph(FIRM, snapshot_year, nodes, witnesses, window_years)


def project_investors(g: TemporalBipartiteGraph, snapshot_year: int) -> ProjectedGraph:
    """Project onto the investor layer: co-membership in a firm's round."""
    if g.min_year is None or not g.min_year <= snapshot_year <= g.max_year:
        warnings.warn(f"snapshot year {snapshot_year} outside data range; returning empty projection")
        return _empty_projection(INVESTOR, snapshot_year, None)

    deals = g.snapshot_deals(snapshot_year)
    nodes = {d.investor_id for d in deals}

    by_round: dict[tuple[str, str], set] = {}
    for d in deals:
        by_round.setdefault((d.firm_id, d.round_id), set()).add(d.investor_id)

    witnesses: dict[tuple[str, str], set] = {}
    for round_key, members in by_round.items():
        ordered = sorted(members)
        for i, u in enumerate(ordered):
            for v in ordered[i + 1:]:
                witnesses.setdefault((u, v), set()).add(round_key)
    return ProjectedGraph(INVESTOR, snapshot_year, nodes, witnesses, None)


def first_round(g: TemporalBipartiteGraph, firm: str) -> FirstRound:
    """The firm's earliest funding round (ties broken by round_id).

    Returns the round whose earliest deal is the firm's first recorded
    investment, with the total amount and the full investor set of that
    round (including deals in it dated later).
    """
    rounds: dict[str, list[DealRecord]] = {}
    for d in g.edges:
        if d.firm_id == firm:
            rounds.setdefault(d.round_id, []).append(d)
    if not rounds:
        raise NotFoundError(f"firm {firm!r} has no deals")
    best = min(rounds, key=lambda rid: (min(d.date for d in rounds[rid]), rid))
    deals = rounds[best]
    return FirstRound(
        round_id=best,
        date=min(d.date for d in deals),
        amount_total=sum(d.amount for d in deals),
        investors=frozenset(d.investor_id for d in deals),
    )


def first_rounds(g: TemporalBipartiteGraph) -> dict[str, FirstRound]:
    """First rounds of every firm-role node, in one pass over the deals."""
    rounds: dict[str, dict[str, list[DealRecord]]] = {}
    for d in g.edges:
        rounds.setdefault(d.firm_id, {}).setdefault(d.round_id, []).append(d)
    out: dict[str, FirstRound] = {}
    for firm, per_round in rounds.items():
        best = min(per_round, key=lambda rid: (min(d.date for d in per_round[rid]), rid))
        deals = per_round[best]
        out[firm] = FirstRound(best, min(d.date for d in deals),
                               sum(d.amount for d in deals),
                               frozenset(d.investor_id for d in deals))
    return out


def write_projection_csv(pg: ProjectedGraph, out_dir: str | Path) -> Path:
    """Dump a projection as ``proj_{layer}_{year}_w{window}.csv`` (u,v,weight)."""
    window = pg.window_years if pg.window_years is not None else 0
    path = Path(out_dir) / f"proj_{pg.layer.lower()}_{pg.snapshot_year}_w{window}.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["u", "v", "weight"])
        for u, v, w in pg.sorted_edges():
            writer.writerow([u, v, str(w)])
    return path
