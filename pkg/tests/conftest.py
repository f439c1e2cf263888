"""Shared builders for the test suite."""

from __future__ import annotations

import itertools
from datetime import date as Date

import numpy as np
import pytest

from vcnet.graph import FIRM, ProjectedGraph
from vcnet.ingest import DealRecord


def make_pg(n_or_names, edges, layer=FIRM, year=2010, window=7) -> ProjectedGraph:
    """Projected graph from explicit node names (or a count) and edge pairs."""
    if isinstance(n_or_names, int):
        names = [f"n{i:02d}" for i in range(n_or_names)]
    else:
        names = list(n_or_names)
    witnesses = {}
    for u, v in edges:
        u, v = (names[u], names[v]) if isinstance(u, int) else (u, v)
        pair = tuple(sorted((u, v)))
        witnesses[pair] = {pair}
    return ProjectedGraph(layer, year, set(names), witnesses, window)


def random_pg(rng: np.random.Generator, n: int, p: float) -> ProjectedGraph:
    edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return make_pg(n, edges)


def random_tree_pg(rng: np.random.Generator, n: int) -> ProjectedGraph:
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    return make_pg(n, edges)


def deal(firm, investor, round_id, iso_date, amount=100) -> DealRecord:
    return DealRecord(firm, investor, round_id, Date.fromisoformat(iso_date), amount)


def random_deals(rng: np.random.Generator, n_deals: int, n_firms: int = 10,
                 n_investors: int = 10, year_lo: int = 2000, year_hi: int = 2012):
    deals = []
    for _ in range(n_deals):
        firm = f"F{rng.integers(0, n_firms)}"
        inv = f"I{rng.integers(0, n_investors)}"
        rid = f"{firm}-R{rng.integers(0, 3)}"
        when = Date(int(rng.integers(year_lo, year_hi + 1)),
                    int(rng.integers(1, 13)), int(rng.integers(1, 29)))
        deals.append(DealRecord(firm, inv, rid, when, int(rng.integers(1, 10 ** 6))))
    return deals


@pytest.fixture
def k3_pg():
    return make_pg(["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "c")])


@pytest.fixture
def path3_pg():
    return make_pg(["a", "b", "c"], [("a", "b"), ("b", "c")])


@pytest.fixture
def star5_pg():
    return make_pg(["c0", "l1", "l2", "l3", "l4"],
                   [("c0", "l1"), ("c0", "l2"), ("c0", "l3"), ("c0", "l4")])
