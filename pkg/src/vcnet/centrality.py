"""Node-level statistics on projected graphs and per-firm covariates.

All measures are computed on the unweighted simple projection (edge
multiplicities are kept on the graph for diagnostics but ignored here).
Graphs are typically disconnected, so distance-based measures use
component-corrected normalizations that stay finite and comparable:

* ``closeness``: (r/(n-1)) * (r/sum of distances), r = #reachable nodes;
* ``harmonic``: sum of inverse distances divided by (n-1), 1/inf = 0;
* ``eigenvector``: dominant eigenvector per connected component, scaled
  to unit Euclidean norm within the component (isolated nodes get 0);
* ``newman_betweenness``: current flow per component via the Laplacian
  pseudo-inverse, endpoints excluded, normalized like shortest-path
  betweenness (components smaller than 3 get 0);
* ``pagerank``: teleporting walk over all n nodes; isolated nodes hold
  no outgoing walk mass and receive only the teleport share.

Ties anywhere (VoteRank election, rankings) break by node-id order.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError
from .graph import FIRM, ProjectedGraph, TemporalBipartiteGraph, first_rounds

#: Measures computed on both layers, keyed as they appear in covariate names.
COMMON_MEASURES = (
    "degree_centrality",
    "average_neighbor_degree",
    "betweenness",
    "newman_betweenness",
    "closeness_centrality",
    "harmonic_centrality",
    "eigenvector_centrality",
    "pagerank",
    "clustering",
    "voterank",
)
#: Additional firm-layer-only columns.
FIRM_ONLY_MEASURES = ("core_number", "n_investors")

SUMMARIES = ("max", "min", "median")


# ---------------------------------------------------------------------------
# Elementary measures
# ---------------------------------------------------------------------------

def degree_centrality(pg: ProjectedGraph) -> dict[str, float]:
    """deg(v) / (n - 1); zero on graphs with fewer than two nodes."""
    n = len(pg)
    if n <= 1:
        return {v: 0.0 for v in pg.nodes}
    deg = pg.arrays().degrees
    return {v: float(deg[i]) / (n - 1) for i, v in enumerate(pg.nodes)}


def average_neighbor_degree(pg: ProjectedGraph) -> dict[str, float]:
    """Mean degree over neighbors; 0 for isolated nodes."""
    arr = pg.arrays()
    out = {}
    for i, v in enumerate(pg.nodes):
        nbrs = arr.adj[i]
        out[v] = float(arr.degrees[nbrs].mean()) if nbrs.size else 0.0
    return out


def clustering(pg: ProjectedGraph) -> dict[str, float]:
    """triangles(v) / C(deg v, 2); 0 when deg(v) < 2."""
    arr = pg.arrays()
    adj_sets = [set(a.tolist()) for a in arr.adj]
    out = {}
    for i, v in enumerate(pg.nodes):
        k = int(arr.degrees[i])
        if k < 2:
            out[v] = 0.0
            continue
        links = sum(len(adj_sets[i] & adj_sets[u]) for u in arr.adj[i]) // 2
        out[v] = 2.0 * links / (k * (k - 1))
    return out


def core_number(pg: ProjectedGraph) -> dict[str, int]:
    """k-core number via iterative peeling of minimum-degree nodes."""
    arr = pg.arrays()
    n = len(pg.nodes)
    deg = arr.degrees.copy()
    removed = np.zeros(n, dtype=bool)
    heap = [(int(deg[i]), i) for i in range(n)]
    heapq.heapify(heap)
    core = np.zeros(n, dtype=np.int64)
    current = 0
    while heap:
        d, i = heapq.heappop(heap)
        if removed[i] or d != deg[i]:
            continue
        current = max(current, d)
        core[i] = current
        removed[i] = True
        for u in arr.adj[i]:
            if not removed[u]:
                deg[u] -= 1
                heapq.heappush(heap, (int(deg[u]), int(u)))
    return {v: int(core[i]) for i, v in enumerate(pg.nodes)}


# ---------------------------------------------------------------------------
# Shortest-path machinery (layered BFS, vectorized over edge arrays)
# ---------------------------------------------------------------------------

def _directed_edges(pg: ProjectedGraph) -> tuple[np.ndarray, np.ndarray]:
    uv = pg.arrays().edge_uv
    if uv.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate([uv[:, 0], uv[:, 1]]), np.concatenate([uv[:, 1], uv[:, 0]])


def _bfs_layers(heads: np.ndarray, tails: np.ndarray, n: int, s: int):
    """Yield (distance array, list of BFS layers) from source ``s``."""
    dist = np.full(n, -1, dtype=np.int64)
    dist[s] = 0
    layers = [np.array([s], dtype=np.int64)]
    frontier_mask = np.zeros(n, dtype=bool)
    frontier_mask[s] = True
    d = 0
    while True:
        cand = tails[frontier_mask[heads]]
        if cand.size == 0:
            break
        new = np.unique(cand[dist[cand] == -1])
        if new.size == 0:
            break
        d += 1
        dist[new] = d
        layers.append(new)
        frontier_mask = np.zeros(n, dtype=bool)
        frontier_mask[new] = True
    return dist, layers


def betweenness(pg: ProjectedGraph) -> dict[str, float]:
    """Shortest-path betweenness with Brandes-style accumulation.

    Normalized by 2 / ((n-1)(n-2)) so that the middle node of a path of
    three scores exactly 1; pairs in other components contribute nothing.
    """
    n = len(pg)
    if n < 3:
        return {v: 0.0 for v in pg.nodes}
    heads, tails = _directed_edges(pg)
    bc = np.zeros(n)
    for s in range(n):
        dist, layers = _bfs_layers(heads, tails, n, s)
        sigma = np.zeros(n)
        sigma[s] = 1.0
        for layer in layers[:-1]:
            mask = np.zeros(n, dtype=bool)
            mask[layer] = True
            sel = mask[heads] & (dist[tails] == dist[heads] + 1)
            np.add.at(sigma, tails[sel], sigma[heads[sel]])
        delta = np.zeros(n)
        for layer in reversed(layers[1:]):
            mask = np.zeros(n, dtype=bool)
            mask[layer] = True
            sel = mask[tails] & (dist[heads] == dist[tails] - 1)
            hs, ts = heads[sel], tails[sel]
            np.add.at(delta, hs, sigma[hs] / sigma[ts] * (1.0 + delta[ts]))
        delta[s] = 0.0
        bc += delta
    bc /= (n - 1) * (n - 2)  # each unordered pair was accumulated twice
    return {v: float(bc[i]) for i, v in enumerate(pg.nodes)}


def closeness(pg: ProjectedGraph) -> dict[str, float]:
    """Component-corrected closeness: (r/(n-1)) * (r/total distance)."""
    n = len(pg)
    heads, tails = _directed_edges(pg)
    out = {}
    for i, v in enumerate(pg.nodes):
        dist, _ = _bfs_layers(heads, tails, n, i)
        reach = dist > 0
        r = int(reach.sum())
        if r == 0:
            out[v] = 0.0
        else:
            out[v] = (r / (n - 1)) * (r / float(dist[reach].sum()))
    return out


def harmonic(pg: ProjectedGraph) -> dict[str, float]:
    """Mean inverse distance to all other nodes (1/inf = 0)."""
    n = len(pg)
    if n <= 1:
        return {v: 0.0 for v in pg.nodes}
    heads, tails = _directed_edges(pg)
    out = {}
    for i, v in enumerate(pg.nodes):
        dist, _ = _bfs_layers(heads, tails, n, i)
        reach = dist > 0
        out[v] = float((1.0 / dist[reach]).sum()) / (n - 1)
    return out


# ---------------------------------------------------------------------------
# Spectral measures
# ---------------------------------------------------------------------------

def _components(pg: ProjectedGraph) -> list[np.ndarray]:
    n = len(pg)
    heads, tails = _directed_edges(pg)
    seen = np.zeros(n, dtype=bool)
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        dist, _ = _bfs_layers(heads, tails, n, s)
        members = np.flatnonzero(dist >= 0)
        seen[members] = True
        comps.append(members)
    return comps


def _adjacency(pg: ProjectedGraph) -> sp.csr_matrix:
    n = len(pg)
    uv = pg.arrays().edge_uv
    if uv.size == 0:
        return sp.csr_matrix((n, n))
    data = np.ones(2 * len(uv))
    rows = np.concatenate([uv[:, 0], uv[:, 1]])
    cols = np.concatenate([uv[:, 1], uv[:, 0]])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def eigenvector(pg: ProjectedGraph, tol: float = 1e-10, max_iter: int = 10000) -> dict[str, float]:
    """Dominant-eigenvector centrality, unit Euclidean norm per component.

    Power iteration runs on A + I, which has the same dominant
    eigenvector as A but converges on bipartite components too. Isolated
    nodes get 0.
    """
    n = len(pg)
    values = np.zeros(n)
    A = _adjacency(pg)
    for comp in _components(pg):
        if comp.size < 2:
            continue
        sub = A[np.ix_(comp, comp)].tocsr()
        x = np.full(comp.size, 1.0 / np.sqrt(comp.size))
        for _ in range(max_iter):
            y = sub @ x + x
            y /= np.linalg.norm(y)
            residual = float(np.abs(y - x).max())
            x = y
            if residual < tol:
                break
        else:
            raise ConvergenceError("eigenvector power iteration did not converge", residual)
        values[comp] = x
    return {v: float(values[i]) for i, v in enumerate(pg.nodes)}


def pagerank(pg: ProjectedGraph, damping: float = 0.85,
             tol: float = 1e-12, max_iter: int = 10000) -> dict[str, float]:
    """PageRank of the degree-normalized walk with uniform teleport.

    Walk mass at degree-0 nodes teleports uniformly, so the values sum
    to 1 over the whole graph regardless of isolated nodes.
    """
    n = len(pg)
    if n == 0:
        return {}
    A = _adjacency(pg)
    deg = pg.arrays().degrees.astype(float)
    dangling = deg == 0
    inv_deg = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, deg))
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        spread = A @ (p * inv_deg)
        d_mass = float(p[dangling].sum())
        p_next = (1.0 - damping) / n + damping * (spread + d_mass / n)
        residual = float(np.abs(p_next - p).sum())
        p = p_next
        if residual < tol:
            break
    else:
        raise ConvergenceError("pagerank power iteration did not converge", residual)
    return {v: float(p[i]) for i, v in enumerate(pg.nodes)}


# ---------------------------------------------------------------------------
# Current-flow (random-walk) betweenness
# ---------------------------------------------------------------------------

def newman_betweenness(pg: ProjectedGraph, rcond: float = 1e-10) -> dict[str, float]:
    """Current-flow betweenness via the component Laplacian pseudo-inverse.

    A unit current is injected between every source-target pair in a
    component; a node's score is the mean net flow through it, with
    endpoint flow excluded and the shortest-path normalization
    2/((n-1)(n-2)) applied. Nodes in components smaller than 3 get 0.
    On trees this equals shortest-path betweenness exactly.
    """
    n = len(pg)
    values = np.zeros(n)
    if n >= 3:
        uv = pg.arrays().edge_uv
        comps = _components(pg)
        comp_id = np.empty(n, dtype=np.int64)
        for c, comp in enumerate(comps):
            comp_id[comp] = c
        for c, comp in enumerate(comps):
            nc = comp.size
            if nc < 3:
                continue
            local = np.full(n, -1, dtype=np.int64)
            local[comp] = np.arange(nc)
            in_comp = uv[comp_id[uv[:, 0]] == c] if uv.size else uv
            edges = [(int(local[u]), int(local[v])) for u, v in in_comp]
            m = len(edges)
            L = np.zeros((nc, nc))
            for u, v in edges:
                L[u, u] += 1.0
                L[v, v] += 1.0
                L[u, v] -= 1.0
                L[v, u] -= 1.0
            pinv = np.linalg.pinv(L, rcond=rcond)
            # Potential differences across each edge for all possible sinks.
            diff = np.empty((m, nc))
            for k, (u, v) in enumerate(edges):
                diff[k] = pinv[u] - pinv[v]
            # Sum over source<target pairs of |current through edge e|:
            # for sorted row x, sum_{s<t} |x_s - x_t| = sum_i (2i - nc + 1) x_(i).
            coef = 2.0 * np.arange(nc) - nc + 1.0
            per_edge = np.sort(diff, axis=1) @ coef
            through = np.zeros(nc)
            for k, (u, v) in enumerate(edges):
                through[u] += 0.5 * per_edge[k]
                through[v] += 0.5 * per_edge[k]
            through -= (nc - 1) / 2.0  # endpoint flow of the nc-1 pairs at each node
            values[comp] = through * 2.0 / ((n - 1) * (n - 2))
    return {v: float(values[i]) for i, v in enumerate(pg.nodes)}


# ---------------------------------------------------------------------------
# VoteRank
# ---------------------------------------------------------------------------

def voterank(pg: ProjectedGraph) -> dict[str, int]:
    """Iterative voting rank; rank 1 is the strongest spreader.

    Nodes vote with ability starting at 1; each round the unselected
    node with the highest neighbor-ability sum is elected, its ability
    drops to 0 and its neighbors lose 1/<k> ability (floored at 0),
    where <k> is the whole-graph mean degree. Election stops when the
    best remaining score is 0; unselected nodes share the next rank.

    With <k> = 2m/n every ability is a multiple of 1/(2m), so the loop
    runs on integer numerators: ties are exact and the elected order
    cannot depend on float summation order.
    """
    n = len(pg)
    if n == 0:
        return {}
    arr = pg.arrays()
    A = _adjacency(pg).astype(np.int64)
    m2 = 2 * pg.n_edges()  # common ability denominator; one vote costs n units
    num = np.full(n, m2, dtype=np.int64)
    selectable = np.ones(n, dtype=bool)
    order: list[int] = []
    while selectable.any():
        scores = A @ num
        scores[~selectable] = -1
        best = int(np.argmax(scores))  # first max = smallest node id; ties exact
        if scores[best] <= 0:
            break
        order.append(best)
        selectable[best] = False
        num[best] = 0
        nbrs = arr.adj[best]
        num[nbrs] = np.maximum(0, num[nbrs] - n)
    ranks = {pg.nodes[i]: r + 1 for r, i in enumerate(order)}
    shared = len(order) + 1
    for v in pg.nodes:
        ranks.setdefault(v, shared)
    return ranks


# ---------------------------------------------------------------------------
# Frames and firm covariates
# ---------------------------------------------------------------------------

@dataclass
class CentralityFrame:
    """Per-node values of every measure at one (layer, snapshot year)."""

    snapshot_year: int
    layer: str
    measures: dict[str, dict[str, float]]

    def nodes(self) -> list[str]:
        if not self.measures:
            return []
        return sorted(next(iter(self.measures.values())))


def compute_frame(pg: ProjectedGraph, g: TemporalBipartiteGraph | None = None,
                  damping: float = 0.85, measures: tuple[str, ...] | None = None) -> CentralityFrame:
    """Compute the requested measures (default: all) on a projection.

    ``core_number`` and ``n_investors`` are firm-layer-only;
    ``n_investors`` additionally needs the bipartite graph ``g``.
    """
    fns = {
        "degree_centrality": degree_centrality,
        "average_neighbor_degree": average_neighbor_degree,
        "betweenness": betweenness,
        "newman_betweenness": newman_betweenness,
        "closeness_centrality": closeness,
        "harmonic_centrality": harmonic,
        "eigenvector_centrality": lambda p: eigenvector(p),
        "pagerank": lambda p: pagerank(p, damping=damping),
        "clustering": clustering,
        "voterank": voterank,
    }
    wanted = measures if measures is not None else COMMON_MEASURES
    out: dict[str, dict[str, float]] = {name: fns[name](pg) for name in wanted if name in fns}
    if pg.layer == FIRM:
        if measures is None or "core_number" in (measures or ()):
            out["core_number"] = core_number(pg)
        if g is not None and (measures is None or "n_investors" in (measures or ())):
            counts: dict[str, set] = {v: set() for v in pg.nodes}
            for d in g.snapshot_deals(pg.snapshot_year):
                if d.firm_id in counts:
                    counts[d.firm_id].add(d.investor_id)
            out["n_investors"] = {v: len(s) for v, s in counts.items()}
    return CentralityFrame(pg.snapshot_year, pg.layer, out)


@dataclass
class FirmCovariates:
    """One covariate row: own firm-layer values plus early-investor summaries."""

    firm_id: str
    first_year: int
    values: dict[str, float]
    investor_measures_missing: bool = False


def covariate_columns() -> list[str]:
    """Ordered covariate column names of the firm covariate table."""
    cols = ["first_amount", "n_investors"]
    cols += [f"{m}_org" for m in COMMON_MEASURES] + ["core_number_org"]
    cols += [f"{m}_{s}" for m in COMMON_MEASURES for s in SUMMARIES]
    return cols


def assemble_covariates(firm_frame: CentralityFrame, investor_frame: CentralityFrame,
                        g: TemporalBipartiteGraph) -> list[FirmCovariates]:
    """Build covariate rows for firms first funded in the frames' year.

    For each such firm: its own firm-layer measures (``_org``), plus
    max/min/median of every investor-layer measure over its first-round
    investors, its distinct-investor count within the snapshot, and the
    first-round amount. First-round investors absent from the investor
    frame are dropped from the summaries; if none remain, the investor
    summaries are 0 and the row is flagged.
    """
    year = firm_frame.snapshot_year
    rounds = first_rounds(g)
    investor_counts: dict[str, set] = {}
    for d in g.snapshot_deals(year):
        investor_counts.setdefault(d.firm_id, set()).add(d.investor_id)

    rows: list[FirmCovariates] = []
    for firm in sorted(rounds):
        fr = rounds[firm]
        if fr.date.year != year:
            continue
        values: dict[str, float] = {
            "first_amount": float(fr.amount_total),
            "n_investors": float(len(investor_counts.get(firm, ()))),
        }
        for m in COMMON_MEASURES:
            values[f"{m}_org"] = float(firm_frame.measures[m].get(firm, 0.0))
        values["core_number_org"] = float(firm_frame.measures["core_number"].get(firm, 0.0))

        missing = False
        present = [i for i in sorted(fr.investors)
                   if i in investor_frame.measures[COMMON_MEASURES[0]]]
        if not present:
            missing = True
        for m in COMMON_MEASURES:
            if present:
                vals = np.array([investor_frame.measures[m][i] for i in present], dtype=float)
                values[f"{m}_max"] = float(vals.max())
                values[f"{m}_min"] = float(vals.min())
                values[f"{m}_median"] = float(np.median(vals))
            else:
                values[f"{m}_max"] = values[f"{m}_min"] = values[f"{m}_median"] = 0.0
        rows.append(FirmCovariates(firm, year, values, missing))
    return rows


# ---------------------------------------------------------------------------
# CSV round-trips for pipeline stages
# ---------------------------------------------------------------------------

_FRAME_COLUMNS = list(COMMON_MEASURES) + list(FIRM_ONLY_MEASURES)


def write_frames_csv(frames: list[CentralityFrame], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["year", "layer", "node"] + _FRAME_COLUMNS)
        for frame in sorted(frames, key=lambda f: (f.snapshot_year, f.layer)):
            for node in frame.nodes():
                row = [str(frame.snapshot_year), frame.layer, node]
                for m in _FRAME_COLUMNS:
                    if m in frame.measures:
                        row.append(repr(float(frame.measures[m][node])))
                    else:
                        row.append("")
                writer.writerow(row)


def read_frames_csv(path: str | Path) -> dict[tuple[int, str], CentralityFrame]:
    frames: dict[tuple[int, str], CentralityFrame] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        measure_names = header[3:]
        for row in reader:
            year, layer, node = int(row[0]), row[1], row[2]
            frame = frames.setdefault((year, layer), CentralityFrame(year, layer, {}))
            for m, raw in zip(measure_names, row[3:]):
                if raw == "":
                    continue
                frame.measures.setdefault(m, {})[node] = float(raw)
    return frames


def write_covariates_csv(rows: list[FirmCovariates], path: str | Path) -> None:
    cols = covariate_columns()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["firm_id", "first_year"] + cols + ["investor_measures_missing"])
        for r in sorted(rows, key=lambda r: r.firm_id):
            writer.writerow([r.firm_id, str(r.first_year)]
                            + [repr(float(r.values[c])) for c in cols]
                            + ["1" if r.investor_measures_missing else "0"])


def read_covariates_csv(path: str | Path) -> list[FirmCovariates]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = header[2:-1]
        out = []
        for row in reader:
            values = {c: float(raw) for c, raw in zip(cols, row[2:-1])}
            out.append(FirmCovariates(row[0], int(row[1]), values, row[-1] == "1"))
    return out
