"""Covariate preprocessing, correlation dendrogram, and model configurations.

Right-skewed columns (sample skewness above a threshold, default 1.0)
are mapped through log(1+x) before z-scoring; the applied transform and
the standardization constants are recorded per column so fits stay
reproducible. Columns are then clustered by the distance
``1 - |pearson correlation|`` under complete linkage; cutting the tree
into k groups (default 7) yields the per-group candidate sets whose
Cartesian product defines the model configurations.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .centrality import FirmCovariates
from .errors import ConfigError


@dataclass
class FeatureMatrix:
    """Named covariate matrix plus the per-column processing ledger."""

    row_ids: list[str]
    columns: list[str]
    data: np.ndarray  # shape (n_rows, n_columns)
    transforms: dict[str, str] = field(default_factory=dict)        # column -> none | log1p
    standardization: dict[str, tuple[float, float]] = field(default_factory=dict)  # column -> (mean, sd)
    dropped: list[tuple[str, str]] = field(default_factory=list)    # (column, reason)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def select(self, names: list[str] | tuple[str, ...]) -> np.ndarray:
        idx = [self.columns.index(n) for n in names]
        return self.data[:, idx]

    def take_rows(self, row_ids: list[str]) -> "FeatureMatrix":
        pos = {r: i for i, r in enumerate(self.row_ids)}
        idx = [pos[r] for r in row_ids]
        return replace(self, row_ids=list(row_ids), data=self.data[idx])


def matrix_from_covariates(rows: list[FirmCovariates], columns: list[str]) -> FeatureMatrix:
    """Stack covariate rows (sorted by firm id) into a raw FeatureMatrix."""
    ordered = sorted(rows, key=lambda r: r.firm_id)
    data = np.array([[r.values[c] for c in columns] for r in ordered], dtype=float)
    return FeatureMatrix([r.firm_id for r in ordered], list(columns), data)


def sample_skewness(x: np.ndarray) -> float:
    """Standardized third central moment (biased estimator)."""
    x = np.asarray(x, dtype=float)
    centered = x - x.mean()
    m2 = float((centered ** 2).mean())
    if m2 == 0.0:
        return 0.0
    m3 = float((centered ** 3).mean())
    return m3 / m2 ** 1.5


def preprocess(raw: FeatureMatrix, skew_threshold: float = 1.0) -> FeatureMatrix:
    """Log right-skewed columns, then z-score everything.

    Columns with zero variance are dropped with a warning. Columns with
    negative entries are never log-transformed. The output satisfies
    mean 0 and sample sd 1 (ddof=1) per surviving column.
    """
    kept_cols: list[str] = []
    kept_data: list[np.ndarray] = []
    out = FeatureMatrix(list(raw.row_ids), [], np.empty((len(raw.row_ids), 0)))
    for j, col in enumerate(raw.columns):
        x = raw.data[:, j].astype(float)
        if np.ptp(x) == 0.0 or len(x) < 2:
            out.dropped.append((col, "zero variance"))
            warnings.warn(f"covariate {col!r} has zero variance; dropped")
            continue
        transform = "none"
        if sample_skewness(x) > skew_threshold and x.min() >= 0.0:
            x = np.log1p(x)
            transform = "log1p"
            if np.ptp(x) == 0.0:
                out.dropped.append((col, "zero variance after log"))
                warnings.warn(f"covariate {col!r} has zero variance; dropped")
                continue
        mean = float(x.mean())
        sd = float(x.std(ddof=1))
        out.transforms[col] = transform
        out.standardization[col] = (mean, sd)
        kept_cols.append(col)
        kept_data.append((x - mean) / sd)
    out.columns = kept_cols
    out.data = np.column_stack(kept_data) if kept_data else np.empty((len(raw.row_ids), 0))
    return out


# ---------------------------------------------------------------------------
# Complete-linkage clustering on 1 - |corr|
# ---------------------------------------------------------------------------

@dataclass
class FeatureGrouping:
    """Merge tree over covariates, optionally cut into numbered groups."""

    leaves: list[str]
    merges: list[tuple[int, int, int, float]]  # (step, left, right, height); leaf i < p, internal p+step
    groups: dict[str, int] = field(default_factory=dict)  # covariate -> 1..k
    k: int | None = None


def correlation_dendrogram(fm: FeatureMatrix) -> FeatureGrouping:
    """Agglomerate covariates under complete linkage on 1 - |pearson|.

    Merge order is deterministic: ties in linkage distance break on the
    lexicographically smallest leaf names of the two clusters.
    """
    p = len(fm.columns)
    if p == 0:
        return FeatureGrouping([], [])
    corr = np.corrcoef(fm.data, rowvar=False).reshape(p, p)
    dist = 1.0 - np.abs(corr)
    np.fill_diagonal(dist, 0.0)
    dist = np.clip(dist, 0.0, None)

    members: dict[int, list[int]] = {i: [i] for i in range(p)}
    rep: dict[int, str] = {i: fm.columns[i] for i in range(p)}
    merges: list[tuple[int, int, int, float]] = []

    def linkage(a: int, b: int) -> float:
        return max(dist[i, j] for i in members[a] for j in members[b])

    for step in range(p - 1):
        active = sorted(members)
        best = None
        for ai, a in enumerate(active):
            for b in active[ai + 1:]:
                d = linkage(a, b)
                lo, hi = sorted((rep[a], rep[b]))
                key = (d, lo, hi)
                if best is None or key < best[0]:
                    best = (key, a, b)
        (d, _, _), a, b = best
        left, right = (a, b) if rep[a] <= rep[b] else (b, a)
        new = p + step
        members[new] = members.pop(a) + members.pop(b)
        rep[new] = min(fm.columns[i] for i in members[new])
        merges.append((step, left, right, float(d)))
    return FeatureGrouping(list(fm.columns), merges)


def leaf_order(fg: FeatureGrouping) -> list[str]:
    """Dendrogram leaf order: depth-first traversal of the merge tree."""
    p = len(fg.leaves)
    if p == 0:
        return []
    if p == 1:
        return list(fg.leaves)
    children = {p + step: (left, right) for step, left, right, _ in fg.merges}
    root = p + len(fg.merges) - 1

    order: list[str] = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node < p:
            order.append(fg.leaves[node])
        else:
            left, right = children[node]
            stack.append(right)
            stack.append(left)
    return order


def cut_groups(fg: FeatureGrouping, k: int) -> FeatureGrouping:
    """Cut the tree into exactly k groups, numbered in leaf order."""
    p = len(fg.leaves)
    if k > p or k < 1:
        raise ConfigError(f"cannot cut {p} covariates into {k} groups")
    parent = list(range(2 * p - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, left, right, _ in fg.merges[: p - k]:
        new = p + step
        parent[find(left)] = new
        parent[find(right)] = new

    cluster_of = {fg.leaves[i]: find(i) for i in range(p)}
    numbering: dict[int, int] = {}
    for leaf in leaf_order(fg):
        root = cluster_of[leaf]
        if root not in numbering:
            numbering[root] = len(numbering) + 1
    groups = {leaf: numbering[cluster_of[leaf]] for leaf in fg.leaves}
    return FeatureGrouping(list(fg.leaves), list(fg.merges), groups, k)


def group_members(fg: FeatureGrouping) -> dict[int, list[str]]:
    """Members of each group, in dendrogram leaf order."""
    if not fg.groups:
        raise ConfigError("grouping has not been cut into groups yet")
    order = {name: i for i, name in enumerate(leaf_order(fg))}
    out: dict[int, list[str]] = {}
    for col, grp in fg.groups.items():
        out.setdefault(grp, []).append(col)
    for grp in out:
        out[grp].sort(key=lambda c: order[c])
    return dict(sorted(out.items()))


def enumerate_configs(fg: FeatureGrouping) -> list[tuple[str, ...]]:
    """All configurations with exactly one covariate per group."""
    per_group = group_members(fg)
    return [tuple(combo) for combo in itertools.product(*per_group.values())]


# ---------------------------------------------------------------------------
# Stage artifacts
# ---------------------------------------------------------------------------

def write_grouping_csv(fg: FeatureGrouping, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["covariate", "group"])
        for col in fg.leaves:
            writer.writerow([col, str(fg.groups[col])])


def read_grouping_csv(path: str | Path) -> dict[str, int]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return {row[0]: int(row[1]) for row in reader}


def write_dendrogram_csv(fg: FeatureGrouping, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "left", "right", "height"])
        for step, left, right, height in fg.merges:
            writer.writerow([str(step), str(left), str(right), repr(height)])


def write_feature_matrix_csv(fm: FeatureMatrix, path: str | Path, id_column: str = "firm_id") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_column] + fm.columns)
        for i, rid in enumerate(fm.row_ids):
            writer.writerow([rid] + [repr(float(x)) for x in fm.data[i]])


def read_feature_matrix_csv(path: str | Path) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        row_ids, rows = [], []
        for row in reader:
            row_ids.append(row[0])
            rows.append([float(x) for x in row[1:]])
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(header) - 1))
    return FeatureMatrix(row_ids, header[1:], data)


def write_transforms_csv(fm: FeatureMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["covariate", "transform", "mean", "sd"])
        for col in fm.columns:
            mean, sd = fm.standardization[col]
            writer.writerow([col, fm.transforms[col], repr(mean), repr(sd)])
        for col, reason in fm.dropped:
            writer.writerow([col, f"dropped: {reason}", "", ""])


def write_configs_csv(configs: list[tuple[str, ...]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["config_id", "covariates"])
        for i, combo in enumerate(configs):
            writer.writerow([str(i), ";".join(combo)])


def read_configs_csv(path: str | Path) -> list[tuple[str, ...]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [tuple(row[1].split(";")) for row in reader]
