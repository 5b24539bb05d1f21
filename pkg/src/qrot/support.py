"""Support extraction and its decomposition into components.

Two support cells are connected when a path of cells alternates between
changing only the row and only the column coordinate; this is bipartite-graph
connectivity, not topological connectivity. Components are computed by
union-find over row and column nodes, with every support cell merging its row
and column.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .model import ValidationError

__all__ = ["SupportSet", "ComponentDecomposition", "support_set", "components", "partition_check"]


@dataclass(frozen=True)
class SupportSet:
    mask: np.ndarray
    tau: float


def support_set(cd, tau=None):
    """Boolean support mask ``z > tau``.

    The default threshold is relative, ``tau = 1e-8 * max(z)``: density
    entries scale like ``1 / epsilon``, so an absolute threshold would
    misclassify at small epsilon. A warning is raised when any entry sits
    within ten machine epsilons of the threshold, since the component count
    can flip on such versions of the density.
    """
    z = cd.z
    zmax = float(z.max()) if z.size else 0.0
    if tau is None:
        tau = 1e-8 * zmax
    tau = float(tau)
    if tau < 0:
        raise ValidationError("support threshold must be nonnegative")
    if zmax > 0:
        fuzz = 10.0 * np.finfo(float).eps * max(zmax, 1.0)
        ambiguous = np.abs(z - tau) <= fuzz
        if np.any(ambiguous):
            i, j = np.argwhere(ambiguous)[0]
            warnings.warn(
                f"density entry z[{i},{j}] lies within 10 ulp of the support"
                f" threshold {tau:.3e}; component count may be unstable",
                stacklevel=2,
            )
    mask = z > tau
    mask.setflags(write=False)
    return SupportSet(mask=mask, tau=tau)


class _UnionFind:
    def __init__(self, size):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:  # path compression
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.rank[ri] < self.rank[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        if self.rank[ri] == self.rank[rj]:
            self.rank[ri] += 1


@dataclass(frozen=True)
class ComponentDecomposition:
    """Labeled components of a support mask.

    ``labels[i, j]`` is -1 off support, otherwise the component id. Component
    ids are assigned in order of the smallest row index they touch (ties
    broken by smallest column index). Rows and columns that meet no support
    cell are listed in ``unmatched_rows`` / ``unmatched_cols``; downstream
    consumers exclude them rather than guess a component.
    """

    labels: np.ndarray
    row_projections: tuple
    col_projections: tuple
    count: int
    unmatched_rows: tuple = ()
    unmatched_cols: tuple = ()


def components(s):
    """Decompose a support mask into connected components.

    Union-find over ``n`` row nodes and ``m`` column nodes; each support cell
    unions its row with its column, so two cells share a component exactly
    when an alternating row/column path joins them.
    """
    n, m = s.mask.shape
    uf = _UnionFind(n + m)
    cells = np.argwhere(s.mask)
    for i, j in cells:
        uf.union(int(i), n + int(j))

    groups = {}
    for i, j in cells:
        groups.setdefault(uf.find(int(i)), []).append((int(i), int(j)))

    ordered = sorted(
        groups.values(), key=lambda cc: (min(i for i, _ in cc), min(j for _, j in cc))
    )
    labels = np.full((n, m), -1, dtype=int)
    row_projections = []
    col_projections = []
    for cid, cc in enumerate(ordered):
        rows = sorted({i for i, _ in cc})
        cols = sorted({j for _, j in cc})
        row_projections.append(tuple(rows))
        col_projections.append(tuple(cols))
        for i, j in cc:
            labels[i, j] = cid

    matched_rows = {i for cc in ordered for i, _ in cc}
    matched_cols = {j for cc in ordered for _, j in cc}
    labels.setflags(write=False)
    return ComponentDecomposition(
        labels=labels,
        row_projections=tuple(row_projections),
        col_projections=tuple(col_projections),
        count=len(ordered),
        unmatched_rows=tuple(i for i in range(n) if i not in matched_rows),
        unmatched_cols=tuple(j for j in range(m) if j not in matched_cols),
    )


def partition_check(d):
    """True iff the row projections partition the rows meeting the support, and likewise for columns."""
    rows_in_support = set(np.unique(np.nonzero(np.any(d.labels >= 0, axis=1))[0]).tolist())
    cols_in_support = set(np.unique(np.nonzero(np.any(d.labels >= 0, axis=0))[0]).tolist())
    for projections, covered in (
        (d.row_projections, rows_in_support),
        (d.col_projections, cols_in_support),
    ):
        seen = set()
        for proj in projections:
            block = set(proj)
            if block & seen:
                return False
            seen |= block
        if seen != covered:
            return False
    return True
