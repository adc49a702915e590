"""Unit disk graph construction and centralized graph queries.

The graph is the only thing the distributed layer may read (adjacency and
IDs); node positions are kept purely for oracle-side verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np


@dataclass
class DegreeHistogram:
    bin_count: int
    bin_width: float
    counts: np.ndarray  # length bin_count, sums to n
    delta: int  # max degree

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.bin_count) + 0.5) * self.bin_width


class UnitDiskGraph:
    """Immutable unit disk graph over unique positive node IDs.

    IDs are usually a seeded permutation of 1..n but gaps are allowed;
    ID-indexed arrays are sized max_id + 1.  Adjacency is stored CSR-style
    indexed by ID; rows are ascending.  `positions` exists for oracles only
    -- protocol code must not read it.
    """

    def __init__(self, ids: np.ndarray, xy: np.ndarray, R: float,
                 indptr: np.ndarray, indices: np.ndarray):
        self.n = len(ids)
        self.R = R
        self.ids = ids  # sorted
        self.max_id = int(ids[-1])
        self.positions = xy  # row v = position of node id v
        self.indptr = indptr
        self.indices = indices
        self._nbr_lists: list[list[int]] | None = None
        self._id_list: list[int] | None = None

    @property
    def id_list(self) -> list[int]:
        if self._id_list is None:
            self._id_list = self.ids.tolist()
        return self._id_list

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        """Degree of node v at index v (0 at unused IDs)."""
        return np.diff(self.indptr)

    def neighbor_lists(self) -> list[list[int]]:
        """Adjacency as plain int lists (built once; used by the executor)."""
        if self._nbr_lists is None:
            idx = self.indices.tolist()
            ptr = self.indptr.tolist()
            self._nbr_lists = [idx[ptr[v]:ptr[v + 1]] for v in range(self.max_id + 1)]
        return self._nbr_lists

    def edge_count(self) -> int:
        return len(self.indices) // 2


def build_udg(positions: Mapping[int, tuple[float, float]] | tuple[np.ndarray, np.ndarray],
              R: float = 1.0) -> UnitDiskGraph:
    """Build the unit disk graph: u ~ v iff ||p(u) - p(v)|| <= R (inclusive).

    `positions` is either {id: (x, y)} or a pair (ids, xy_array).  Uses
    uniform grid bucketing with cell size R, expected O(n * mu) time.  The
    result is independent of input order (rows are canonically sorted).
    """
    if isinstance(positions, Mapping):
        ids = np.fromiter(positions.keys(), dtype=np.int64)
        xy = np.array([positions[int(v)] for v in ids], dtype=float)
    else:
        ids, xy = positions
        ids = np.asarray(ids, dtype=np.int64)
        xy = np.asarray(xy, dtype=float)
    n = len(ids)
    if n < 1 or len(np.unique(ids)) != n or ids.min() < 1:
        raise ValueError("node IDs must be unique positive integers")
    m = int(ids.max())

    cell = np.floor(xy / R).astype(np.int64)
    cx0, cy0 = cell.min(axis=0)
    ncx = int(cell[:, 0].max() - cx0) + 1
    key = (cell[:, 0] - cx0) * (int(cell[:, 1].max() - cy0) + 2) + (cell[:, 1] - cy0)
    order = np.argsort(key, kind="stable")
    skey = key[order]
    starts = np.flatnonzero(np.r_[True, skey[1:] != skey[:-1]])
    bounds = np.r_[starts, len(skey)]
    cell_of = {int(skey[s]): (int(s), int(e)) for s, e in zip(starts, bounds[1:])}
    stride = int(cell[:, 1].max() - cy0) + 2

    R2 = R * R
    src: list[np.ndarray] = []
    dst: list[np.ndarray] = []

    def link(rows_a: np.ndarray, rows_b: np.ndarray, same: bool) -> None:
        pa, pb = xy[rows_a], xy[rows_b]
        dx = pa[:, 0, None] - pb[None, :, 0]
        dy = pa[:, 1, None] - pb[None, :, 1]
        hit = dx * dx + dy * dy <= R2
        if same:
            hit &= np.tri(len(rows_a), k=-1, dtype=bool)
        ai, bi = np.nonzero(hit)
        if len(ai):
            src.append(rows_a[ai])
            dst.append(rows_b[bi])

    # half-neighborhood offsets cover each cell pair exactly once
    offsets = ((0, 1), (1, -1), (1, 0), (1, 1))
    for k, (s, e) in cell_of.items():
        rows = order[s:e]
        link(rows, rows, same=True)
        for ox, oy in offsets:
            nb = cell_of.get(k + ox * stride + oy)
            if nb is not None:
                link(rows, order[nb[0]:nb[1]], same=False)

    if src:
        u = np.concatenate(src)
        v = np.concatenate(dst)
        iu = np.concatenate([ids[u], ids[v]])
        iv = np.concatenate([ids[v], ids[u]])
    else:
        iu = np.empty(0, dtype=np.int64)
        iv = np.empty(0, dtype=np.int64)

    order2 = np.lexsort((iv, iu))
    iu, iv = iu[order2], iv[order2]
    counts = np.bincount(iu, minlength=m + 1)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = iv.astype(np.int64)

    pos = np.zeros((m + 1, 2))
    pos[ids] = xy
    return UnitDiskGraph(ids=np.sort(ids), xy=pos, R=R, indptr=indptr, indices=indices)


def degree(g: UnitDiskGraph, v: int) -> int:
    return g.degree(v)


def max_degree(g: UnitDiskGraph) -> int:
    return int(g.degrees()[g.ids].max())


def degree_bin(d: int, delta: int, bin_count: int) -> int:
    """Quantization bin of degree d over [0, delta]; last bin closed."""
    if delta <= 0:
        return 0
    return min((d * bin_count) // delta, bin_count - 1)


def histogram(g: UnitDiskGraph, bin_count: int = 64) -> DegreeHistogram:
    """Degree census quantized into bin_count equal bins over [0, delta]."""
    if bin_count < 16:
        raise ValueError("bin_count must be >= 16")
    deg = g.degrees()[g.ids]
    delta = int(deg.max())
    if delta == 0:
        counts = np.zeros(bin_count, dtype=np.int64)
        counts[0] = g.n
        return DegreeHistogram(bin_count, 0.0, counts, 0)
    bins = np.minimum((deg.astype(np.int64) * bin_count) // delta, bin_count - 1)
    counts = np.bincount(bins, minlength=bin_count)
    return DegreeHistogram(bin_count, delta / bin_count, counts, delta)


def histogram_from_counts(counts: Iterable[int], delta: int) -> DegreeHistogram:
    c = np.asarray(list(counts), dtype=np.int64)
    return DegreeHistogram(len(c), (delta / len(c)) if delta else 0.0, c, delta)


def hop_bfs(g: UnitDiskGraph, sources: Iterable[int]) -> np.ndarray:
    """Multi-source BFS hop counts, indexed by ID; unreachable = inf."""
    src = [int(s) for s in sources]
    if not src:
        raise ValueError("sources must be non-empty")
    dist = np.full(g.max_id + 1, np.inf)
    dist[0] = np.nan
    frontier = np.unique(np.array(src, dtype=np.int64))
    dist[frontier] = 0.0
    d = 0
    indptr, indices = g.indptr, g.indices
    while len(frontier):
        d += 1
        segs = [indices[indptr[v]:indptr[v + 1]] for v in frontier]
        if not segs:
            break
        cand = np.unique(np.concatenate(segs)) if segs else np.empty(0, np.int64)
        nxt = cand[np.isinf(dist[cand])]
        dist[nxt] = d
        frontier = nxt
    return dist


def is_connected(g: UnitDiskGraph) -> bool:
    if g.n <= 1:
        return True
    dist = hop_bfs(g, [int(g.ids[0])])
    return bool(np.isfinite(dist[g.ids]).all())


def dump_edges(g: UnitDiskGraph, path: str) -> None:
    """Debug dump: one sorted 'u v' line per undirected edge."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in g.id_list:
            for u in g.neighbors(v):
                if v < u:
                    fh.write(f"{v} {u}\n")


def dump_positions(g: UnitDiskGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,x,y\n")
        for v in g.id_list:
            fh.write(f"{v},{g.positions[v, 0]!r},{g.positions[v, 1]!r}\n")
