"""Boundary recognition: density estimation, threshold classification,
component formation over 2-hop linkage, distance floods, Voronoi flags,
token loops, and the alpha sweep.

Every distributed operation here has a centralized twin (prefix
``central_``) used as an executable oracle; the two must agree exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import geometry
from .netgraph import DegreeHistogram, UnitDiskGraph
from .simkernel import NodeProto, RunResult, run_protocol

# message kinds (disjoint from the convergetree range)
K_BND = 10     # ()                          boundary membership announcement
K_MC = 11      # (root,)                     member candidate flood
K_MF = 12      # (root, origin)              relay forward of the best candidate
K_JOIN = 13    # (root, parent)              member join notice
K_JAGG = 14    # (member, root, parent)*     relay aggregate of joins heard
K_NEAR = 15    # (dest, root)                near node registering at a member
K_UP = 16      # (via, root, size, near)     component convergecast
K_UPF = 17     # (child, root, size, near)   relayed convergecast entry
K_ASG = 18     # (root, size, near)          component totals flood
K_DIST = 19    # (root, d, anchor_q)         boundary distance wave
K_TQ = 20      # (comp, seq, *holder_nbrs)   token pass query
K_TQF = 21     # (comp, seq, holder, *nbrs)  relayed query
K_TR = 22      # (comp, seq, score, isroot, excl, via)    candidate reply
K_TRF = 23     # (cand, comp, seq, score, isroot, excl)   relayed reply
K_TC = 24      # (comp, seq, succ, via, *path)            pass choice
K_TCF = 25     # (holder, comp, seq, succ, via, *path)    relayed choice
K_TA = 26      # (comp, seq, via, dest)      successor acknowledgment
K_TAF = 27     # (comp, seq, dest)           relayed acknowledgment
K_TB = 28      # (comp, seq, dest, via)      backtrack request to previous holder
K_TBF = 29     # (comp, seq, dest)           relayed backtrack request
K_TRB = 30     # (comp, seq, failed)         rollback: un-exclude seq's candidates
K_TRBF = 31    # (comp, seq, failed)         relayed rollback

FRAC_SCALE = 1 << 16  # fractional distances travel as 16-bit fixed point


class DegenerateHistogram(ValueError):
    """Histogram unusable for density estimation."""


class NoPlateau(RuntimeError):
    """Alpha sweep found no constant run of length >= 2."""


class LoopFailure(RuntimeError):
    """Token loop backtracking exhausted a component."""


class NodeClass(enum.IntEnum):
    INTERIOR = 0
    NEAR_BOUNDARY = 1
    BOUNDARY = 2


@dataclass(frozen=True)
class DensityEstimate:
    mu_est: int
    delta: int
    mu_analytic: float | None = None


@dataclass(frozen=True)
class BoundaryComponent:
    component_id: int          # the root's node ID
    members: tuple[int, ...]
    size: int
    near_set_size: int         # |members ∪ neighbors-of-members| by default

    def ratio(self) -> float:
        return self.near_set_size / self.size


@dataclass(frozen=True)
class TokenLoop:
    component_id: int
    members: tuple[int, ...]   # closed: first == last == component root
    walk: tuple[int, ...]      # members with 2-hop relays spliced in
    excluded: frozenset[int]


@dataclass(frozen=True)
class AlphaSweep:
    grid: tuple[float, ...]
    component_counts: tuple[int, ...]
    plateau: tuple[float, float, int]  # (alpha_lo, alpha_hi, count)
    alpha_star: float


def default_alpha() -> float:
    """Fallback threshold factor, just above the 3/4 bound that covers
    corner angles between pi/2 and 3pi/2."""
    return 0.77


def threshold_units(alpha: float, mu_est: int) -> int:
    """Integer degree threshold equivalent to |N(v)| <= alpha * mu_est."""
    return int(math.floor(alpha * mu_est))


# --------------------------------------------------------------------------
# density estimation
# --------------------------------------------------------------------------

def _bin_representatives(delta: int, bins: int) -> np.ndarray:
    """Rounded midpoint of each bin's integer degree range.

    Bin b holds the integer degrees d with d*bins//delta == b, so its

    representative is the midpoint of [ceil(b*delta/bins), hi] where hi is
    the largest degree mapping to b; the exact-range midpoint makes a
    single-degree census estimate that degree exactly.
    """
    b = np.arange(bins)
    lo = np.ceil(b * delta / bins - 1e-12)
    hi = np.ceil((b + 1) * delta / bins - 1e-12) - 1
    hi[-1] = delta
    return np.floor((lo + hi) / 2 + 0.5)


def estimate_mu(hist: DegreeHistogram, mu_analytic: float | None = None) -> DensityEstimate:
    """Modal neighborhood size, restricted to bins above delta/2.

    The degree census overlays an interior peak near the unconstrained mean
    with a boundary ramp reaching down to half of it; the upper-half
    restriction keeps the mode on the interior peak.  Ties go to the higher
    bin; the representative degree is the midpoint of the bin's integer
    degree range, rounded.
    """
    if hist.delta < 4:
        raise DegenerateHistogram(f"max degree {hist.delta} < 4")
    reps = _bin_representatives(hist.delta, hist.bin_count)
    eligible = reps > hist.delta / 2
    if not (np.asarray(hist.counts)[eligible] > 0).any():
        raise DegenerateHistogram("all histogram mass at or below delta/2")
    cand = np.where(eligible, hist.counts, -1)
    best = len(cand) - 1 - int(np.argmax(cand[::-1]))
    return DensityEstimate(mu_est=int(reps[best]), delta=hist.delta,
                           mu_analytic=mu_analytic)


# --------------------------------------------------------------------------
# classification: B(alpha) plus near-boundary announcement
# --------------------------------------------------------------------------

class _ClassifyNode(NodeProto):
    __slots__ = ("threshold", "cls")

    def __init__(self, vid, nbrs, threshold):
        super().__init__(vid, nbrs)
        self.threshold = threshold
        self.cls = NodeClass.INTERIOR

    def on_round(self, rnd, inbox):
        if rnd == 0:
            if len(self.nbrs) <= self.threshold:
                self.cls = NodeClass.BOUNDARY
                return ((K_BND,),)
            return ()
        if self.cls != NodeClass.BOUNDARY:
            for _s, m in inbox:
                if m[0] == K_BND:
                    self.cls = NodeClass.NEAR_BOUNDARY
                    break
        return ()


def classify(g: UnitDiskGraph, threshold: int,
             trace=None) -> tuple[np.ndarray, RunResult]:
    """Distributed B(alpha) rule: BOUNDARY iff degree <= threshold, one
    announcement per boundary node, hearers become NEAR_BOUNDARY."""
    res = run_protocol(g, lambda v, nb: _ClassifyNode(v, nb, threshold), trace=trace)
    classes = np.zeros(g.max_id + 1, dtype=np.int8)
    for v in g.id_list:
        classes[v] = int(res.nodes[v].cls)
    return classes, res


def central_classify(g: UnitDiskGraph, threshold: int) -> np.ndarray:
    """Centralized twin of classify()."""
    deg = g.degrees()
    classes = np.zeros(g.n + 1, dtype=np.int8)
    bnd = deg <= threshold
    bnd[0] = False
    classes[bnd] = int(NodeClass.BOUNDARY)
    bidx = np.flatnonzero(bnd)
    near = np.zeros(g.max_id + 1, dtype=bool)
    for v in bidx:
        near[g.neighbors(v)] = True
    near &= ~bnd
    classes[near] = int(NodeClass.NEAR_BOUNDARY)
    return classes


# --------------------------------------------------------------------------
# component formation (2-hop linkage, max-ID roots)
# --------------------------------------------------------------------------

class _CompFloodNode(NodeProto):
    """Members flood the max member ID of their 2-hop-linked component.

    Non-members relay: they re-broadcast the best candidate heard directly
    from a member whenever it improves, which realizes exactly the
    hop-distance-2 linkage without letting floods travel further.
    """

    __slots__ = ("member", "root", "parent", "via", "best_fwd")

    def __init__(self, vid, nbrs, member):
        super().__init__(vid, nbrs)
        self.member = member
        self.root = vid if member else 0
        self.parent = 0
        self.via = 0
        self.best_fwd = 0

    def on_round(self, rnd, inbox):
        if rnd == 0:
            return ((K_MC, self.vid),) if self.member else ()
        if self.member:
            best, origin, via = self.root, 0, 0
            for s, m in inbox:
                k = m[0]
                if k == K_MC:
                    if m[1] > best:
                        best, origin, via = m[1], s, 0
                elif k == K_MF and m[1] > best:
                    best, origin, via = m[1], m[2], s
            if best > self.root:
                self.root, self.parent, self.via = best, origin, via
                return ((K_MC, best),)
            return ()
        # relay: track the best candidate heard directly from members
        best, origin = self.best_fwd, 0
        for s, m in inbox:
            if m[0] == K_MC and m[1] > best:
                best, origin = m[1], s
        if best > self.best_fwd:
            self.best_fwd = best
            return ((K_MF, best, origin),)
        return ()

    def state_name(self):
        return f"compflood(member={self.member})"


class _CompOrgNode(NodeProto):
    """Join, size/near-count convergecast, and totals flood for every
    component at once.  Rounds 0-2 have fixed timing (join, relay
    aggregate, near registration); the convergecast then runs until the
    roots flood their totals back down.
    """

    __slots__ = ("member", "root", "parent", "via", "children", "child_done",
                 "peers", "near_roots", "near_reg", "near_count", "size_acc",
                 "near_acc", "sent_up", "comp_size", "comp_near", "relayed_asg",
                 "got_yard")

    def __init__(self, vid, nbrs, member, root, parent, via):
        super().__init__(vid, nbrs)
        self.member = member
        self.root = root
        self.parent = parent
        self.via = via
        self.children: list[int] = []
        self.child_done: dict[int, tuple[int, int]] = {}
        self.peers: dict[int, int] = {}        # member -> root, within 2 hops
        self.near_roots: dict[int, int] = {}   # root -> smallest member heard
        self.near_reg = 0                      # distinct near reporters at me
        self.size_acc = 1
        self.near_acc = 0
        self.sent_up = False
        self.comp_size = 0
        self.comp_near = 0
        self.relayed_asg: set[int] = set()
        self.got_yard = False

    def on_round(self, rnd, inbox):
        out = []
        if rnd == 0:
            if self.member:
                self.wake = True
                return ((K_JOIN, self.root, self.parent),)
            return ()
        if rnd == 1:
            heard = []
            for s, m in inbox:
                if m[0] == K_JOIN:
                    heard.append((s, m[1], m[2]))
                    if self.member:
                        if m[1] == self.root:
                            self.peers[s] = m[1]
                            if m[2] == self.vid:
                                self.children.append(s)
                    else:
                        prev = self.near_roots.get(m[1])
                        if prev is None or s < prev:
                            self.near_roots[m[1]] = s
            if heard:
                flat = []
                for s, r, p in heard:
                    flat.extend((s, r, p))
                out.append((K_JAGG,) + tuple(flat))
            self.wake = True
            return out
        if rnd == 2:
            me = self.vid
            for _s, m in inbox:
                if m[0] == K_JAGG and self.member:
                    for i in range(1, len(m), 3):
                        w, r, p = m[i], m[i + 1], m[i + 2]
                        if r == self.root and w != me:
                            self.peers[w] = r
                            if p == me:
                                self.children.append(w)
            if self.member:
                self.children = sorted(set(self.children))
                self.wake = True
            else:
                for root in sorted(self.near_roots):
                    out.append((K_NEAR, self.near_roots[root], root))
            return out

        # rounds >= 3: convergecast and totals flood
        for s, m in inbox:
            k = m[0]
            if k == K_NEAR:
                if self.member and m[1] == self.vid and m[2] == self.root:
                    self.near_reg += 1
            elif k == K_UP:
                if m[1] == self.vid:  # I am the requested relay
                    out.append((K_UPF, s, m[2], m[3], m[4]))
                elif self.member and m[2] == self.root and s in self.child_done:
                    self.child_done[s] = (m[3], m[4])
            elif k == K_UPF:
                if self.member and m[2] == self.root and m[1] in self.child_done:
                    self.child_done[m[1]] = (m[3], m[4])
            elif k == K_ASG:
                root = m[1]
                if self.member and root == self.root and not self.got_yard:
                    self.got_yard = True
                    self.comp_size, self.comp_near = m[2], m[3]
                    out.append((K_ASG, root, m[2], m[3]))
                elif not self.member and root not in self.relayed_asg:
                    self.relayed_asg.add(root)
                    out.append((K_ASG, root, m[2], m[3]))

        if self.member and not self.sent_up and rnd >= 3:
            if rnd == 3:
                self.child_done = {c: None for c in self.children}
            if all(v is not None for v in self.child_done.values()):
                size = 1 + sum(v[0] for v in self.child_done.values())
                near = self.near_reg + sum(v[1] for v in self.child_done.values())
                self.sent_up = True
                self.size_acc, self.near_acc = size, near
                if self.root == self.vid:
                    self.got_yard = True
                    self.comp_size = size
                    self.comp_near = size + near  # inclusive near set
                    out.append((K_ASG, self.root, size, size + near))
                else:
                    out.append((K_UP, self.via, self.root, size, near))
            else:
                self.wake = True
        return out

    def state_name(self):
        pend = sum(1 for v in self.child_done.values() if v is None) if self.member else 0
        return f"comporg(member={self.member},pending={pend},up={self.sent_up})"


@dataclass
class ComponentsResult:
    components: list[BoundaryComponent]
    comp_of: np.ndarray            # ID -> component_id (0 for non-members)
    peers: dict[int, dict[int, int]]  # member -> {2-hop member -> root}
    results: list[RunResult]

    def by_id(self, component_id: int) -> BoundaryComponent:
        for c in self.components:
            if c.component_id == component_id:
                return c
        raise KeyError(component_id)


def form_components(g: UnitDiskGraph, classes: np.ndarray,
                    max_rounds: int = 100_000, trace=None) -> ComponentsResult:
    """Group BOUNDARY nodes into components under hop-distance <= 2 linkage.

    Per-component max-ID roots assign their own ID; sizes and inclusive
    near-set sizes are convergecast to the root and flooded back down.
    """
    member = classes == int(NodeClass.BOUNDARY)
    res1 = run_protocol(g, lambda v, nb: _CompFloodNode(v, nb, bool(member[v])),
                        max_rounds=max_rounds, trace=trace)
    f1 = res1.nodes

    res2 = run_protocol(
        g,
        lambda v, nb: _CompOrgNode(v, nb, bool(member[v]), f1[v].root,
                                   f1[v].parent, f1[v].via),
        max_rounds=max_rounds, trace=trace)

    comp_of = np.zeros(g.max_id + 1, dtype=np.int64)
    members_by_root: dict[int, list[int]] = {}
    totals: dict[int, tuple[int, int]] = {}
    peers: dict[int, dict[int, int]] = {}
    for v in g.id_list:
        nd = res2.nodes[v]
        if nd.member:
            comp_of[v] = nd.root
            members_by_root.setdefault(nd.root, []).append(v)
            peers[v] = nd.peers
            if not nd.got_yard:
                raise RuntimeError(f"component totals never reached member {v}")
            totals[nd.root] = (nd.comp_size, nd.comp_near)
    components = []
    for root in sorted(members_by_root):
        mem = tuple(members_by_root[root])
        size, near = totals[root]
        if size != len(mem):
            raise RuntimeError(f"component {root}: convergecast size {size} != {len(mem)}")
        components.append(BoundaryComponent(component_id=root, members=mem,
                                            size=size, near_set_size=near))
    return ComponentsResult(components=components, comp_of=comp_of, peers=peers,
                            results=[res1, res2])


def central_components(g: UnitDiskGraph, boundary_mask: np.ndarray,
                       min_size: int = 0) -> list[BoundaryComponent]:
    """Centralized twin of form_components (optionally size-filtered).

    Connectivity trick: keep only edges with at least one boundary endpoint;
    paths in that subgraph alternate boundary nodes with single middles,
    which is exactly hop-distance <= 2 linkage.
    """
    bidx = np.flatnonzero(boundary_mask[1:]) + 1
    if len(bidx) == 0:
        return []
    src = np.repeat(np.arange(1, g.max_id + 1), np.diff(g.indptr)[1:])
    dst = g.indices
    keep = boundary_mask[src] | boundary_mask[dst]
    H = sp.csr_matrix((np.ones(int(keep.sum()), dtype=np.int8),
                       (src[keep], dst[keep])), shape=(g.max_id + 1, g.max_id + 1))
    _, labels = connected_components(H, directed=False)
    out: dict[int, list[int]] = {}
    for v in bidx:
        out.setdefault(int(labels[v]), []).append(int(v))
    comps = []
    for mem in out.values():
        if len(mem) < min_size:
            continue
        root = max(mem)
        near = set(mem)
        for v in mem:
            near.update(g.neighbors(v).tolist())
        comps.append(BoundaryComponent(component_id=root, members=tuple(mem),
                                       size=len(mem), near_set_size=len(near)))
    comps.sort(key=lambda c: c.component_id)
    return comps


# --------------------------------------------------------------------------
# distance flood (best two components per node)
# --------------------------------------------------------------------------

def _own_frac_units(deg: int, mu_est: int) -> int:
    r = min(max(deg / mu_est, 0.5), 1.0)
    return int(round(geometry.invert_visibility(r) * FRAC_SCALE))


class _DistNode(NodeProto):
    __slots__ = ("comp", "mu_est", "slots")

    def __init__(self, vid, nbrs, comp, mu_est):
        super().__init__(vid, nbrs)
        self.comp = comp
        self.mu_est = mu_est
        # slots: up to two (dist, comp_id, anchor_q), kept sorted
        self.slots: list[tuple[int, int, int]] = [(0, comp, 0)] if comp else []

    def on_round(self, rnd, inbox):
        if rnd == 0:
            return ((K_DIST, self.comp, 0, 0),) if self.comp else ()
        cands: dict[int, tuple[int, int]] = {}
        for _s, m in inbox:
            if m[0] != K_DIST:
                continue
            c, nd = m[1], m[2] + 1
            q = m[3]
            prev = cands.get(c)
            if prev is None or nd < prev[0]:
                cands[c] = (nd, q)  # first carrier in sorted inbox wins ties
        if not cands:
            return ()
        merged = {c: (d, q) for d, c, q in self.slots}
        for c, (nd, q) in cands.items():
            if nd == 1:  # I am this wave's anchor: attach my own offset
                q = _own_frac_units(len(self.nbrs), self.mu_est)
            cur = merged.get(c)
            if cur is None or nd < cur[0]:
                merged[c] = (nd, q)
        best2 = sorted((d, c, q) for c, (d, q) in merged.items())[:2]
        old = {c: d for d, c, _q in self.slots}
        out = tuple((K_DIST, c, d, q) for d, c, q in best2
                    if c not in old or d < old[c])
        self.slots = best2
        return out

    def state_name(self):
        return f"dist(slots={self.slots})"


@dataclass
class DistanceField:
    hop: np.ndarray        # ID -> hop count to nearest component (inf if none)
    comp: np.ndarray       # ID -> nearest component id (ties: smaller id)
    hop2: np.ndarray       # runner-up distance
    comp2: np.ndarray      # runner-up component id (0 if none seen)
    anchor_q: np.ndarray   # fixed-point near-boundary offset on the primary path


def distance_flood(g: UnitDiskGraph, comp_of: np.ndarray, mu_est: int,
                   max_rounds: int = 100_000,
                   trace=None) -> tuple[DistanceField, RunResult]:
    """Every boundary node floods its component at distance 0; every node
    keeps the best two distinct components and re-broadcasts improvements."""
    res = run_protocol(
        g, lambda v, nb: _DistNode(v, nb, int(comp_of[v]), mu_est),
        max_rounds=max_rounds, trace=trace)
    m = g.max_id
    hop = np.full(m + 1, np.inf)
    comp = np.zeros(m + 1, dtype=np.int64)
    hop2 = np.full(m + 1, np.inf)
    comp2 = np.zeros(m + 1, dtype=np.int64)
    anchor = np.zeros(m + 1, dtype=np.int64)
    for v in g.id_list:
        slots = res.nodes[v].slots
        if slots:
            hop[v], comp[v], anchor[v] = slots[0]
        if len(slots) > 1:
            hop2[v], comp2[v] = slots[1][0], slots[1][1]
    return DistanceField(hop, comp, hop2, comp2, anchor), res


def central_distance_field(g: UnitDiskGraph, components: list[BoundaryComponent],
                           mu_est: int) -> DistanceField:
    """Centralized twin: per-component BFS, then per node the best two by
    (distance, component id), with anchors assembled over smallest-ID
    predecessors exactly as the synchronous flood does."""
    from .netgraph import hop_bfs

    m = g.max_id
    k = len(components)
    hop = np.full(m + 1, np.inf)
    comp = np.zeros(m + 1, dtype=np.int64)
    hop2 = np.full(m + 1, np.inf)
    comp2 = np.zeros(m + 1, dtype=np.int64)
    anchor = np.zeros(m + 1, dtype=np.int64)
    if k == 0:
        return DistanceField(hop, comp, hop2, comp2, anchor)

    dists = np.stack([hop_bfs(g, c.members) for c in components])  # (k, m+1)
    cids = np.array([c.component_id for c in components])
    order = np.lexsort((np.broadcast_to(cids[:, None], dists.shape), dists), axis=0)
    first = order[0]
    hop[1:] = dists[first[1:], np.arange(1, m + 1)]
    comp[1:] = np.where(np.isfinite(hop[1:]), cids[first[1:]], 0)
    if k > 1:
        second = order[1]
        hop2[1:] = dists[second[1:], np.arange(1, m + 1)]
        comp2[1:] = np.where(np.isfinite(hop2[1:]), cids[second[1:]], 0)

    # anchor propagation along each component's wave, top-2 holders only
    deg = g.degrees()
    rank_ok = np.zeros((k, m + 1), dtype=bool)
    rank_ok[first, np.arange(m + 1)] = True
    if k > 1:
        rank_ok[order[1], np.arange(m + 1)] = True
    anchors_c = np.zeros((k, m + 1), dtype=np.int64)
    for ci in range(k):
        d_c = dists[ci]
        holders = np.flatnonzero(rank_ok[ci] & np.isfinite(d_c))
        holders = holders[holders >= 1]
        by_level: dict[int, list[int]] = {}
        for v in holders:
            by_level.setdefault(int(d_c[v]), []).append(int(v))
        for level in sorted(by_level):
            if level == 0:
                continue
            for v in by_level[level]:
                if level == 1:
                    anchors_c[ci, v] = _own_frac_units(int(deg[v]), mu_est)
                    continue
                best = 0
                for u in g.neighbors(v):
                    if d_c[u] == level - 1 and rank_ok[ci, u]:
                        best = int(u)
                        break  # neighbors ascend, first hit is the smallest
                anchors_c[ci, v] = anchors_c[ci, best]
    for v in g.id_list:
        if np.isfinite(hop[v]):
            anchor[v] = anchors_c[first[v], v]
    return DistanceField(hop, comp, hop2, comp2, anchor)


def detect_voronoi(field: DistanceField, tolerance_hops: int = 2) -> np.ndarray:
    """Flag nodes whose best two component distances differ by at most
    tolerance_hops (the paper's 'roughly the same distance')."""
    with np.errstate(invalid="ignore"):
        close = (field.hop2 - field.hop) <= tolerance_hops
    return (field.comp2 != 0) & np.isfinite(field.hop2) & close


# --------------------------------------------------------------------------
# token loops
# --------------------------------------------------------------------------

class _TokenNode(NodeProto):
    __slots__ = ("comp", "is_root", "size", "min_steps", "excluded_at",
                 "replied", "fwd_seen", "holding", "seq", "path", "prev",
                 "replies", "decide_at", "my_pass_seq", "loop", "failed",
                 "nbrs_arr")

    def __init__(self, vid, nbrs, comp, size):
        super().__init__(vid, nbrs)
        self.comp = comp
        self.is_root = comp == vid
        self.size = size
        self.min_steps = max(5, -(-size // 10)) if comp else 0
        self.excluded_at = None
        self.replied: set[int] = set()
        self.fwd_seen: set[tuple] = set()
        self.holding = False
        self.seq = 0
        self.path: list[tuple[int, int]] = []
        self.prev: tuple[int, int] | None = None
        self.replies: dict[int, tuple[int, int, int, int]] = {}  # cand -> (score, isroot, excl, via)
        self.decide_at = -1
        self.my_pass_seq = -1
        self.loop: list[tuple[int, int]] | None = None
        self.failed = False
        self.nbrs_arr = np.asarray(nbrs)

    # -- helpers ------------------------------------------------------

    def _query(self, rnd):
        self.seq += 1
        self.my_pass_seq = self.seq
        self.replies = {}
        self.decide_at = rnd + 4
        self.wake = True
        return (K_TQ, self.comp, self.seq) + tuple(self.nbrs_arr.tolist())

    def _score(self, holder_nbrs) -> int:
        other = np.fromiter(holder_nbrs, dtype=np.int64)
        return int(np.intersect1d(self.nbrs_arr, other, assume_unique=True).size)

    def _consider_reply(self, comp, seq, holder, holder_nbrs, via):
        if self.comp != comp or holder == self.vid:
            return ()
        if (comp, seq) in self.replied:
            return ()
        if self.excluded_at == -1 and not self.is_root:
            return ()  # ex-holders never take the token again
        excl = int(self.excluded_at is not None and not self.is_root)
        self.replied.add((comp, seq))
        return ((K_TR, comp, seq, self._score(holder_nbrs), int(self.is_root),
                 excl, via),)

    def _choose(self, rnd):
        # fresh candidates first; already-excluded ones only when the march
        # has consumed everything ahead (keeps the walk from dead-ending at
        # strip pinches); the root closes the loop per the priority rule
        self.decide_at = -1
        steps = len(self.path) - 1
        root_reply = None
        fresh = None
        stale = None
        for cand, (score, isroot, excl, via) in self.replies.items():
            if isroot:
                root_reply = (cand, via)
            elif not excl and (fresh is None or (score, cand) < (fresh[0], fresh[1])):
                fresh = (score, cand, via)
            elif excl and (stale is None or (score, cand) < (stale[0], stale[1])):
                stale = (score, cand, via)
        succ = None
        if root_reply is not None and steps >= self.min_steps:
            succ, via = root_reply
        elif fresh is not None:
            succ, via = fresh[1], fresh[2]
        elif stale is not None:
            succ, via = stale[1], stale[2]
        elif root_reply is not None:
            succ, via = root_reply  # last resort: close early rather than fail
        if succ is None:
            return self._backtrack()
        self.holding = False
        flat = []
        for mem, v in self.path:
            flat.extend((mem, v))
        return ((K_TC, self.comp, self.my_pass_seq, succ, via) + tuple(flat),)

    def _backtrack(self):
        self.holding = False
        if self.prev is None:
            if self.size <= 1:
                self.loop = list(self.path)  # trivial single-node loop
            else:
                self.failed = True
            return ()
        self.excluded_at = -1  # the failed branch stays excluded
        p, via = self.prev
        return ((K_TB, self.comp, self.seq, p, via),)

    def _become_holder(self, rnd, path, prev):
        self.path = path
        self.prev = prev
        self.holding = True
        if self.is_root and len(path) > 1:
            self.loop = list(path)  # closed: query nothing further
            self.holding = False
            return ()
        self.excluded_at = -1  # the walk never revisits an ex-holder
        return (self._query(rnd),)

    # -- round handler --------------------------------------------------

    def on_round(self, rnd, inbox):
        out = []
        if rnd == 0 and self.is_root:
            self.holding = True
            self.path = [(self.vid, 0)]
            out.append(self._query(rnd))
            return out

        for s, m in inbox:
            k = m[0]
            if k == K_TQ:
                comp, seq = m[1], m[2]
                key = (comp, seq, K_TQ)
                if key not in self.fwd_seen:
                    self.fwd_seen.add(key)
                    out.append((K_TQF, comp, seq, s) + m[3:])
                out.extend(self._consider_reply(comp, seq, s, m[3:], 0))
            elif k == K_TQF:
                comp, seq, holder = m[1], m[2], m[3]
                out.extend(self._consider_reply(comp, seq, holder, m[4:], s))
            elif k == K_TR:
                comp, seq, score, isroot, excl, via = m[1], m[2], m[3], m[4], m[5], m[6]
                if via == self.vid:
                    out.append((K_TRF, s, comp, seq, score, isroot, excl))
                elif via == 0 and self.holding and seq == self.my_pass_seq and comp == self.comp:
                    self.replies.setdefault(s, (score, isroot, excl, 0))
            elif k == K_TRF:
                cand, comp, seq, score, isroot, excl = m[1], m[2], m[3], m[4], m[5], m[6]
                if self.holding and seq == self.my_pass_seq and comp == self.comp:
                    self.replies.setdefault(cand, (score, isroot, excl, s))
            elif k in (K_TC, K_TCF):
                if k == K_TC:
                    holder, comp, seq, succ, via = s, m[1], m[2], m[3], m[4]
                    flat = m[5:]
                    key = (comp, seq, K_TC)
                    if key not in self.fwd_seen:
                        self.fwd_seen.add(key)
                        out.append((K_TCF, holder, comp, seq, succ, via) + flat)
                else:
                    holder, comp, seq, succ, via = m[1], m[2], m[3], m[4], m[5]
                    flat = m[6:]
                if comp == self.comp and (comp, seq, "tc") not in self.fwd_seen:
                    self.fwd_seen.add((comp, seq, "tc"))
                    path = [(flat[i], flat[i + 1]) for i in range(0, len(flat), 2)]
                    if succ == self.vid:
                        out.append((K_TA, comp, seq, via, holder))
                        self.seq = max(self.seq, seq)  # pass numbering is global
                        out.extend(self._become_holder(
                            rnd, path + [(self.vid, via)], (holder, via)))
                    elif (comp, seq) in self.replied and not self.is_root:
                        self.excluded_at = seq
            elif k == K_TA:
                if m[3] != self.vid and m[2] == self.vid:
                    out.append((K_TAF, m[1], m[2], m[3]))
                # acknowledgment itself needs no further action
            elif k == K_TB:
                comp, seq, dest, via = m[1], m[2], m[3], m[4]
                if dest == self.vid and comp == self.comp:
                    out.extend(self._resume(rnd, seq))
                elif via == self.vid:
                    out.append((K_TBF, comp, seq, dest))
            elif k == K_TBF:
                if m[3] == self.vid and m[1] == self.comp:
                    out.extend(self._resume(rnd, m[2]))
            elif k in (K_TRB, K_TRBF):
                comp, seq, failed = m[1], m[2], m[3]
                if k == K_TRB:
                    key = (comp, seq, K_TRB)
                    if key not in self.fwd_seen:
                        self.fwd_seen.add(key)
                        out.append((K_TRBF, comp, seq, failed))
                if comp == self.comp and self.excluded_at == seq and self.vid != failed:
                    self.excluded_at = None
                    self.replied.discard((comp, seq))

        if self.holding and rnd == self.decide_at:
            out.extend(self._choose(rnd))
        elif self.holding and self.decide_at > rnd:
            self.wake = True
        return out

    def _resume(self, rnd, new_seq):
        # a failed successor bounced the token back: roll back my pass
        # (the failed node marked itself permanently excluded) and re-query
        self.holding = True
        self.seq = max(self.seq, new_seq)
        out = [(K_TRB, self.comp, self.my_pass_seq, 0)]
        out.append(self._query(rnd))
        return out

    def state_name(self):
        return f"token(holding={self.holding},comp={self.comp})"


def run_token_loops(g: UnitDiskGraph, comps: ComponentsResult,
                    max_rounds: int = 200_000,
                    trace=None) -> tuple[dict[int, TokenLoop], RunResult]:
    """Run the token-pass loop in every component concurrently.

    Components whose backtracking exhausts all candidates are omitted from
    the returned mapping (reported by the caller as LoopFailure).
    """
    sizes = {c.component_id: c.size for c in comps.components}
    res = run_protocol(
        g,
        lambda v, nb: _TokenNode(v, nb, int(comps.comp_of[v]),
                                 sizes.get(int(comps.comp_of[v]), 0)),
        max_rounds=max_rounds, trace=trace)
    loops: dict[int, TokenLoop] = {}
    for c in comps.components:
        root = c.component_id
        nd = res.nodes[root]
        if nd.failed or nd.loop is None:
            continue
        members = tuple(m for m, _ in nd.loop)
        walk = [members[0]]
        for mem, via in nd.loop[1:]:
            if via:
                walk.append(via)
            walk.append(mem)
        excluded = frozenset(
            v for v in c.members if res.nodes[v].excluded_at is not None)
        loops[root] = TokenLoop(component_id=root, members=members,
                                walk=tuple(walk), excluded=excluded)
    return loops, res


def token_loop(g: UnitDiskGraph, comps: ComponentsResult,
               component_id: int) -> TokenLoop:
    """Token loop for one component; raises LoopFailure if it cannot close."""
    loops, _ = run_token_loops(g, comps)
    if component_id not in loops:
        raise LoopFailure(f"component {component_id} exhausted its candidates")
    return loops[component_id]


# --------------------------------------------------------------------------
# alpha sweep
# --------------------------------------------------------------------------

def default_grid() -> tuple[float, ...]:
    return tuple(round(0.05 * i, 2) for i in range(1, 27))  # 0.05 .. 1.30


def alpha_sweep(g: UnitDiskGraph, mu_est: int, grid: tuple[float, ...] | None = None,
                min_component_size: int = 8,
                distributed: bool = False) -> AlphaSweep:
    """Classify at every alpha on the grid and count boundary components
    of at least min_component_size members.

    The plateau is the longest maximal run of a constant positive count
    that does not touch the end of the grid (the terminal run belongs to
    the everything-merges regime, not to a plateau between the two count
    peaks); ties go to the smaller alpha.  alpha_star is its midpoint.

    Counting uses the centralized component oracle by default -- it is
    exactly equal to the distributed formation, which `distributed=True`
    runs instead (slow; meant for equivalence tests).
    """
    if grid is None:
        grid = default_grid()
    grid = tuple(grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("alpha grid must be strictly increasing")
    deg = g.degrees()
    counts = []
    for a in grid:
        thr = threshold_units(a, mu_est)
        mask = np.zeros(g.max_id + 1, dtype=bool)
        mask[g.ids] = deg[g.ids] <= thr
        if distributed:
            classes, _ = classify(g, thr)
            comps = form_components(g, classes).components
            counts.append(sum(1 for c in comps if c.size >= min_component_size))
        else:
            counts.append(len(central_components(g, mask, min_size=min_component_size)))

    plateau = find_plateau(grid, counts)
    if plateau is None:
        raise NoPlateau(f"no interior constant run of length >= 2: {counts}")
    a_lo, a_hi, count = plateau
    return AlphaSweep(grid=grid, component_counts=tuple(counts),
                      plateau=plateau, alpha_star=(a_lo + a_hi) / 2)


def find_plateau(grid: tuple[float, ...], counts: list[int]
                 ) -> tuple[float, float, int] | None:
    """Longest maximal constant positive run not touching the grid end
    (a plateau sits between the two count peaks; the terminal run is the
    everything-merges regime).  Ties go to the smaller alpha; runs must
    span at least two grid points."""
    best = None  # (length, start)
    i = 0
    while i < len(counts):
        j = i
        while j + 1 < len(counts) and counts[j + 1] == counts[i]:
            j += 1
        run_len = j - i + 1
        if counts[i] > 0 and j < len(counts) - 1 and run_len >= 2:
            if best is None or run_len > best[0]:
                best = (run_len, i)
        i = j + 1
    if best is None:
        return None
    run_len, start = best
    return (grid[start], grid[start + run_len - 1], counts[start])
