"""Distributed bootstrap: leader election, spanning tree, and tree-based
aggregation/flooding.

The tree is built by a max-ID extrema flood.  Termination is detected
in-protocol (the paper's point of using a tree): a node sends its subtree
report up once every neighbor has announced the same root and all of its
children have reported; the root then floods DONE down, so every node
learns both n and the completion round.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .netgraph import UnitDiskGraph
from .simkernel import NodeProto, RunResult, run_protocol

K_STATE = 1   # (root, parent)      flood announcement, doubles as join notice
K_REPORT = 2  # (root, size)        convergecast: subtree size under `root`
K_DONE = 3    # (root, n)           root's completion flood down the tree
K_AGG = 4     # (*value)            aggregation convergecast
K_VAL = 5     # (*value)            network flood of a value


class AggOp(enum.Enum):
    MAX = "max"
    SUM = "sum"
    HISTOGRAM_MERGE = "histogram_merge"
    COMPONENT_COUNT = "component_count"


@dataclass(frozen=True)
class TreeState:
    root_id: int
    parent: int | None
    children: tuple[int, ...]
    subtree_size: int
    n_total: int
    completion_round: int


class _TreeNode(NodeProto):
    __slots__ = ("root", "parent", "nbr_state", "child_reports", "reported_root",
                 "children", "subtree_size", "done", "n_total", "completion_round")

    def __init__(self, vid, nbrs):
        super().__init__(vid, nbrs)
        self.root = vid
        self.parent = 0
        self.nbr_state: dict[int, tuple[int, int]] = {}
        self.child_reports: dict[int, tuple[int, int]] = {}
        self.reported_root = 0
        self.children: tuple[int, ...] = ()
        self.subtree_size = 1
        self.done = False
        self.n_total = 0
        self.completion_round = -1

    def on_round(self, rnd, inbox):
        out = []
        best = self.root
        best_sender = 0
        for s, m in inbox:
            k = m[0]
            if k == K_STATE:
                self.nbr_state[s] = (m[1], m[2])
                if m[1] > best:
                    best = m[1]
                    best_sender = s  # inbox sorted: first carrier = smallest sender
            elif k == K_REPORT:
                self.child_reports[s] = (m[1], m[2])
            elif k == K_DONE and not self.done and m[1] == self.root:
                self.done = True
                self.completion_round = rnd
                self.n_total = m[2]
                if self.children:
                    out.append((K_DONE, m[1], m[2]))

        if best > self.root:
            self.root = best
            self.parent = best_sender
            if self.nbrs.size:
                out.append((K_STATE, self.root, self.parent))
        elif rnd == 0 and self.nbrs.size:
            out.append((K_STATE, self.root, self.parent))

        if not self.done and self.reported_root != self.root:
            out.extend(self._try_report(rnd))
        return out

    def _try_report(self, rnd):
        # ready once every neighbor settled on my root and my children (the
        # neighbors claiming me as parent) all reported under that root
        ns = self.nbr_state
        if len(ns) != self.nbrs.size:
            return ()
        root = self.root
        size = 1
        children = []
        for u, (r, p) in ns.items():
            if r != root:
                return ()
            if p == self.vid:
                rep = self.child_reports.get(u)
                if rep is None or rep[0] != root:
                    return ()
                children.append(u)
                size += rep[1]
        self.children = tuple(sorted(children))
        self.subtree_size = size
        self.reported_root = root
        if root == self.vid:
            self.done = True
            self.completion_round = rnd
            self.n_total = size
            self.parent = 0
            if self.children:
                return ((K_DONE, root, size),)
            return ()
        return ((K_REPORT, root, size),)

    def state_name(self):
        return f"tree(root={self.root},reported={self.reported_root == self.root})"


@dataclass
class TreeBuild:
    states: list  # TreeState per ID (index 0 None)
    result: RunResult

    @property
    def root_id(self) -> int:
        for st in self.states:
            if st is not None and st.parent is None:
                return st.root_id
        raise RuntimeError("tree has no root")


def build_tree(g: UnitDiskGraph, max_rounds: int = 100_000,
               trace=None) -> TreeBuild:
    """Elect the max-ID node and build its spanning tree over the whole graph.

    Disconnected input surfaces as a multi-root failure after quiescence.
    """
    res = run_protocol(g, _TreeNode, max_rounds=max_rounds, trace=trace)
    states: list = [None] * (g.max_id + 1)
    roots = 0
    for v in g.id_list:
        nd = res.nodes[v]
        if not nd.done:
            raise RuntimeError(f"tree build ended without completion at node {v}")
        if nd.parent == 0:
            roots += 1
            if nd.n_total != g.n:
                raise RuntimeError(
                    f"root {v} spans {nd.n_total} of {g.n} nodes: graph disconnected")
        states[v] = TreeState(
            root_id=nd.root,
            parent=None if nd.parent == 0 else nd.parent,
            children=nd.children,
            subtree_size=nd.subtree_size,
            n_total=nd.n_total,
            completion_round=nd.completion_round,
        )
    return TreeBuild(states=states, result=res)


def _combine(op: AggOp, a: tuple, b: tuple) -> tuple:
    if op is AggOp.MAX:
        return (max(a[0], b[0]),)
    if op in (AggOp.SUM, AggOp.COMPONENT_COUNT):
        return (a[0] + b[0],)
    return tuple(x + y for x, y in zip(a, b))  # histogram merge


class _AggNode(NodeProto):
    __slots__ = ("parent", "pending", "acc", "op", "sent")

    def __init__(self, vid, nbrs, tree, op, values):
        super().__init__(vid, nbrs)
        st = tree[vid]
        self.parent = st.parent
        self.pending = set(st.children)
        self.op = op
        v = values[vid]
        self.acc = tuple(int(x) for x in (v if isinstance(v, (tuple, list, np.ndarray)) else (v,)))
        self.sent = False

    def on_round(self, rnd, inbox):
        for s, m in inbox:
            if m[0] == K_AGG and s in self.pending:
                self.pending.discard(s)
                self.acc = _combine(self.op, self.acc, m[1:])
        if not self.sent and not self.pending and self.parent is not None:
            self.sent = True
            return ((K_AGG,) + self.acc,)
        return ()

    def state_name(self):
        return f"agg(pending={len(self.pending)})"


def aggregate(g: UnitDiskGraph, tree: Sequence, op: AggOp,
              values: Mapping[int, object] | Sequence,
              max_rounds: int = 100_000, trace=None) -> tuple[tuple, RunResult]:
    """Convergecast `values` up the tree; returns the root's combined value.

    MAX/SUM/COMPONENT_COUNT messages cost 2 id-units; histogram merges cost
    1 + bin_count.
    """
    res = run_protocol(g, lambda v, nb: _AggNode(v, nb, tree, op, values),
                       max_rounds=max_rounds, trace=trace)
    root_val = None
    for v in g.id_list:
        if res.nodes[v].parent is None:
            root_val = res.nodes[v].acc
        if res.nodes[v].pending:
            raise RuntimeError("aggregation did not complete")
    if root_val is None:
        raise RuntimeError("aggregation did not complete")
    return root_val, res


class _FloodNode(NodeProto):
    __slots__ = ("value", "got")

    def __init__(self, vid, nbrs, value):
        super().__init__(vid, nbrs)
        self.value = value  # root starts with it, everyone else None
        self.got = value is not None

    def on_round(self, rnd, inbox):
        if rnd == 0 and self.got:
            return ((K_VAL,) + self.value,)
        if not self.got:
            for s, m in inbox:
                if m[0] == K_VAL:
                    self.got = True
                    self.value = m[1:]
                    return ((K_VAL,) + self.value,)
        return ()

    def state_name(self):
        return f"flood(got={self.got})"


def broadcast_down(g: UnitDiskGraph, tree: Sequence, value: tuple,
                   max_rounds: int = 100_000, trace=None) -> tuple[list, RunResult]:
    """Flood a value from the tree root; every node broadcasts exactly once."""
    value = tuple(int(x) for x in value)
    root = None
    for v in g.id_list:
        if tree[v].parent is None:
            root = v
    res = run_protocol(
        g, lambda v, nb: _FloodNode(v, nb, value if v == root else None),
        max_rounds=max_rounds, trace=trace)
    received = [None] * (g.max_id + 1)
    for v in g.id_list:
        received[v] = res.nodes[v].value
    return received, res


def check_tree(g: UnitDiskGraph, build: TreeBuild) -> None:
    """Oracle-side sanity: spanning, acyclic, consistent links, and the
    in-protocol completion round equals the executor's quiescence round."""
    states = build.states
    roots = [v for v in g.id_list if states[v].parent is None]
    if len(roots) != 1:
        raise AssertionError(f"expected exactly one root, got {roots[:5]}")
    root = roots[0]
    if root != max(g.id_list):
        raise AssertionError("root is not the global max ID")
    seen = 0
    stack = [root]
    visited = set()
    while stack:
        v = stack.pop()
        if v in visited:
            raise AssertionError("cycle in tree")
        visited.add(v)
        seen += 1
        for c in states[v].children:
            if states[c].parent != v:
                raise AssertionError("parent/child links inconsistent")
            if c not in g.neighbors(v):
                raise AssertionError("tree edge is not a graph edge")
            stack.append(c)
    if seen != g.n:
        raise AssertionError(f"tree spans {seen} of {g.n} nodes")
    if states[root].subtree_size != g.n or states[root].n_total != g.n:
        raise AssertionError("root did not learn n")
    last_completion = max(states[v].completion_round for v in g.id_list)
    if last_completion != build.result.rounds_used - 1:
        raise AssertionError(
            f"protocol completion round {last_completion} != executor "
            f"quiescence round {build.result.rounds_used - 1}"
        )
