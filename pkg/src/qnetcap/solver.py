"""Exact snapshot capacity: maximum-value edge-disjoint path packing.

The optimum of the constrained flow program on a unit-capacity snapshot is
attained by a set of pairwise edge-disjoint simple source-sink paths, each
delivering the product of its internal nodes' gain factors. The solver
searches that space directly with a depth-first include/exclude branch
scheme over the first live source edge, memoizing optima of pruned residual
networks so that repeated sub-networks (ubiquitous during state
enumeration) are solved once.
"""

from __future__ import annotations

import sys
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .flowcheck import FlowAssignment
from .snapshot import DirectedSnapshot

MEMO_CAP = 4_000_000  # entries per packer; cleared wholesale when exceeded


class PathPacker:
    """Maximum-value path packing on an indexed multigraph with node gains.

    Links are undirected with integer pair counts; a packing may route as
    many paths across a link as it holds pairs. Instances are cheap to keep
    around: the memo persists across calls, so sweeping many states of one
    topology amortizes the search.
    """

    def __init__(
        self,
        num_nodes: int,
        links: Sequence[tuple[int, int]],
        gains: Sequence[float],
        source: int,
        sink: int,
    ):
        self.num_nodes = num_nodes
        self.links = tuple((int(u), int(v)) for u, v in links)
        self.gains = tuple(float(g) for g in gains)
        self.source = source
        self.sink = sink
        adj: list[list[tuple[int, int]]] = [[] for _ in range(num_nodes)]
        for idx, (u, v) in enumerate(self.links):
            adj[u].append((idx, v))
            adj[v].append((idx, u))
        self.adj = tuple(tuple(sorted(entries)) for entries in adj)
        self.memo: dict[bytes, float] = {}
        self._rebuild_memo: dict[bytes, tuple[tuple[int, ...], ...]] = {}
        self.nodes_explored = 0

    def _strip(self, counts: list[int]) -> bool:
        """Drops links that cannot lie on any source-sink path; False if cut."""
        adj = self.adj
        seen = bytearray(self.num_nodes)
        seen[self.source] = 1
        stack = [self.source]
        while stack:
            u = stack.pop()
            for idx, w in adj[u]:
                if counts[idx] and not seen[w]:
                    seen[w] = 1
                    stack.append(w)
        if not seen[self.sink]:
            return False
        deg = [0] * self.num_nodes
        for idx, (u, v) in enumerate(self.links):
            if counts[idx]:
                if not seen[u]:
                    counts[idx] = 0
                    continue
                deg[u] += 1
                deg[v] += 1
        stack = [
            n
            for n in range(self.num_nodes)
            if deg[n] == 1 and n != self.source and n != self.sink
        ]
        while stack:
            n = stack.pop()
            if deg[n] != 1:
                continue
            for idx, w in adj[n]:
                if counts[idx]:
                    counts[idx] = 0
                    deg[n] -= 1
                    deg[w] -= 1
                    if deg[w] == 1 and w != self.source and w != self.sink:
                        stack.append(w)
                    break
        return True

    def _reserve_stack(self, counts: Sequence[int]) -> None:
        # nested value/extend frames consume >= 1 pair per level, plus slack
        need = 512 + 4 * (self.num_nodes + 2) * (sum(counts) + 2)
        if sys.getrecursionlimit() < need:
            sys.setrecursionlimit(need)

    def value(self, counts: Sequence[int]) -> float:
        """Optimal total delivered flow for the given per-link pair counts."""
        self._reserve_stack(counts)
        return self._value(list(counts))

    def _value(self, counts: list[int]) -> float:
        self.nodes_explored += 1
        if not self._strip(counts):
            return 0.0
        key = bytes(counts)
        memo = self.memo
        cached = memo.get(key)
        if cached is not None:
            return cached
        adj = self.adj
        gains = self.gains
        sink = self.sink
        for idx, other in adj[self.source]:
            if counts[idx]:
                e0, u0 = idx, other
                break
        rest = counts.copy()
        rest[e0] = 0
        best = self._value(rest)
        counts[e0] -= 1
        visited = bytearray(self.num_nodes)
        visited[self.source] = 1

        def extend(node: int, gain: float) -> None:
            nonlocal best
            for idx, w in adj[node]:
                if not counts[idx] or visited[w]:
                    continue
                counts[idx] -= 1
                if w == sink:
                    cand = gain + self._value(counts.copy())
                    if cand > best:
                        best = cand
                else:
                    visited[w] = 1
                    extend(w, gain * gains[w])
                    visited[w] = 0
                counts[idx] += 1

        if u0 == sink:
            cand = 1.0 + self._value(counts.copy())
            if cand > best:
                best = cand
        else:
            visited[u0] = 1
            extend(u0, gains[u0])
            visited[u0] = 0
        counts[e0] += 1
        if len(memo) >= MEMO_CAP:
            memo.clear()
        memo[key] = best
        return best

    def best_packing(self, counts: Sequence[int]) -> tuple[tuple[int, ...], ...]:
        """One optimal path set: fewest paths, then lexicographically least.

        Paths are node-index tuples from source to sink; the returned set is
        sorted. Deterministic for a given problem.
        """
        self._reserve_stack(counts)
        return self._rebuild(list(counts))

    def _rebuild(self, counts: list[int]) -> tuple[tuple[int, ...], ...]:
        if not self._strip(counts):
            return ()
        total = self._value(counts.copy())
        if total == 0.0:
            return ()
        key = bytes(counts)
        cached = self._rebuild_memo.get(key)
        if cached is not None:
            return cached
        adj = self.adj
        gains = self.gains
        sink = self.sink
        for idx, other in adj[self.source]:
            if counts[idx]:
                e0, u0 = idx, other
                break
        candidates: list[tuple[tuple[int, ...], ...]] = []
        rest = counts.copy()
        rest[e0] = 0
        if self._value(rest.copy()) == total:
            candidates.append(self._rebuild(rest))
        counts[e0] -= 1
        visited = bytearray(self.num_nodes)
        visited[self.source] = 1
        prefix: list[int] = [self.source]

        def extend(node: int, gain: float) -> None:
            prefix.append(node)
            for idx, w in adj[node]:
                if not counts[idx] or visited[w]:
                    continue
                counts[idx] -= 1
                if w == sink:
                    if gain + self._value(counts.copy()) == total:
                        path = tuple(prefix) + (sink,)
                        sub = self._rebuild(counts.copy())
                        candidates.append(tuple(sorted(sub + (path,))))
                else:
                    visited[w] = 1
                    extend(w, gain * gains[w])
                    visited[w] = 0
                counts[idx] += 1
            prefix.pop()

        if u0 == sink:
            if 1.0 + self._value(counts.copy()) == total:
                sub = self._rebuild(counts.copy())
                candidates.append(tuple(sorted(sub + ((self.source, sink),))))
        else:
            visited[u0] = 1
            extend(u0, gains[u0])
            visited[u0] = 0
        counts[e0] += 1
        best = min(candidates, key=lambda sol: (len(sol), sol))
        self._rebuild_memo[key] = best
        return best


@dataclass(frozen=True)
class PathFlow:
    """One source-sink path and the flow it delivers to the sink."""

    nodes: tuple[str, ...]
    delivered: float


@dataclass(frozen=True)
class SolveStats:
    nodes_explored: int
    wall_time_s: float


@dataclass(frozen=True)
class SnapshotSolution:
    objective: float
    paths: tuple[PathFlow, ...]
    assignment: FlowAssignment
    stats: SolveStats


def _indexed_problem(g: DirectedSnapshot):
    """Validates a directed snapshot and maps it onto packer inputs."""
    if g.source == g.sink:
        raise ValueError("source and sink coincide")
    for endpoint in (g.source, g.sink):
        if endpoint not in g.gains:
            raise ValueError(f"node '{endpoint}' missing from snapshot gains")
    for node, gain in g.gains.items():
        if not 0.0 < gain <= 1.0:
            raise ValueError(f"gain of node '{node}' out of (0, 1]: {gain}")
    node_ids = sorted(g.gains)
    index = {n: i for i, n in enumerate(node_ids)}
    links: list[tuple[str, str]] = []
    for u, v in sorted(g.arcs):
        if u == g.source or v == g.sink:
            if (v, u) not in g.arcs:
                links.append((u, v))
            else:
                raise ValueError(f"unexpected reverse arc for ({u}, {v})")
        elif (v, u) in g.arcs:
            if u < v:
                links.append((u, v))
        else:
            raise ValueError(
                f"internal adjacency ({u}, {v}) lacks its reverse arc; ill-formed snapshot"
            )
    links.sort(key=lambda uv: (min(uv), max(uv)))
    gains = [g.gains[n] for n in node_ids]
    packer = PathPacker(
        len(node_ids),
        [(index[u], index[v]) for u, v in links],
        gains,
        index[g.source],
        index[g.sink],
    )
    return packer, node_ids


def assignment_from_paths(
    g: DirectedSnapshot, paths: Sequence[Sequence[str]]
) -> FlowAssignment:
    """Explicit feasible variable assignment realizing the given path set."""
    flows: dict[tuple[str, str], float] = {}
    matchings: dict[tuple[str, str, str], int] = {}
    for path in paths:
        f = 1.0
        for i in range(len(path) - 1):
            a, b = path[i], path[i + 1]
            if i > 0:
                f *= g.gains[a]
                matchings[(path[i - 1], a, b)] = 1
            if (a, b) in flows:
                raise ValueError(f"paths are not edge-disjoint at arc ({a}, {b})")
            flows[(a, b)] = f
    return FlowAssignment(flows, matchings)


def solve_snapshot(g: DirectedSnapshot) -> SnapshotSolution:
    """Exact snapshot capacity with a certifying assignment and path set."""
    started = time.perf_counter()
    packer, node_ids = _indexed_problem(g)
    counts = [1] * len(packer.links)
    objective = packer.value(counts)
    packed = packer.best_packing(counts)
    paths = []
    for path in packed:
        named = tuple(node_ids[i] for i in path)
        delivered = 1.0
        for n in named[1:-1]:
            delivered *= g.gains[n]
        paths.append(PathFlow(named, delivered))
    assignment = assignment_from_paths(g, [p.nodes for p in paths])
    stats = SolveStats(packer.nodes_explored, time.perf_counter() - started)
    return SnapshotSolution(objective, tuple(paths), assignment, stats)


def max_disjoint_paths(g: DirectedSnapshot) -> int:
    """Maximum number of edge-disjoint source-sink paths (unit-cap max flow).

    Deliberately independent of the packing solver: breadth-first
    augmentation on the directed arcs, for use as a cross-check and bound.
    """
    residual: dict[tuple[str, str], int] = {}
    adj: dict[str, list[str]] = {}
    for u, v in sorted(g.arcs):
        residual[(u, v)] = residual.get((u, v), 0) + 1
        adj.setdefault(u, []).append(v)
        if (v, u) not in residual:
            residual[(v, u)] = 0
            adj.setdefault(v, []).append(u)
    source, sink = g.source, g.sink
    flow = 0
    while True:
        parent: dict[str, Optional[str]] = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in adj.get(u, ()):
                if v not in parent and residual[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return flow
        v = sink
        while parent[v] is not None:
            u = parent[v]
            residual[(u, v)] -= 1
            residual[(v, u)] += 1
            v = u
        flow += 1
