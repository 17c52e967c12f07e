"""Network states: enumeration, probabilities, and graph transforms.

A state records how many entangled pairs each link actually generated in a
time slot. States live in the mixed-radix product space prod_l {0..c_l};
per-link pair counts are binomial (each of the c_l pair slots succeeds
independently with probability p_l).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterator, Mapping, Optional, Sequence

from .model import LinkSpec, NodeSpec, Topology, _role_of


@dataclass(frozen=True)
class SnapshotState:
    """Realized pair counts per link, aligned to the topology's link order."""

    link_ids: tuple[str, ...]
    vector: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.link_ids) != len(self.vector):
            raise ValueError("state vector length does not match link count")

    @cached_property
    def counts(self) -> Mapping[str, int]:
        """Map link id -> count; links with count zero are omitted."""
        return {lid: k for lid, k in zip(self.link_ids, self.vector) if k}

    @staticmethod
    def from_counts(t: Topology, counts: Mapping[str, int]) -> "SnapshotState":
        vec = [0] * len(t.links)
        for lid, k in counts.items():
            if lid not in t.link_index:
                raise KeyError(f"unknown link '{lid}'")
            vec[t.link_index[lid]] = int(k)
        return SnapshotState(t.link_ids, tuple(vec))

    @staticmethod
    def from_vector(t: Topology, vector: Sequence[int]) -> "SnapshotState":
        return SnapshotState(t.link_ids, tuple(int(k) for k in vector))

    @staticmethod
    def full(t: Topology) -> "SnapshotState":
        return SnapshotState(t.link_ids, t.capacities)

    @staticmethod
    def empty(t: Topology) -> "SnapshotState":
        return SnapshotState(t.link_ids, (0,) * len(t.links))


@dataclass(frozen=True)
class DirectedSnapshot:
    """Unit-capacity directed graph of one realized state.

    Arcs between internal nodes come in both directions; the source has no
    incoming arcs and the sink no outgoing ones. Gains are the per-node swap
    success probabilities (1 for source, sink and splitter nodes).
    """

    arcs: frozenset[tuple[str, str]]
    gains: Mapping[str, float]
    source: str
    sink: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "arcs", frozenset(self.arcs))
        if self.source == self.sink:
            raise ValueError("source and sink coincide")
        for u, v in self.arcs:
            if u == v:
                raise ValueError(f"self-arc ({u}, {v}) forbidden")
            if v == self.source:
                raise ValueError(f"arc ({u}, {v}) enters the source")
            if u == self.sink:
                raise ValueError(f"arc ({u}, {v}) leaves the sink")
            if u not in self.gains or v not in self.gains:
                raise ValueError(f"arc ({u}, {v}) references node without a gain")

    @cached_property
    def out_arcs(self) -> Mapping[str, tuple[str, ...]]:
        adj: dict[str, list[str]] = {}
        for u, v in sorted(self.arcs):
            adj.setdefault(u, []).append(v)
        return {u: tuple(vs) for u, vs in adj.items()}

    @cached_property
    def in_arcs(self) -> Mapping[str, tuple[str, ...]]:
        adj: dict[str, list[str]] = {}
        for u, v in sorted(self.arcs):
            adj.setdefault(v, []).append(u)
        return {v: tuple(us) for v, us in adj.items()}


def num_states(t: Topology) -> int:
    n = 1
    for c in t.capacities:
        n *= c + 1
    return n


def state_from_index(t: Topology, index: int) -> SnapshotState:
    """Decodes a mixed-radix state index (last link varies fastest)."""
    if not 0 <= index < num_states(t):
        raise ValueError(f"state index {index} out of range")
    vec = [0] * len(t.links)
    for l in range(len(t.links) - 1, -1, -1):
        base = t.capacities[l] + 1
        vec[l] = index % base
        index //= base
    return SnapshotState(t.link_ids, tuple(vec))


def state_index(t: Topology, s: SnapshotState) -> int:
    idx = 0
    for k, c in zip(s.vector, t.capacities):
        idx = idx * (c + 1) + k
    return idx


def link_pmfs(t: Topology) -> list[tuple[float, ...]]:
    """Per-link binomial pmf tables, pmf[l][k] for k in 0..c_l."""
    tables = []
    for p, c in zip(t.probabilities, t.capacities):
        tables.append(
            tuple(math.comb(c, k) * p**k * (1.0 - p) ** (c - k) for k in range(c + 1))
        )
    return tables


def state_probability(t: Topology, s: SnapshotState) -> float:
    """Probability of observing exactly this state in one time slot."""
    prob = 1.0
    for k, p, c in zip(s.vector, t.probabilities, t.capacities):
        if not 0 <= k <= c:
            raise ValueError(f"count {k} exceeds link capacity {c}")
        prob *= math.comb(c, k) * p**k * (1.0 - p) ** (c - k)
    return prob


def enumerate_states(
    t: Topology, start: int = 0, stop: Optional[int] = None
) -> Iterator[tuple[SnapshotState, float]]:
    """Streams every state in [start, stop) of the mixed-radix index order.

    The full stream visits each of prod_l (c_l + 1) states exactly once and
    its probabilities sum to 1. Index ranges may be split across workers;
    each range is re-derived independently from the indices.
    """
    total = num_states(t)
    if stop is None:
        stop = total
    if not 0 <= start <= stop <= total:
        raise ValueError(f"invalid state range [{start}, {stop})")
    if start == stop:
        return
    pmfs = link_pmfs(t)
    link_ids = t.link_ids
    bases = [c + 1 for c in t.capacities]
    n_links = len(bases)
    vec = list(state_from_index(t, start).vector)
    for _ in range(start, stop):
        prob = 1.0
        for l in range(n_links):
            prob *= pmfs[l][vec[l]]
        yield SnapshotState(link_ids, tuple(vec)), prob
        # mixed-radix odometer increment, last link fastest
        for l in range(n_links - 1, -1, -1):
            vec[l] += 1
            if vec[l] < bases[l]:
                break
            vec[l] = 0


def splitter_id(u: str, v: str, k: int) -> str:
    a, b = (u, v) if u <= v else (v, u)
    return f"{a}__{b}__{k}"


def to_unit_capacity(t: Topology, s: SnapshotState) -> tuple[Topology, SnapshotState]:
    """Rewrites a multiplexed state as an equivalent unit-capacity one.

    Each realized pair of a link holding two or more pairs becomes its own
    two-hop route through a fresh unit-gain splitter node; links holding at
    most one pair pass through unchanged. The returned topology is a
    state-level construction: its link probabilities are inherited and not
    meaningful for re-sampling.
    """
    nodes = list(t.nodes)
    links: list[LinkSpec] = []
    vec_entries: list[tuple[str, int]] = []
    for link, count in zip(t.links, s.vector):
        if not 0 <= count <= link.c:
            raise ValueError(f"count {count} exceeds capacity of link {link.id}")
        if count <= 1:
            links.append(LinkSpec(link.u, link.v, p=link.resolved_p(t.constants), c=1))
            vec_entries.append((links[-1].id, count))
            continue
        for k in range(1, count + 1):
            mid = splitter_id(link.u, link.v, k)
            nodes.append(NodeSpec(mid, 1.0, _role_of(mid, t.source, t.sink)))
            for a, b in ((link.u, mid), (mid, link.v)):
                links.append(LinkSpec(a, b, p=link.resolved_p(t.constants), c=1))
                vec_entries.append((links[-1].id, 1))
    t2 = Topology(tuple(nodes), tuple(links), t.source, t.sink, t.constants)
    return t2, SnapshotState.from_counts(t2, {lid: k for lid, k in vec_entries if k})


def to_directed(t: Topology, s: SnapshotState) -> DirectedSnapshot:
    """Directed unit-capacity graph of a unit-count state.

    Realized internal-internal links produce both arc directions; links at
    the source only leave it, links at the sink only enter it.
    """
    arcs: set[tuple[str, str]] = set()
    for link, count in zip(t.links, s.vector):
        if count == 0:
            continue
        if count > 1:
            raise ValueError(
                f"link {link.id} has count {count}; apply to_unit_capacity first"
            )
        u, v = link.u, link.v
        if u == t.sink or v == t.source:
            u, v = v, u
        if u == t.source or v == t.sink:
            arcs.add((u, v))
        else:
            arcs.add((u, v))
            arcs.add((v, u))
    gains = {n.id: t.q_of(n.id) for n in t.nodes}
    return DirectedSnapshot(frozenset(arcs), gains, t.source, t.sink)


STATE_CSV_COLUMNS = ("state_index", "state_counts", "probability", "capacity")


def write_state_rows(
    fh: IO[str], rows: Iterator[tuple[int, Sequence[int], float, float]]
) -> None:
    """Per-state CSV export; counts are semicolon-joined in link order."""
    writer = csv.writer(fh)
    writer.writerow(STATE_CSV_COLUMNS)
    for index, vector, probability, capacity in rows:
        writer.writerow(
            [index, ";".join(str(k) for k in vector), repr(probability), repr(capacity)]
        )
