"""Shared fixtures: bundled datasets, hand-built networks, random instances."""

from __future__ import annotations

import numpy as np
import pytest

ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def record_acceptance(criterion: str, detail: str) -> None:
    """Registers a passed acceptance criterion for the terminal summary."""
    ACCEPTANCE_RESULTS.append((criterion, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"PASS  {criterion}: {detail}")

from qnetcap import datasets
from qnetcap.model import LinkSpec, NodeSpec, Topology, _role_of
from qnetcap.snapshot import SnapshotState, to_directed, to_unit_capacity
from qnetcap.solver import solve_snapshot


@pytest.fixture(scope="session")
def five_node():
    return datasets.load_dataset("five_node")


@pytest.fixture(scope="session")
def abilene():
    return datasets.load_dataset("abilene")


@pytest.fixture(scope="session")
def abilene_mux2():
    return datasets.load_dataset("abilene_mux2")


@pytest.fixture(scope="session")
def nsfnet():
    return datasets.load_dataset("nsfnet")


@pytest.fixture(scope="session")
def surfnet():
    return datasets.load_dataset("surfnet")


def make_topology(qmap, pairs, source="s", sink="t", p=1.0, caps=None):
    """Small test network; qmap holds internal gains, links default to p=1."""
    names = [source, *sorted(qmap), sink]
    nodes = tuple(NodeSpec(n, qmap.get(n, 1.0), _role_of(n, source, sink)) for n in names)
    caps = caps or {}
    links = tuple(
        LinkSpec(u, v, p=p if isinstance(p, float) else p[(u, v)], c=caps.get((u, v), 1))
        for u, v in pairs
    )
    return Topology(nodes, links, source, sink)


def two_route_network(q1, q2, q3, q4):
    """Two parallel chains s-a1-a2-t / s-a3-a4-t plus the a3-a2 chord.

    Full-state capacity has the closed form max(q1*q2 + q3*q4, q2*q3).
    """
    return make_topology(
        {"a1": q1, "a2": q2, "a3": q3, "a4": q4},
        [("s", "a1"), ("a1", "a2"), ("a2", "t"),
         ("s", "a3"), ("a3", "a4"), ("a4", "t"), ("a3", "a2")],
    )


def solve_state(t, state=None):
    """Full pipeline on one state: transform, direct, solve."""
    if state is None:
        state = SnapshotState.full(t)
    unit_t, unit_state = to_unit_capacity(t, state)
    return solve_snapshot(to_directed(unit_t, unit_state))


def directed_state(t, state=None):
    if state is None:
        state = SnapshotState.full(t)
    unit_t, unit_state = to_unit_capacity(t, state)
    return to_directed(unit_t, unit_state)


def random_instance(rng: np.random.Generator, max_internal=4, max_edges=8, mux=False):
    """Random small topology plus a random realized state."""
    while True:
        n_internal = int(rng.integers(0, max_internal + 1))
        names = ["s", "t"] + [f"n{i}" for i in range(n_internal)]
        pairs = [(u, v) for i, u in enumerate(names) for v in names[i + 1 :]]
        n_edges = int(rng.integers(1, max_edges + 1))
        if n_edges > len(pairs):
            n_edges = len(pairs)
        chosen = rng.choice(len(pairs), size=n_edges, replace=False)
        links = []
        for idx in sorted(chosen):
            u, v = pairs[idx]
            c = int(rng.integers(1, 3)) if mux else 1
            links.append(LinkSpec(u, v, p=0.5, c=c))
        qmap = {f"n{i}": float(1.0 - rng.random() * 0.95) for i in range(n_internal)}
        nodes = tuple(
            NodeSpec(n, qmap.get(n, 1.0), _role_of(n, "s", "t")) for n in names
        )
        t = Topology(nodes, tuple(links), "s", "t")
        vec = tuple(int(rng.integers(0, c + 1)) for c in t.capacities)
        if sum(vec) == 0:
            continue
        return t, SnapshotState.from_vector(t, vec)
