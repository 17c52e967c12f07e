"""Bundled datasets: case-study topologies and constraint-demo fixtures.

Datasets are YAML topology files shipped as package data. The demo_*
fixtures are small networks paired with hand-built infeasible assignments,
each crafted so that exactly one constraint family catches the flaw;
builder functions parameterize their small-gain nodes for tests.
"""

from __future__ import annotations

from importlib import resources

from .flowcheck import FlowAssignment, load_assignment
from .model import LinkSpec, NodeSpec, Topology, _role_of, load_topology

DATASETS = ("five_node", "abilene", "abilene_mux2", "nsfnet", "surfnet")
FIXTURE_TOPOLOGIES = ("demo_c6", "demo_c7", "demo_c9")
FIXTURE_ASSIGNMENTS = ("demo_c6_bad", "demo_c7_bad", "demo_c9_bad")


class UnknownDatasetError(KeyError):
    pass


def dataset_text(name: str) -> str:
    if name not in DATASETS + FIXTURE_TOPOLOGIES + FIXTURE_ASSIGNMENTS:
        raise UnknownDatasetError(
            f"unknown dataset '{name}'; available: {', '.join(DATASETS + FIXTURE_TOPOLOGIES + FIXTURE_ASSIGNMENTS)}"
        )
    return (resources.files("qnetcap") / "data" / f"{name}.yaml").read_text()


def load_dataset(name: str) -> Topology:
    return load_topology(dataset_text(name))


def load_fixture_assignment(name: str) -> FlowAssignment:
    return load_assignment(dataset_text(name))


def _demo_topology(qmap: dict[str, float], pairs: list[tuple[str, str]]) -> Topology:
    names = ["s", *sorted(qmap), "t"]
    nodes = tuple(
        NodeSpec(n, qmap.get(n, 1.0), _role_of(n, "s", "t")) for n in names
    )
    links = tuple(LinkSpec(u, v, p=1.0) for u, v in pairs)
    return Topology(nodes, links, "s", "t")


def c6_demo(small_gain: float = 0.1) -> Topology:
    """Network where dropping C6 admits two non-disjoint unit flows."""
    return _demo_topology(
        {"1": small_gain, "2": 1.0, "3": 1.0, "4": small_gain},
        [("s", "1"), ("s", "2"), ("1", "3"), ("2", "3"), ("2", "4"), ("3", "t"), ("4", "t")],
    )


def c6_demo_assignment(small_gain: float = 0.1) -> FlowAssignment:
    e = small_gain
    return FlowAssignment(
        flows={
            ("s", "1"): 1.0,
            ("1", "3"): e,
            ("3", "2"): e,
            ("2", "4"): e,
            ("4", "t"): e * e,
            ("s", "2"): 1.0,
            ("2", "3"): 1.0,
            ("3", "t"): 1.0,
        },
        matchings={
            ("s", "1", "3"): 1,
            ("1", "3", "2"): 1,
            ("3", "2", "4"): 1,
            ("2", "4", "t"): 1,
            ("s", "2", "3"): 1,
            ("2", "3", "t"): 1,
        },
    )


def c7_demo(small_gain: float = 0.01) -> Topology:
    """Network where dropping C7 lets two half flows merge at node 3."""
    return _demo_topology(
        {"1": 0.5, "2": 0.5, "3": 1.0, "4": small_gain},
        [("s", "1"), ("s", "2"), ("1", "3"), ("2", "3"), ("3", "4"), ("3", "t"), ("4", "t")],
    )


def c7_demo_assignment() -> FlowAssignment:
    return FlowAssignment(
        flows={
            ("s", "1"): 1.0,
            ("1", "3"): 0.5,
            ("3", "t"): 1.0,
            ("s", "2"): 1.0,
            ("2", "3"): 0.5,
        },
        matchings={
            ("s", "1", "3"): 1,
            ("1", "3", "t"): 1,
            ("s", "2", "3"): 1,
            ("2", "3", "4"): 1,
        },
    )


def c9_demo() -> Topology:
    """Network where dropping C9 lets node 1 emit more than it receives."""
    return _demo_topology(
        {"1": 1.0, "2": 1.0, "3": 1.0},
        [("s", "1"), ("1", "2"), ("1", "3"), ("2", "t"), ("3", "t")],
    )


def c9_demo_assignment() -> FlowAssignment:
    return FlowAssignment(
        flows={
            ("s", "1"): 1.0,
            ("1", "3"): 1.0,
            ("3", "t"): 1.0,
            ("1", "2"): 1.0,
            ("2", "t"): 1.0,
        },
        matchings={
            ("s", "1", "3"): 1,
            ("1", "3", "t"): 1,
            ("1", "2", "t"): 1,
        },
    )
