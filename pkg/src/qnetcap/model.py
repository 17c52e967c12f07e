"""Physical network model: nodes, links, loss constants, topology files.

A topology is an undirected simple graph of repeater nodes. Each internal
node carries a swap success probability q, each link a pair-generation
probability p (given directly or derived from fiber length) and a multiplex
capacity c (number of entangled pairs the link may hold per time slot).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional

import yaml

ROLE_SOURCE = "source"
ROLE_SINK = "sink"
ROLE_INTERNAL = "internal"


class TopologyError(ValueError):
    """Raised when a topology document or object violates the data model."""

    def __init__(self, diagnostics: Iterable[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class LossConstants:
    """Fiber loss model parameters: p = c_eff * 10^(-0.1 * beta * L)."""

    c_eff: float = 0.9
    beta: float = 0.2  # dB/km

    def __post_init__(self) -> None:
        if not 0.0 < self.c_eff <= 1.0:
            raise TopologyError([f"constants.c_eff: must be in (0, 1], got {self.c_eff}"])
        if self.beta < 0.0:
            raise TopologyError([f"constants.beta: must be >= 0, got {self.beta}"])


def derive_link_probability(length_km: float, constants: LossConstants = LossConstants()) -> float:
    """Pair-generation success probability of a fiber link of given length.

    Combines fiber transmissivity 10^(-0.1 * beta * L) with the loss
    pre-factor c_eff; the result is clamped to [0, 1].
    """
    if length_km < 0.0:
        raise TopologyError([f"length_km: must be >= 0, got {length_km}"])
    p = constants.c_eff * 10.0 ** (-0.1 * constants.beta * length_km)
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class NodeSpec:
    """A network node; q is the swap (BSM) success probability."""

    id: str
    q: float = 1.0
    role: str = ROLE_INTERNAL


@dataclass(frozen=True)
class LinkSpec:
    """An undirected physical link {u, v}.

    Exactly one of length_km / p is given at construction; when length_km
    is given, p is derived from the topology's loss constants at load time.
    c is the multiplex capacity (c = 1: at most one pair per slot).
    """

    u: str
    v: str
    length_km: Optional[float] = None
    p: Optional[float] = None
    c: int = 1

    @property
    def key(self) -> tuple[str, str]:
        """Canonical unordered-pair key (lexicographically sorted)."""
        return (self.u, self.v) if self.u <= self.v else (self.v, self.u)

    @property
    def id(self) -> str:
        """Link id in declared orientation, e.g. "s-1"."""
        return f"{self.u}-{self.v}"

    def resolved_p(self, constants: LossConstants) -> float:
        if self.p is not None:
            return self.p
        if self.length_km is not None:
            return derive_link_probability(self.length_km, constants)
        raise TopologyError([f"links[{self.id}]: neither p nor length_km given"])


@dataclass(frozen=True)
class Topology:
    """Validated, immutable network topology with designated source/sink.

    Links are iterated in lexicographic order of their unordered node-pair
    key; that order fixes state-vector layout and enumeration order
    everywhere downstream.
    """

    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    source: str
    sink: str
    constants: LossConstants = field(default_factory=LossConstants)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(
            self, "links", tuple(sorted(self.links, key=lambda l: l.key))
        )
        diags = validate_topology(self, _skip_sort=True)
        if diags:
            raise TopologyError(diags)

    @cached_property
    def node_by_id(self) -> Mapping[str, NodeSpec]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def link_ids(self) -> tuple[str, ...]:
        return tuple(l.id for l in self.links)

    @cached_property
    def link_index(self) -> Mapping[str, int]:
        """Maps both "u-v" and "v-u" spellings to the link's position."""
        idx: dict[str, int] = {}
        for i, l in enumerate(self.links):
            idx[f"{l.u}-{l.v}"] = i
            idx[f"{l.v}-{l.u}"] = i
        return idx

    @cached_property
    def probabilities(self) -> tuple[float, ...]:
        """Resolved generation probability per link, in link order."""
        return tuple(l.resolved_p(self.constants) for l in self.links)

    @cached_property
    def capacities(self) -> tuple[int, ...]:
        return tuple(l.c for l in self.links)

    def q_of(self, node_id: str) -> float:
        """Gain factor used in flow computations; source/sink are fixed to 1."""
        if node_id in (self.source, self.sink):
            return 1.0
        return self.node_by_id[node_id].q

    def with_endpoints(self, source: str, sink: str) -> "Topology":
        """Same physical network with a different source/sink designation."""
        nodes = tuple(
            NodeSpec(n.id, n.q, _role_of(n.id, source, sink)) for n in self.nodes
        )
        return Topology(nodes, self.links, source, sink, self.constants)

    def digest(self) -> str:
        """Hex digest of the canonical serialized form."""
        canon = json.dumps(serialize_topology(self), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def _role_of(node_id: str, source: str, sink: str) -> str:
    if node_id == source:
        return ROLE_SOURCE
    if node_id == sink:
        return ROLE_SINK
    return ROLE_INTERNAL


def validate_topology(t: Topology, _skip_sort: bool = False) -> list[str]:
    """All data-model invariant violations, one diagnostic string each."""
    diags: list[str] = []
    ids = [n.id for n in t.nodes]
    id_set = set(ids)
    if len(ids) != len(id_set):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        diags.append(f"nodes: duplicate ids {dupes}")
    if t.source == t.sink:
        diags.append(f"endpoints: source == sink ('{t.source}')")
    for name, ep in (("source", t.source), ("sink", t.sink)):
        if ep not in id_set:
            diags.append(f"endpoints.{name}: node '{ep}' not in nodes")
    for i, n in enumerate(t.nodes):
        expected_role = _role_of(n.id, t.source, t.sink)
        if n.role != expected_role:
            diags.append(f"nodes[{i}].role: '{n.role}' but endpoints imply '{expected_role}'")
        if n.id in (t.source, t.sink):
            if n.q != 1.0:
                diags.append(f"nodes[{i}].q: q must be absent or 1 for {expected_role} '{n.id}'")
        elif not 0.0 < n.q <= 1.0:
            diags.append(f"nodes[{i}].q: q out of (0,1] for internal node '{n.id}' (got {n.q})")
    seen_pairs: set[tuple[str, str]] = set()
    for i, l in enumerate(t.links):
        loc = f"links[{i}] ({l.id})"
        if l.u == l.v:
            diags.append(f"{loc}: self-loop forbidden")
        for end in (l.u, l.v):
            if end not in id_set:
                diags.append(f"{loc}: endpoint '{end}' not in nodes")
        if l.key in seen_pairs:
            diags.append(f"{loc}: duplicate link for pair {l.key}")
        seen_pairs.add(l.key)
        if (l.length_km is None) == (l.p is None):
            diags.append(f"{loc}: exactly one of length_km / p must be given")
        if l.length_km is not None and l.length_km < 0:
            diags.append(f"{loc}.length_km: must be >= 0, got {l.length_km}")
        if l.p is not None and not 0.0 <= l.p <= 1.0:
            diags.append(f"{loc}.p: must be in [0, 1], got {l.p}")
        if l.c < 1 or l.c != int(l.c):
            diags.append(f"{loc}.c: must be an integer >= 1, got {l.c}")
    return diags


def _require(cond: bool, diags: list[str], msg: str) -> bool:
    if not cond:
        diags.append(msg)
    return cond


def parse_topology(document: Mapping) -> Topology:
    """Builds a Topology from a parsed key-value tree (see file format)."""
    diags: list[str] = []
    if not isinstance(document, Mapping):
        raise TopologyError(["document: expected a mapping at top level"])
    unknown = set(document) - {"nodes", "links", "endpoints", "constants"}
    if unknown:
        diags.append(f"document: unknown top-level keys {sorted(unknown)}")

    raw_const = document.get("constants") or {}
    _require(isinstance(raw_const, Mapping), diags, "constants: expected a mapping")
    try:
        constants = LossConstants(
            c_eff=float(raw_const.get("c_eff", 0.9)),
            beta=float(raw_const.get("beta", 0.2)),
        )
    except (TopologyError, TypeError, ValueError) as exc:
        diags.append(f"constants: {exc}")
        constants = LossConstants()

    endpoints = document.get("endpoints") or {}
    if not _require(
        isinstance(endpoints, Mapping) and "source" in endpoints and "sink" in endpoints,
        diags,
        "endpoints: must give both source and sink",
    ):
        raise TopologyError(diags)
    source = str(endpoints["source"])
    sink = str(endpoints["sink"])

    nodes: list[NodeSpec] = []
    for i, raw in enumerate(document.get("nodes") or []):
        if not _require(isinstance(raw, Mapping) and "id" in raw, diags, f"nodes[{i}]: need an id"):
            continue
        nid = str(raw["id"])
        unknown = set(raw) - {"id", "q"}
        if unknown:
            diags.append(f"nodes[{i}]: unknown keys {sorted(unknown)}")
        try:
            q = float(raw.get("q", 1.0))
        except (TypeError, ValueError):
            diags.append(f"nodes[{i}].q: not a number ({raw.get('q')!r})")
            q = 1.0
        nodes.append(NodeSpec(nid, q, _role_of(nid, source, sink)))

    links: list[LinkSpec] = []
    for i, raw in enumerate(document.get("links") or []):
        if not _require(
            isinstance(raw, Mapping) and "u" in raw and "v" in raw,
            diags,
            f"links[{i}]: need u and v",
        ):
            continue
        unknown = set(raw) - {"u", "v", "length_km", "p", "c"}
        if unknown:
            diags.append(f"links[{i}]: unknown keys {sorted(unknown)}")
        try:
            links.append(
                LinkSpec(
                    u=str(raw["u"]),
                    v=str(raw["v"]),
                    length_km=None if raw.get("length_km") is None else float(raw["length_km"]),
                    p=None if raw.get("p") is None else float(raw["p"]),
                    c=int(raw.get("c", 1)),
                )
            )
        except (TypeError, ValueError) as exc:
            diags.append(f"links[{i}]: {exc}")

    if diags:
        raise TopologyError(diags)
    return Topology(tuple(nodes), tuple(links), source, sink, constants)


def load_topology(text_or_path) -> Topology:
    """Loads and fully validates a topology from YAML text or a file path."""
    text = text_or_path
    if hasattr(text_or_path, "read"):
        text = text_or_path.read()
    elif isinstance(text_or_path, str) and "\n" not in text_or_path and (
        text_or_path.endswith((".yaml", ".yml")) or "/" in text_or_path
    ):
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise TopologyError([f"document: YAML parse failure: {exc}"]) from exc
    if document is None:
        raise TopologyError(["document: empty"])
    return parse_topology(document)


def serialize_topology(t: Topology) -> dict:
    """Round-trippable plain-dict form (load_topology . serialize == identity)."""
    nodes = []
    for n in t.nodes:
        entry: dict = {"id": n.id}
        if n.role == ROLE_INTERNAL:
            entry["q"] = n.q
        nodes.append(entry)
    links = []
    for l in t.links:
        entry = {"u": l.u, "v": l.v}
        if l.length_km is not None:
            entry["length_km"] = l.length_km
        else:
            entry["p"] = l.p
        if l.c != 1:
            entry["c"] = l.c
        links.append(entry)
    return {
        "nodes": nodes,
        "links": links,
        "endpoints": {"source": t.source, "sink": t.sink},
        "constants": {"c_eff": t.constants.c_eff, "beta": t.constants.beta},
    }


def dump_topology(t: Topology) -> str:
    return yaml.safe_dump(serialize_topology(t), sort_keys=False)
