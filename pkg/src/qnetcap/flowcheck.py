"""Independent checker for the constrained-flow variable model.

A flow assignment holds per-arc flow values F and binary matching
indicators x (one per eligible arc-pair triple around an internal node).
The checker evaluates each constraint family on its own, so solver output
can be certified by machinery that shares nothing with the solver, and so
individual constraints can be switched off to demonstrate why each one is
needed.

Constraint tags:
    BOUNDS  0 <= F_ij <= 1 and x in {0, 1}
    C6      sum_k (x_ijk + x_kji) <= 1 per arc: an arc joins at most one
            matching, in one direction
    C7      x_ijk * (F_ij * q_j - F_jk) = 0 per triple: matched flow is
            scaled by exactly the node gain
    C8      sum_k x_ijk >= F_ij per arc with j != sink: positive flow must
            be matched onward
    C9      sum_j (F_ij - F_ji * q_i) = 0 per internal node: node-level
            conservation with gain
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

import yaml

from .snapshot import DirectedSnapshot

TAU = 1e-9  # absolute feasibility tolerance for equality constraints

ALL_CONSTRAINTS = ("BOUNDS", "C6", "C7", "C8", "C9")

Arc = tuple[str, str]
Triple = tuple[str, str, str]


class InfeasibleAssignmentError(ValueError):
    """Raised when an operation requires a fully feasible assignment."""

    def __init__(self, report: "ConstraintReport"):
        self.report = report
        heads = ", ".join(
            f"{v.constraint}@{v.location}" for v in report.violations[:4]
        )
        more = "" if len(report.violations) <= 4 else f" (+{len(report.violations) - 4} more)"
        super().__init__(f"assignment infeasible: {heads}{more}")


@dataclass(frozen=True)
class FlowAssignment:
    """Explicit variable assignment: arc flows and matching indicators."""

    flows: Mapping[Arc, float]
    matchings: Mapping[Triple, int] = field(default_factory=dict)

    @staticmethod
    def from_document(document: Mapping) -> "FlowAssignment":
        flows = {
            (str(row["from"]), str(row["to"])): float(row["value"])
            for row in document.get("flows") or []
        }
        matchings = {
            (str(row["i"]), str(row["j"]), str(row["k"])): int(row["value"])
            for row in document.get("matchings") or []
        }
        return FlowAssignment(flows, matchings)

    def to_document(self) -> dict:
        return {
            "flows": [
                {"from": i, "to": j, "value": v} for (i, j), v in sorted(self.flows.items())
            ],
            "matchings": [
                {"i": i, "j": j, "k": k, "value": v}
                for (i, j, k), v in sorted(self.matchings.items())
            ],
        }


def load_assignment(text_or_path) -> FlowAssignment:
    text = text_or_path
    if hasattr(text_or_path, "read"):
        text = text_or_path.read()
    elif isinstance(text_or_path, str) and "\n" not in text_or_path and (
        text_or_path.endswith((".yaml", ".yml")) or "/" in text_or_path
    ):
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    document = yaml.safe_load(text)
    if not isinstance(document, Mapping):
        raise ValueError("assignment document must be a mapping with flows/matchings")
    return FlowAssignment.from_document(document)


@dataclass(frozen=True)
class Violation:
    constraint: str
    location: Union[Arc, Triple, str]
    residual: float


@dataclass(frozen=True)
class ConstraintReport:
    violations: tuple[Violation, ...]
    objective: float

    @property
    def feasible(self) -> bool:
        return not self.violations

    def by_constraint(self, tag: str) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.constraint == tag)


def eligible_triples(g: DirectedSnapshot) -> tuple[Triple, ...]:
    """All (i, j, k) with arcs (i,j), (j,k), i != k and j internal."""
    triples = []
    for j in sorted(g.gains):
        if j in (g.source, g.sink):
            continue
        for i in g.in_arcs.get(j, ()):
            for k in g.out_arcs.get(j, ()):
                if i != k:
                    triples.append((i, j, k))
    return tuple(triples)


def check_assignment(
    g: DirectedSnapshot,
    a: FlowAssignment,
    active: Optional[Iterable[str]] = None,
) -> ConstraintReport:
    """Evaluates the active constraint families; empty violations = feasible."""
    tags = frozenset(ALL_CONSTRAINTS if active is None else (s.upper() for s in active))
    unknown = tags - frozenset(ALL_CONSTRAINTS)
    if unknown:
        raise ValueError(f"unknown constraint tags: {sorted(unknown)}")
    arcs = sorted(g.arcs)
    arc_set = g.arcs
    triples = eligible_triples(g)
    triple_set = set(triples)
    for arc in a.flows:
        if arc not in arc_set:
            raise KeyError(f"flow on unknown arc {arc}")
    for triple in a.matchings:
        if triple not in triple_set:
            raise KeyError(f"matching on unknown triple {triple}")

    fval = a.flows.get
    xval = a.matchings.get
    violations: list[Violation] = []

    if "BOUNDS" in tags:
        for arc in arcs:
            f = fval(arc, 0.0)
            if not 0.0 <= f <= 1.0:
                violations.append(Violation("BOUNDS", arc, max(-f, f - 1.0)))
        for triple in triples:
            x = xval(triple, 0)
            if x not in (0, 1):
                violations.append(Violation("BOUNDS", triple, float(x)))

    if "C6" in tags:
        first_two: dict[Arc, int] = {}
        last_two: dict[Arc, int] = {}
        for triple in triples:
            x = xval(triple, 0)
            if x:
                first_two[triple[:2]] = first_two.get(triple[:2], 0) + x
                last_two[triple[1:]] = last_two.get(triple[1:], 0) + x
        for i, j in arcs:
            total = first_two.get((i, j), 0) + last_two.get((j, i), 0)
            if total > 1:
                violations.append(Violation("C6", (i, j), float(total - 1)))

    if "C7" in tags:
        for i, j, k in triples:
            x = xval((i, j, k), 0)
            if not x:
                continue
            residual = x * (fval((i, j), 0.0) * g.gains[j] - fval((j, k), 0.0))
            if abs(residual) > TAU:
                violations.append(Violation("C7", (i, j, k), residual))

    if "C8" in tags:
        matched: dict[Arc, int] = {}
        for triple in triples:
            matched[triple[:2]] = matched.get(triple[:2], 0) + xval(triple, 0)
        for i, j in arcs:
            if j == g.sink:
                continue
            residual = fval((i, j), 0.0) - matched.get((i, j), 0)
            if residual > TAU:
                violations.append(Violation("C8", (i, j), residual))

    if "C9" in tags:
        for i in sorted(g.gains):
            if i in (g.source, g.sink):
                continue
            out_flow = sum(fval((i, j), 0.0) for j in g.out_arcs.get(i, ()))
            in_flow = sum(fval((j, i), 0.0) for j in g.in_arcs.get(i, ()))
            residual = out_flow - in_flow * g.gains[i]
            if abs(residual) > TAU:
                violations.append(Violation("C9", i, residual))

    return ConstraintReport(tuple(violations), objective_value(g, a))


def objective_value(g: DirectedSnapshot, a: FlowAssignment) -> float:
    """Total flow delivered into the sink."""
    return sum(a.flows.get((j, g.sink), 0.0) for j in g.in_arcs.get(g.sink, ()))


def extract_paths(
    g: DirectedSnapshot, a: FlowAssignment
) -> list[tuple[tuple[str, ...], float]]:
    """Decomposes a feasible assignment into its source-sink paths.

    Follows the matching indicators from each positive source arc; returns
    (node sequence, delivered flow) pairs whose delivered values sum to the
    objective.
    """
    report = check_assignment(g, a)
    if not report.feasible:
        raise InfeasibleAssignmentError(report)
    successor: dict[Arc, list[str]] = {}
    for (i, j, k), x in a.matchings.items():
        if x:
            successor.setdefault((i, j), []).append(k)
    paths = []
    for u in g.out_arcs.get(g.source, ()):
        flow = a.flows.get((g.source, u), 0.0)
        if flow <= TAU:
            continue
        path = [g.source, u]
        arc = (g.source, u)
        stranded = False
        while path[-1] != g.sink:
            nxt = successor.get(arc, [])
            if len(nxt) != 1:
                if a.flows.get(arc, 0.0) <= TAU:
                    stranded = True  # numerically zero flow petered out
                    break
                raise InfeasibleAssignmentError(report)  # stranded or split flow
            path.append(nxt[0])
            arc = (arc[1], nxt[0])
            if len(path) > len(g.arcs) + 1:
                raise InfeasibleAssignmentError(report)  # cycle
        if not stranded:
            paths.append((tuple(path), a.flows.get(arc, 0.0)))
    return paths
