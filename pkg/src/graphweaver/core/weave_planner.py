"""Spider-trail planning: trail covers, weave schedules and operation counts.

A spider photon may pass through a vertex any number of times but must
never retrace a link it already connected.  Covering a graph with such
walks is the edge-disjoint trail cover problem: every connected component
needs ``max(1, odd/2)`` trails, which this module constructs by pairing
odd-degree vertices with virtual edges, walking an Euler circuit and
cutting the circuit at the virtual edges.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, ClassVar, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import networkx as nx

from graphweaver.core import store
from graphweaver.core.errors import DomainError, GraphParseError, GraphWeaverError, PlanningError
from graphweaver.core.graph_model import Edge, GraphSpec, graph_hash

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Trails
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trail:
    """A walk ``v0 .. vk`` that never repeats an edge; vertices may repeat."""

    vertices: Tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise PlanningError(f"a trail needs at least one edge, got {self.vertices!r}")
        seen: set[FrozenSet[str]] = set()
        for u, v in self.edges():
            key = frozenset((u, v))
            if u == v or key in seen:
                raise PlanningError(f"trail retraces or loops on ({u}, {v})")
            seen.add(key)

    def edges(self) -> List[Edge]:
        """Consecutive vertex pairs in walk order."""
        return list(zip(self.vertices, self.vertices[1:]))

    @property
    def is_closed(self) -> bool:
        return self.vertices[0] == self.vertices[-1]

    def __len__(self) -> int:
        return len(self.vertices) - 1


def _components(g: GraphSpec) -> List[List[str]]:
    """Connected components with at least one edge, ordered by their first vertex."""
    comps = [
        sorted(comp, key=g.index)
        for comp in nx.connected_components(g.to_networkx())
        if len(comp) > 1
    ]
    return sorted(comps, key=lambda comp: g.index(comp[0]))


def min_trail_count(g: GraphSpec) -> int:
    """Minimum number of edge-disjoint trails covering every edge of *g*."""
    total = 0
    for comp in _components(g):
        odd = sum(1 for v in comp if g.degree(v) % 2 == 1)
        total += max(1, odd // 2)
    return total


def decompose_trails(g: GraphSpec) -> List[Trail]:
    """Cover *g* with exactly :func:`min_trail_count` edge-disjoint trails."""
    trails: List[Trail] = []
    for comp in _components(g):
        members = set(comp)
        odd = [v for v in comp if g.degree(v) % 2 == 1]
        multi = nx.MultiGraph()
        multi.add_nodes_from(comp)
        for u, v in g.edges:
            if u in members:
                multi.add_edge(u, v, virtual=False)
        for u, v in zip(odd[::2], odd[1::2]):
            multi.add_edge(u, v, virtual=True)

        source = odd[0] if odd else comp[0]
        circuit = list(nx.eulerian_circuit(multi, source=source, keys=True))
        is_virtual = [bool(multi.edges[u, v, k]["virtual"]) for u, v, k in circuit]
        if not any(is_virtual):
            closed = [circuit[0][0]] + [v for _, v, _ in circuit]
            trails.append(_canonical(g, closed))
            continue

        first = is_virtual.index(True)
        rotated = list(range(first + 1, len(circuit))) + list(range(first + 1))
        walk: List[str] = []
        for i in rotated:
            u, v, _ = circuit[i]
            if is_virtual[i]:
                trails.append(_canonical(g, walk))
                walk = []
            else:
                if not walk:
                    walk.append(u)
                walk.append(v)
        logger.debug("component at %s: %d odd vertices", comp[0], len(odd))
    return trails


def _canonical(g: GraphSpec, walk: List[str]) -> Trail:
    """Orient open trails from the smaller endpoint; rotate closed ones to the smallest vertex."""
    if walk[0] != walk[-1]:
        if g.index(walk[-1]) < g.index(walk[0]):
            walk = walk[::-1]
        return Trail(tuple(walk))
    body = walk[:-1]
    start = min(range(len(body)), key=lambda i: g.index(body[i]))
    rotated = body[start:] + body[:start] + [body[start]]
    if g.index(rotated[-2]) < g.index(rotated[1]):
        rotated = rotated[::-1]
    return Trail(tuple(rotated))


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrepareBlock:
    """A pre-linked chain built before the spider weaves the rest."""

    edges: Tuple[Edge, ...]
    op: ClassVar[str] = "prepare_block"


@dataclass(frozen=True)
class Attach:
    """Entangle a fresh spider photon to ``p``."""

    p: str
    op: ClassVar[str] = "attach"


@dataclass(frozen=True)
class Link:
    """Connect the bond ``(p, r)`` and move the spider from ``p`` to ``r``."""

    p: str
    r: str
    op: ClassVar[str] = "link"


@dataclass(frozen=True)
class Detach:
    """Measure the spider out; ``r`` is its last anchor."""

    r: str
    op: ClassVar[str] = "detach"


Step = Union[PrepareBlock, Attach, Link, Detach]


@dataclass(frozen=True)
class PlannerOptions:
    """``blocks`` are vertex chains emitted as PrepareBlock steps."""

    blocks: Tuple[Tuple[str, ...], ...] = ()


@dataclass(frozen=True)
class WeaveSchedule:
    """An ordered step list bound to the graph it weaves, by value and by hash."""

    graph: GraphSpec
    steps: Tuple[Step, ...]
    options: PlannerOptions = field(default_factory=PlannerOptions)
    graph_hash: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.graph_hash:
            object.__setattr__(self, "graph_hash", graph_hash(self.graph))

    def trail_count(self) -> int:
        """Number of spider cascades, one per Attach."""
        return sum(1 for s in self.steps if isinstance(s, Attach))


def _block_edges(g: GraphSpec, blocks: Sequence[Sequence[str]]) -> List[Tuple[Edge, ...]]:
    used: set[FrozenSet[str]] = set()
    result: List[Tuple[Edge, ...]] = []
    for chain in blocks:
        if len(chain) < 2:
            raise PlanningError(f"block {list(chain)} needs at least two vertices")
        edges = tuple(zip(chain, chain[1:]))
        for u, v in edges:
            if not (g.has_vertex(u) and g.has_vertex(v) and g.has_edge(u, v)):
                raise PlanningError(f"block edge ({u}, {v}) is not an edge of the graph")
            key = frozenset((u, v))
            if key in used:
                raise PlanningError(f"blocks overlap on edge ({u}, {v})")
            used.add(key)
        result.append(edges)
    return result


def plan_schedule(g: GraphSpec, opts: Optional[PlannerOptions] = None) -> WeaveSchedule:
    """Emit an executable schedule: prepared blocks first, then one cascade per trail."""
    opts = opts if opts is not None else PlannerOptions()
    blocks = _block_edges(g, opts.blocks)
    steps: List[Step] = [PrepareBlock(edges) for edges in blocks]
    residual = g.without_edges(e for edges in blocks for e in edges)
    trails = decompose_trails(residual)
    for trail in trails:
        steps.append(Attach(trail.vertices[0]))
        steps.extend(Link(p, r) for p, r in trail.edges())
        steps.append(Detach(trail.vertices[-1]))
    logger.info(
        "planned %d blocks and %d trails for %d edges", len(blocks), len(trails), len(g.edges)
    )
    return WeaveSchedule(g, tuple(steps), opts)


def row_chain_blocks(rows: int, cols: int) -> Tuple[Tuple[str, ...], ...]:
    """Horizontal row chains of a ``Square(rows, cols)`` lattice, for use as blocks."""
    if cols < 2:
        return ()
    return tuple(tuple(f"{r}.{c}" for c in range(cols)) for r in range(rows))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


class ViolationKind(Enum):
    RETRACED_EDGE = "retraced edge"
    ANCHOR_DISCONTINUITY = "anchor discontinuity"
    LINK_WITHOUT_ATTACH = "link without attach"
    NESTED_ATTACH = "nested attach"
    UNMATCHED_ATTACH = "unmatched attach"
    DETACH_MISMATCH = "detach mismatch"
    UNKNOWN_EDGE = "unknown edge"
    UNKNOWN_VERTEX = "unknown vertex"
    COVERAGE_GAP = "coverage gap"
    SELF_LOOP = "self loop"
    GRAPH_MISMATCH = "graph hash mismatch"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    message: str
    step: Optional[int] = None

    def __str__(self) -> str:
        where = f"step {self.step}: " if self.step is not None else ""
        return f"{where}{self.kind.value}: {self.message}"


def validate_schedule(s: WeaveSchedule, g: GraphSpec) -> List[Violation]:
    """Report every broken schedule invariant; an empty list means the schedule is valid."""
    violations: List[Violation] = []
    if s.graph_hash != graph_hash(g):
        violations.append(
            Violation(ViolationKind.GRAPH_MISMATCH, "schedule was planned for another graph")
        )

    covered: set[FrozenSet[str]] = set()
    anchor: Optional[str] = None

    def claim(i: int, u: str, v: str) -> None:
        if u == v:
            violations.append(Violation(ViolationKind.SELF_LOOP, f"({u}, {v})", i))
            return
        if not (g.has_vertex(u) and g.has_vertex(v) and g.has_edge(u, v)):
            violations.append(
                Violation(ViolationKind.UNKNOWN_EDGE, f"({u}, {v}) is not in the graph", i)
            )
        key = frozenset((u, v))
        if key in covered:
            violations.append(Violation(ViolationKind.RETRACED_EDGE, f"({u}, {v})", i))
        covered.add(key)

    for i, step in enumerate(s.steps):
        if isinstance(step, PrepareBlock):
            for u, v in step.edges:
                claim(i, u, v)
        elif isinstance(step, Attach):
            if anchor is not None:
                violations.append(
                    Violation(ViolationKind.NESTED_ATTACH, f"spider still anchored at {anchor}", i)
                )
            if not g.has_vertex(step.p):
                violations.append(Violation(ViolationKind.UNKNOWN_VERTEX, step.p, i))
            anchor = step.p
        elif isinstance(step, Link):
            if anchor is None:
                violations.append(
                    Violation(ViolationKind.LINK_WITHOUT_ATTACH, f"({step.p}, {step.r})", i)
                )
            elif step.p != anchor:
                violations.append(
                    Violation(
                        ViolationKind.ANCHOR_DISCONTINUITY,
                        f"link from {step.p} but spider is at {anchor}",
                        i,
                    )
                )
            claim(i, step.p, step.r)
            anchor = step.r
        elif isinstance(step, Detach):
            if anchor is None:
                violations.append(Violation(ViolationKind.DETACH_MISMATCH, "no spider attached", i))
            elif step.r != anchor:
                violations.append(
                    Violation(
                        ViolationKind.DETACH_MISMATCH,
                        f"detach at {step.r} but spider is at {anchor}",
                        i,
                    )
                )
            anchor = None

    if anchor is not None:
        violations.append(
            Violation(ViolationKind.UNMATCHED_ATTACH, f"spider left anchored at {anchor}")
        )
    for u, v in g.edges:
        if frozenset((u, v)) not in covered:
            violations.append(Violation(ViolationKind.COVERAGE_GAP, f"({u}, {v}) never linked"))
    return violations


# ---------------------------------------------------------------------------
# Operation counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountReport:
    """Entangler operation counts under each strategy; ``schedule_ops`` is set when planned."""

    cascade_ops: int
    box_ops: int
    direct_ops: int
    schedule_ops: Optional[int] = None


def formula_counts(n: int) -> CountReport:
    """Entangler operations for an ``n x n x n`` cubic graph state under three strategies."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise DomainError(f"cubic operation counts need n >= 2, got {n!r}")
    bulk = (n - 1) * n * n
    box = 4 * bulk - 2 * n + 1 if n % 2 == 0 else 4 * bulk - n + 1
    return CountReport(cascade_ops=3 * bulk + 1, box_ops=box, direct_ops=6 * bulk)


def _step_cost(step: Step, touched: set[str]) -> int:
    """Firings for *step* given the photons that earlier steps already entangled."""
    if isinstance(step, PrepareBlock):
        if len(step.edges) == 1 and not touched.intersection(step.edges[0]):
            # a lone bond between fresh photons is a Bell pair made without an ancilla
            return 1
        trails = decompose_trails(GraphSpec.from_edges(step.edges))
        return len(step.edges) + len(trails)
    if isinstance(step, (Attach, Link)):
        return 1
    return 0


def count_operations(s: WeaveSchedule) -> int:
    """Entangler firings the schedule costs when executed; detaching is free."""
    touched: set[str] = set()
    total = 0
    for step in s.steps:
        total += _step_cost(step, touched)
        if isinstance(step, PrepareBlock):
            touched.update(v for edge in step.edges for v in edge)
        elif isinstance(step, Attach):
            touched.add(step.p)
        elif isinstance(step, Link):
            touched.update((step.p, step.r))
    return total


def count_report(n: int, schedule: Optional[WeaveSchedule] = None) -> CountReport:
    """Closed-form cubic counts, plus the count of *schedule* when one is given."""
    report = formula_counts(n)
    if schedule is None:
        return report
    return CountReport(
        report.cascade_ops, report.box_ops, report.direct_ops, count_operations(schedule)
    )


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


def _step_to_dict(step: Step) -> Dict[str, Any]:
    if isinstance(step, PrepareBlock):
        return {"op": step.op, "edges": [[u, v] for u, v in step.edges]}
    if isinstance(step, Attach):
        return {"op": step.op, "p": step.p}
    if isinstance(step, Link):
        return {"op": step.op, "p": step.p, "r": step.r}
    return {"op": step.op, "r": step.r}


def schedule_to_dict(s: WeaveSchedule) -> Dict[str, Any]:
    """Serialize *s* as a versioned document carrying its target graph and hash."""
    return {
        "v": SCHEMA_VERSION,
        "graph_hash": s.graph_hash,
        "graph": {"vertices": list(s.graph.vertices), "edges": [[u, v] for u, v in s.graph.edges]},
        "planner": {"blocks": [list(chain) for chain in s.options.blocks]},
        "steps": [_step_to_dict(step) for step in s.steps],
    }


def _step_from_dict(i: int, data: Any) -> Step:
    if not isinstance(data, dict):
        raise GraphParseError(f"step {i}: expected an object, got {type(data).__name__}")
    op = data.get("op")
    try:
        if op == "prepare_block":
            return PrepareBlock(tuple((str(u), str(v)) for u, v in data["edges"]))
        if op == "attach":
            return Attach(str(data["p"]))
        if op == "link":
            return Link(str(data["p"]), str(data["r"]))
        if op == "detach":
            return Detach(str(data["r"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphParseError(f"step {i}: malformed {op} step ({exc})") from exc
    raise GraphParseError(f"step {i}: unknown op {op!r}")


def schedule_from_dict(data: Dict[str, Any]) -> WeaveSchedule:
    """Rebuild a schedule document, rejecting unknown versions and stale hashes."""
    if not isinstance(data, dict):
        raise GraphParseError("schedule document must be a JSON object")
    if data.get("v") != SCHEMA_VERSION:
        raise GraphParseError(f"unsupported schedule document version {data.get('v')!r}")
    planner = data.get("planner", {})
    if not isinstance(planner, dict):
        raise GraphParseError("planner must be a JSON object")
    raw_steps = data.get("steps")
    if not isinstance(raw_steps, list):
        raise GraphParseError("steps must be a JSON array")
    try:
        graph_data = data["graph"]
        graph = GraphSpec(
            tuple(str(v) for v in graph_data["vertices"]),
            tuple((str(u), str(v)) for u, v in graph_data["edges"]),
        )
        blocks = tuple(tuple(str(v) for v in chain) for chain in planner.get("blocks", []))
    except (KeyError, TypeError, ValueError, GraphWeaverError) as exc:
        raise GraphParseError(f"malformed schedule document ({exc})") from exc
    steps = tuple(_step_from_dict(i, step) for i, step in enumerate(raw_steps))
    expected = graph_hash(graph)
    if data.get("graph_hash") != expected:
        raise GraphParseError("graph_hash does not match the embedded graph")
    return WeaveSchedule(graph, steps, PlannerOptions(blocks), expected)


def save_schedule(s: WeaveSchedule, path: Path) -> None:
    """Write *s* to *path* as a locked JSON document."""
    store.write_json(path, schedule_to_dict(s))


def load_schedule(path: Path) -> WeaveSchedule:
    """Read and verify a schedule document written by :func:`save_schedule`."""
    return schedule_from_dict(store.read_json(path))
