"""Target graphs for graph-state synthesis.

A :class:`GraphSpec` is the vertex set V and edge set E of the graph state
``prod_{(i,j) in E} CZ_ij |+>^V``.  Vertex ids are opaque strings so that
hand-written graphs and generated lattices share one code path.

Lattice id schemes
------------------
* ``Square(rows, cols)``: vertex ``"r.c"``; edges join horizontal and
  vertical neighbours.
* ``Honeycomb(rows, cols)``: brick-wall embedding of the hexagonal lattice.
  Vertex ``"r.c"``; every row is a horizontal chain ``r.0 -- r.1 -- ...``
  and a vertical rung joins ``r.c`` to ``(r+1).c`` only when ``r + c`` is
  even.  Interior vertices therefore have degree 3.
* ``Cubic(n)``: vertex ``"x.y.z"``; edges join neighbours along each axis.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Sequence, Tuple, Union

import networkx as nx

from graphweaver.core.errors import GraphParseError, InvalidDimensionError, InvalidGraphError

logger = logging.getLogger(__name__)

Edge = Tuple[str, str]


@dataclass(frozen=True)
class GraphSpec:
    """A simple undirected graph with a deterministic vertex order.

    Edges are stored oriented by vertex order and sorted, so two specs with
    the same vertex order and edge set compare equal.
    """

    vertices: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)
    _adjacency: Dict[str, Tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: Dict[str, int] = {}
        for v in self.vertices:
            if not isinstance(v, str) or not v:
                raise InvalidGraphError(f"vertex ids must be non-empty strings, got {v!r}")
            if v in index:
                raise InvalidGraphError(f"duplicate vertex {v!r}")
            index[v] = len(index)

        seen: set[FrozenSet[str]] = set()
        oriented: List[Edge] = []
        neighbours: Dict[str, List[str]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            if u == v:
                raise InvalidGraphError(f"self-loop on {u!r}")
            if u not in index or v not in index:
                raise InvalidGraphError(f"edge ({u}, {v}) uses an undeclared vertex")
            key = frozenset((u, v))
            if key in seen:
                raise InvalidGraphError(f"duplicate edge ({u}, {v})")
            seen.add(key)
            oriented.append((u, v) if index[u] < index[v] else (v, u))
        oriented.sort(key=lambda e: (index[e[0]], index[e[1]]))
        for u, v in oriented:
            neighbours[u].append(v)
            neighbours[v].append(u)

        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(oriented))
        object.__setattr__(self, "_index", index)
        object.__setattr__(
            self,
            "_adjacency",
            {v: tuple(sorted(ns, key=index.__getitem__)) for v, ns in neighbours.items()},
        )

    # -- construction --------------------------------------------------------

    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[str]], vertices: Iterable[str] = ()) -> GraphSpec:
        """Build a spec whose vertex order is *vertices* then first appearance in *edges*."""
        order: Dict[str, None] = dict.fromkeys(vertices)
        pairs: List[Edge] = []
        for u, v in edges:
            order.setdefault(u)
            order.setdefault(v)
            pairs.append((u, v))
        return cls(tuple(order), tuple(pairs))

    # -- queries -------------------------------------------------------------

    def index(self, vertex: str) -> int:
        """Return the canonical position of *vertex*."""
        return self._index[vertex]

    def has_vertex(self, vertex: str) -> bool:
        """Whether *vertex* belongs to the graph."""
        return vertex in self._index

    def has_edge(self, u: str, v: str) -> bool:
        """Whether ``{u, v}`` is an edge, in either orientation."""
        return v in self._adjacency.get(u, ())

    def neighbors(self, vertex: str) -> Tuple[str, ...]:
        """Adjacent vertices in canonical order."""
        return self._adjacency[vertex]

    def degree(self, vertex: str) -> int:
        """Number of edges at *vertex*."""
        return len(self._adjacency[vertex])

    def edge_set(self) -> FrozenSet[FrozenSet[str]]:
        """Return the edges as unordered pairs."""
        return frozenset(frozenset(e) for e in self.edges)

    def canonical_edge(self, u: str, v: str) -> Edge:
        """Orient ``(u, v)`` by vertex order."""
        return (u, v) if self._index[u] < self._index[v] else (v, u)

    def without_edges(self, removed: Iterable[Sequence[str]]) -> GraphSpec:
        """Return a copy with the same vertices and *removed* edges dropped."""
        drop = {frozenset(e) for e in removed}
        return GraphSpec(self.vertices, tuple(e for e in self.edges if frozenset(e) not in drop))

    def to_networkx(self) -> nx.Graph:
        """Build an undirected networkx graph with the same vertices and edges."""
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.edges)
        return graph


def graph_hash(g: GraphSpec) -> str:
    """SHA-256 digest of the canonical vertex and edge listing."""
    text = "\n".join(g.vertices) + "\n--\n" + "\n".join(f"{u} {v}" for u, v in g.edges)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Lattice generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Square:
    rows: int
    cols: int


@dataclass(frozen=True)
class Honeycomb:
    rows: int
    cols: int


@dataclass(frozen=True)
class Cubic:
    n: int


LatticeKind = Union[Square, Honeycomb, Cubic]


def _require_dimensions(kind: LatticeKind, *dims: int) -> None:
    for d in dims:
        if isinstance(d, bool) or not isinstance(d, int):
            raise InvalidDimensionError(f"{kind}: dimensions must be integers, got {d!r}")
        if d < 1:
            raise InvalidDimensionError(f"{kind}: dimensions must be >= 1, got {d}")


def _require_positive(what: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise InvalidDimensionError(f"{what} must be a positive integer, got {value!r}")


def make_lattice(kind: LatticeKind) -> GraphSpec:
    """Generate the lattice graph described by *kind*."""
    if isinstance(kind, Square):
        _require_dimensions(kind, kind.rows, kind.cols)
        return _grid(kind.rows, kind.cols, rung=lambda r, c: True)
    if isinstance(kind, Honeycomb):
        _require_dimensions(kind, kind.rows, kind.cols)
        return _grid(kind.rows, kind.cols, rung=lambda r, c: (r + c) % 2 == 0)
    if isinstance(kind, Cubic):
        _require_dimensions(kind, kind.n)
        return _cubic(kind.n)
    raise InvalidDimensionError(f"unknown lattice kind {kind!r}")


def _grid(rows: int, cols: int, rung: Callable[[int, int], bool]) -> GraphSpec:
    vertices = tuple(f"{r}.{c}" for r in range(rows) for c in range(cols))
    edges: List[Edge] = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((f"{r}.{c}", f"{r}.{c + 1}"))
            if r + 1 < rows and rung(r, c):
                edges.append((f"{r}.{c}", f"{r + 1}.{c}"))
    return GraphSpec(vertices, tuple(edges))


def _cubic(n: int) -> GraphSpec:
    vertices = tuple(f"{x}.{y}.{z}" for x in range(n) for y in range(n) for z in range(n))
    edges: List[Edge] = []
    for x in range(n):
        for y in range(n):
            for z in range(n):
                here = f"{x}.{y}.{z}"
                if x + 1 < n:
                    edges.append((here, f"{x + 1}.{y}.{z}"))
                if y + 1 < n:
                    edges.append((here, f"{x}.{y + 1}.{z}"))
                if z + 1 < n:
                    edges.append((here, f"{x}.{y}.{z + 1}"))
    return GraphSpec(vertices, tuple(edges))


def make_path(n: int) -> GraphSpec:
    """Linear cluster ``0 -- 1 -- ... -- n-1``."""
    _require_positive("path length", n)
    ids = tuple(str(i) for i in range(n))
    return GraphSpec(ids, tuple(zip(ids, ids[1:])))


def make_cycle(n: int) -> GraphSpec:
    """Ring state on *n* >= 3 vertices."""
    if n < 3:
        raise InvalidDimensionError(f"a cycle needs at least 3 vertices, got {n}")
    ids = tuple(str(i) for i in range(n))
    return GraphSpec(ids, tuple(zip(ids, ids[1:] + ids[:1])))


def make_star(leaves: int) -> GraphSpec:
    """Star-shaped state with centre ``0`` and leaves ``1..leaves``."""
    _require_positive("leaf count", leaves)
    return GraphSpec(
        tuple(str(i) for i in range(leaves + 1)), tuple(("0", str(i)) for i in range(1, leaves + 1))
    )


_LATTICE_RE = re.compile(r"^(square|honeycomb|cubic):(\d+)(?:x(\d+))?$")


def parse_lattice(text: str) -> LatticeKind:
    """Parse the shorthand ``square:RxC``, ``honeycomb:RxC`` or ``cubic:N``."""
    match = _LATTICE_RE.match(text.strip().lower())
    if match is None:
        raise InvalidDimensionError(
            f"invalid lattice {text!r}; expected square:RxC, honeycomb:RxC or cubic:N"
        )
    name, first, second = match.groups()
    if name == "cubic":
        if second is not None:
            raise InvalidDimensionError(f"cubic lattices take one size, got {text!r}")
        return Cubic(int(first))
    if second is None:
        raise InvalidDimensionError(f"{name} lattices need RxC, got {text!r}")
    if name == "square":
        return Square(int(first), int(second))
    return Honeycomb(int(first), int(second))


# ---------------------------------------------------------------------------
# Degree analysis
# ---------------------------------------------------------------------------


def odd_degree_vertices(g: GraphSpec) -> FrozenSet[str]:
    """Vertices of odd degree (the endpoints any trail cover must use)."""
    return frozenset(v for v in g.vertices if g.degree(v) % 2 == 1)


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------


def parse_edge_list(text: str) -> GraphSpec:
    """Parse lines of ``u v``; blank lines and ``#`` comments are ignored."""
    order: Dict[str, None] = {}
    seen: set[FrozenSet[str]] = set()
    edges: List[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphParseError(f"expected two vertex ids, got {len(tokens)}", line=lineno)
        u, v = tokens
        if u == v:
            raise GraphParseError(f"self-loop on {u!r}", line=lineno)
        key = frozenset((u, v))
        if key in seen:
            raise GraphParseError(f"duplicate edge ({u}, {v})", line=lineno)
        seen.add(key)
        order.setdefault(u)
        order.setdefault(v)
        edges.append((u, v))
    return GraphSpec(tuple(order), tuple(edges))


_BARE_ID = re.compile(r"(?:[A-Za-z_][A-Za-z0-9_]*|\d+(?:\.\d*)?|\.\d+)\Z")
_DOT_KEYWORDS = frozenset({"graph", "digraph", "node", "edge", "strict", "subgraph"})
_DOT_TOKEN = re.compile(r'\s*(?:("(?:[^"\\]|\\.)*")|(--)|(;)|([A-Za-z0-9_.]+))')


def _dot_id(vertex: str) -> str:
    if _BARE_ID.match(vertex) and vertex.lower() not in _DOT_KEYWORDS:
        return vertex
    escaped = vertex.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def to_dot(g: GraphSpec) -> str:
    """Render *g* as an undirected DOT graph in canonical order."""
    lines = ["graph {"]
    lines.extend(f"  {_dot_id(v)};" for v in g.vertices)
    lines.extend(f"  {_dot_id(u)} -- {_dot_id(v)};" for u, v in g.edges)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _unquote(token: str) -> str:
    return re.sub(r"\\(.)", r"\1", token[1:-1])


def parse_dot(text: str) -> GraphSpec:
    """Parse the undirected DOT subset produced by :func:`to_dot`.

    Supports vertex statements, edge chains ``a -- b -- c``, quoted ids and
    ``//`` comments.  Attributes and subgraphs are rejected.
    """
    head, brace, rest = text.partition("{")
    if not brace or "}" not in rest:
        raise GraphParseError("expected 'graph { ... }'")
    header = [w.lower() for w in head.split()]
    if header[:1] == ["strict"]:
        header = header[1:]
    if header[:1] != ["graph"]:
        raise GraphParseError(f"expected an undirected 'graph' header, got {head.strip()!r}")
    body = rest[: rest.rindex("}")]
    first_line = head.count("\n") + 1

    order: Dict[str, None] = {}
    edges: List[Edge] = []
    seen: set[FrozenSet[str]] = set()
    for offset, raw in enumerate(body.split("\n")):
        lineno = first_line + offset
        line = raw.split("//", 1)[0]
        for statement in _dot_statements(line, lineno):
            for vertex in statement:
                order.setdefault(vertex)
            for u, v in zip(statement, statement[1:]):
                if u == v:
                    raise GraphParseError(f"self-loop on {u!r}", line=lineno)
                key = frozenset((u, v))
                if key in seen:
                    raise GraphParseError(f"duplicate edge ({u}, {v})", line=lineno)
                seen.add(key)
                edges.append((u, v))
    return GraphSpec(tuple(order), tuple(edges))


def _dot_statements(line: str, lineno: int) -> List[List[str]]:
    statements: List[List[str]] = []
    current: List[str] = []
    expect_id = True
    pos = 0
    line = line.rstrip()
    while pos < len(line):
        match = _DOT_TOKEN.match(line, pos)
        if match is None or match.end() == pos:
            raise GraphParseError(f"unexpected text {line[pos:].strip()!r}", line=lineno)
        quoted, dash, semi, bare = match.groups()
        pos = match.end()
        if semi is not None:
            if current and expect_id:
                raise GraphParseError("dangling '--'", line=lineno)
            if current:
                statements.append(current)
            current, expect_id = [], True
        elif dash is not None:
            if expect_id:
                raise GraphParseError("'--' without a left vertex", line=lineno)
            expect_id = True
        else:
            if not expect_id:
                statements.append(current)
                current = []
            current.append(_unquote(quoted) if quoted is not None else bare)
            expect_id = False
    if current:
        if expect_id:
            raise GraphParseError("dangling '--'", line=lineno)
        statements.append(current)
    return statements


def parse_graph_text(text: str) -> GraphSpec:
    """Parse DOT when the text opens with a ``graph`` header, else an edge list."""
    stripped = text.lstrip().lower()
    if stripped.startswith(("graph", "strict")):
        g = parse_dot(text)
        fmt = "dot"
    else:
        g = parse_edge_list(text)
        fmt = "edge list"
    logger.debug("parsed %s: %d vertices, %d edges", fmt, len(g.vertices), len(g.edges))
    return g
