"""
Metric graphs with half-lines: validation, the topological condition (H)
and the folded-line family (line, tadpole, towers of bubbles).

A graph is a tuple of vertices and a tuple of edges. Finite edges carry a
positive float length; half-lines carry INFINITE, start at a finite vertex
and end at a vertex at infinity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Union

import networkx as nx
import numpy as np

from constants import EQUAL_LENGTH_RTOL, INFINITE, Example1Kind, Infinite
from data_structures.linked_stack import LinkedStack
from errors import GraphValidationError, PreconditionError, TopologyError

logger = logging.getLogger(__name__)

Length = Union[float, Infinite]


@dataclass(frozen=True)
class Vertex:
    id: str
    at_infinity: bool = False


@dataclass(frozen=True)
class Edge:
    id: str
    start: str
    end: str
    length: Length

    @property
    def is_half_line(self) -> bool:
        return self.length is INFINITE

    @property
    def is_loop(self) -> bool:
        return self.start == self.end

    def other_end(self, vertex_id: str) -> str:
        if vertex_id == self.start:
            return self.end
        if vertex_id == self.end:
            return self.start
        raise KeyError(f"vertex {vertex_id!r} is not an endpoint of edge {self.id!r}")


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def vertex_map(self) -> dict[str, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def edge_map(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def incidence(self) -> dict[str, tuple[str, ...]]:
        """ Edge ids at each vertex; a loop appears twice at its vertex. """
        table: dict[str, list[str]] = {v.id: [] for v in self.vertices}
        for e in self.edges:
            for end in (e.start, e.end):
                if end in table:
                    table[end].append(e.id)
        return {k: tuple(v) for k, v in table.items()}

    def degree(self, vertex_id: str) -> int:
        return len(self.incidence[vertex_id])

    @property
    def finite_vertices(self) -> tuple[Vertex, ...]:
        return tuple(v for v in self.vertices if not v.at_infinity)

    @property
    def infinity_vertices(self) -> tuple[Vertex, ...]:
        return tuple(v for v in self.vertices if v.at_infinity)

    @property
    def half_lines(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.is_half_line)

    @property
    def finite_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if not e.is_half_line)

    @property
    def is_compact(self) -> bool:
        return not self.half_lines

    def with_edge_length(self, edge_id: str, length: float) -> MetricGraph:
        """ Copy of the graph with one finite edge resized; ids are kept. """
        if self.edge_map[edge_id].is_half_line:
            raise TopologyError(f"edge {edge_id!r} is a half-line")
        edges = tuple(Edge(e.id, e.start, e.end, float(length)) if e.id == edge_id else e for e in self.edges)
        return MetricGraph(self.vertices, edges)


def validate(graph: MetricGraph) -> list[Violation]:
    """
    Every structural rule the graph breaks. An empty list means the graph is valid.

    :complexity: O(V + E)
    """
    found: list[Violation] = []
    if not graph.vertices:
        found.append(Violation("nonempty", "graph", "a graph needs at least one vertex"))
    if not graph.edges:
        found.append(Violation("nonempty", "graph", "a graph needs at least one edge"))

    seen: set[str] = set()
    for v in graph.vertices:
        if v.id in seen:
            found.append(Violation("unique-vertex-id", v.id, "vertex id used more than once"))
        seen.add(v.id)
    seen = set()
    for e in graph.edges:
        if e.id in seen:
            found.append(Violation("unique-edge-id", e.id, "edge id used more than once"))
        seen.add(e.id)

    vertices = graph.vertex_map
    for e in graph.edges:
        missing = [end for end in (e.start, e.end) if end not in vertices]
        for end in missing:
            found.append(Violation("known-endpoint", e.id, f"endpoint {end!r} is not a vertex"))
        if missing:
            continue
        if e.is_half_line:
            if vertices[e.start].at_infinity or not vertices[e.end].at_infinity:
                found.append(Violation("half-line-orientation", e.id,
                                       "a half-line must run from a finite vertex to a vertex at infinity"))
            continue
        if not isinstance(e.length, (int, float)) or isinstance(e.length, bool) or not e.length > 0 \
                or not np.isfinite(e.length):
            found.append(Violation("positive-length", e.id, f"length {e.length!r} is not a positive number"))
        if vertices[e.start].at_infinity or vertices[e.end].at_infinity:
            found.append(Violation("finite-edge-at-infinity", e.id,
                                   "a finite edge cannot touch a vertex at infinity"))

    for v in graph.infinity_vertices:
        if graph.degree(v.id) != 1:
            found.append(Violation("infinity-degree-one", v.id,
                                   f"a vertex at infinity must have degree one, found {graph.degree(v.id)}"))

    broken_ids = any(v.rule in ("unique-vertex-id", "unique-edge-id", "known-endpoint") for v in found)
    if graph.vertices and not broken_ids and len(_component(graph, graph.vertices[0].id)) != len(graph.vertices):
        found.append(Violation("connected", "graph", "the graph is not connected"))
    return found


def require_valid(graph: MetricGraph) -> None:
    violations = validate(graph)
    if violations:
        raise GraphValidationError(violations)


def _component(graph: MetricGraph, root: str, removed_edge: str | None = None) -> frozenset[str]:
    """ Vertices reachable from root without crossing removed_edge. """
    reached = {root}
    stack: LinkedStack[str] = LinkedStack([root])
    while not stack.is_empty():
        v = stack.pop()
        for eid in graph.incidence[v]:
            if eid == removed_edge:
                continue
            w = graph.edge_map[eid].other_end(v)
            if w in graph.vertex_map and w not in reached:
                reached.add(w)
                stack.push(w)
    return frozenset(reached)


def total_length(graph: MetricGraph) -> Length:
    require_valid(graph)
    if graph.half_lines:
        return INFINITE
    return float(sum(e.length for e in graph.edges))


def cut_edges(graph: MetricGraph) -> frozenset[str]:
    """
    Ids of the edges whose removal disconnects the graph.

    Iterative lowpoint search. Only the tree edge to the parent is skipped
    by id, so a parallel copy of it closes a cycle and loops are never cut edges.

    :complexity: O(V + E)
    """
    require_valid(graph)
    discovered: dict[str, int] = {}
    low: dict[str, int] = {}
    bridges: set[str] = set()

    root = graph.vertices[0].id
    discovered[root] = low[root] = 0
    stack = LinkedStack([(root, None, iter(graph.incidence[root]))])
    while not stack.is_empty():
        v, parent_edge, pending = stack.peek()
        descended = False
        for eid in pending:
            e = graph.edge_map[eid]
            if eid == parent_edge or e.is_loop:
                continue
            w = e.other_end(v)
            if w not in discovered:
                discovered[w] = low[w] = len(discovered)
                stack.push((w, eid, iter(graph.incidence[w])))
                descended = True
                break
            low[v] = min(low[v], discovered[w])
        if descended:
            continue
        stack.pop()
        if parent_edge is not None:
            u = graph.edge_map[parent_edge].other_end(v)
            low[u] = min(low[u], low[v])
            if low[v] > discovered[u]:
                bridges.add(parent_edge)
    return frozenset(bridges)


@dataclass(frozen=True)
class ConditionH:
    holds: bool
    compact: bool
    witness_edge: str | None = None
    witness_component: frozenset[str] = field(default_factory=frozenset)


def check_condition_H(graph: MetricGraph) -> ConditionH:
    """
    Condition (H): every cut-edge leaves a vertex at infinity on both sides.

    A compact graph never satisfies it. When it fails the first offending
    cut-edge (in graph order) is returned together with the vertex set of the
    component that has no vertex at infinity.
    """
    require_valid(graph)
    if not graph.infinity_vertices:
        return ConditionH(holds=False, compact=True)
    bridges = cut_edges(graph)
    for e in graph.edges:
        if e.id not in bridges:
            continue
        for side in (e.start, e.end):
            component = _component(graph, side, removed_edge=e.id)
            if not any(graph.vertex_map[v].at_infinity for v in component):
                logger.debug("condition (H) fails at cut-edge %s", e.id)
                return ConditionH(holds=False, compact=False, witness_edge=e.id, witness_component=component)
    return ConditionH(holds=True, compact=False)


@dataclass(frozen=True)
class PendantGraph:
    junction: str
    tip: str
    pendant: str
    half_lines: tuple[str, str]
    length: float

    def oriented_from_junction(self, graph: MetricGraph) -> bool:
        """ True when the pendant's own coordinate starts at the junction. """
        return graph.edge_map[self.pendant].start == self.junction


def pendant_structure(graph: MetricGraph) -> PendantGraph:
    """
    Two half-lines and one finite edge, all meeting at one junction; the
    finite edge ends at a degree-one tip.

    :raises TopologyError: for any other shape.
    """
    require_valid(graph)
    half = graph.half_lines
    finite = graph.finite_edges
    if len(half) != 2 or len(finite) != 1 or len(graph.finite_vertices) != 2:
        raise TopologyError("expected exactly two half-lines and one finite edge")
    junction = half[0].start
    pendant = finite[0]
    if half[1].start != junction or pendant.is_loop or junction not in (pendant.start, pendant.end):
        raise TopologyError("the half-lines and the pendant must share one junction vertex")
    tip = pendant.other_end(junction)
    if graph.degree(tip) != 1:
        raise TopologyError(f"pendant tip {tip!r} must have degree one")
    return PendantGraph(junction=junction, tip=tip, pendant=pendant.id,
                        half_lines=(half[0].id, half[1].id), length=float(pendant.length))


@dataclass(frozen=True)
class RadialMap:
    """ r = |offset + direction * x| along one edge. """
    offset: float
    direction: int

    def __call__(self, x):
        return np.abs(self.offset + self.direction * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Example1Match:
    kind: Example1Kind
    glue_points: tuple[float, ...] = ()
    chain: tuple[str, ...] = ()
    radial: Mapping[str, RadialMap] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.glue_points)

    def radial_coordinate(self, edge_id: str, x):
        """
        Position along the line obtained by folding the graph at its glue
        points: 0 at the north pole of the top bubble, a_n at the junction
        and a_n + x along either half-line.
        """
        if self.kind is Example1Kind.NONE:
            raise PreconditionError("graph is not a line, a tadpole or a tower of bubbles")
        return self.radial[edge_id](x)


def _same_length(a: float, b: float) -> bool:
    return abs(a - b) <= EQUAL_LENGTH_RTOL * max(abs(a), abs(b))


def recognize_example1(graph: MetricGraph) -> Example1Match:
    """
    Line, single bubble or tower of bubbles: two half-lines at a junction,
    then a chain of equal-length parallel pairs ending in a self-loop.

    Glue points are a_1 = (loop length)/2 and a_j = a_{j-1} + (pair length).

    :raises PreconditionError: if the graph is invalid or fails (H).
    :complexity: O(V + E)
    """
    if not check_condition_H(graph).holds:
        raise PreconditionError("family recognition needs a graph satisfying (H)")
    no_match = Example1Match(Example1Kind.NONE)
    half = graph.half_lines
    if len(half) != 2 or half[0].start != half[1].start:
        return no_match

    junction = half[0].start
    used = {e.id for e in half}
    chain = [junction]
    pairs: list[tuple[Edge, Edge]] = []
    loop: Edge | None = None
    walk = LinkedStack([junction])
    while not walk.is_empty():
        current = walk.pop()
        fresh = list(dict.fromkeys(eid for eid in graph.incidence[current] if eid not in used))
        if not fresh:
            break
        edges = [graph.edge_map[eid] for eid in fresh]
        if any(e.is_loop for e in edges):
            if len(edges) != 1:
                return no_match
            loop = edges[0]
            used.add(loop.id)
            break
        if len(edges) != 2:
            return no_match
        first, second = edges
        upper = first.other_end(current)
        if second.other_end(current) != upper or upper in chain or not _same_length(first.length, second.length):
            return no_match
        used.update((first.id, second.id))
        pairs.append((first, second))
        chain.append(upper)
        walk.push(upper)

    if len(used) != len(graph.edges) or len(chain) != len(graph.finite_vertices):
        return no_match
    if loop is None:
        if pairs:
            return no_match
        radial = {e.id: RadialMap(0.0, 1) for e in half}
        return Example1Match(Example1Kind.LINE, (), (junction,), radial)

    # chain runs junction -> top; glue points run top -> junction
    glue = [loop.length / 2.0]
    for first, _ in reversed(pairs):
        glue.append(glue[-1] + float(first.length))
    n = len(glue)

    radial = {e.id: RadialMap(glue[-1], 1) for e in half}
    radial[loop.id] = RadialMap(-glue[0], 1)
    for k, (first, second) in enumerate(pairs):
        far = chain[k + 1]
        near_glue, far_glue = glue[n - 1 - k], glue[n - 2 - k]
        for e in (first, second):
            radial[e.id] = RadialMap(far_glue, 1) if e.start == far else RadialMap(near_glue, -1)

    kind = Example1Kind.SINGLE_BUBBLE if n == 1 else Example1Kind.BUBBLE_TOWER
    logger.debug("folded-line graph with glue points %s", glue)
    return Example1Match(kind, tuple(glue), tuple(chain), radial)


def to_networkx(graph: MetricGraph, finite_only: bool = False) -> nx.MultiGraph:
    """ Multigraph keyed by edge id with the lengths as weights. """
    g = nx.MultiGraph()
    g.add_nodes_from(v.id for v in (graph.finite_vertices if finite_only else graph.vertices))
    for e in graph.edges:
        if finite_only and e.is_half_line:
            continue
        g.add_edge(e.start, e.end, key=e.id, weight=None if e.is_half_line else float(e.length))
    return g


def vertex_distances(graph: MetricGraph, source: str) -> dict[str, float]:
    """ Shortest-path distance from source to every finite vertex. """
    require_valid(graph)
    if source not in graph.vertex_map or graph.vertex_map[source].at_infinity:
        raise PreconditionError(f"{source!r} is not a finite vertex")
    return dict(nx.single_source_dijkstra_path_length(to_networkx(graph, finite_only=True), source,
                                                      weight="weight"))


def busiest_vertex(graph: MetricGraph) -> str:
    """ Finite vertex of largest degree, first in graph order on ties. """
    finite = graph.finite_vertices
    best = max(graph.degree(v.id) for v in finite)
    return next(v.id for v in finite if graph.degree(v.id) == best)
