"""
Named example graphs.

Every builder returns a fresh MetricGraph. Where a figure leaves lengths
unspecified the bounded edges get unit length.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from constants import INFINITE
from errors import ParameterError
from metric_graph import Edge, MetricGraph, Vertex


def _ray(edge_id: str, start: str, far: str) -> Edge:
    return Edge(edge_id, start, far, INFINITE)


def line_graph() -> MetricGraph:
    """ The real line as two half-lines glued at o. """
    return MetricGraph(
        (Vertex("o"), Vertex("inf_left", True), Vertex("inf_right", True)),
        (_ray("left", "o", "inf_left"), _ray("right", "o", "inf_right")),
    )


def half_line_graph() -> MetricGraph:
    return MetricGraph((Vertex("o"), Vertex("inf", True)), (_ray("ray", "o", "inf"),))


def interval_graph(length: float) -> MetricGraph:
    """ [0, length] as a single edge. """
    _positive("length", length)
    return MetricGraph((Vertex("o"), Vertex("end")), (Edge("segment", "o", "end", float(length)),))


def centered_interval_graph(half_length: float) -> MetricGraph:
    """ (-half_length, half_length) as two edges leaving the centre o. """
    _positive("half_length", half_length)
    return MetricGraph(
        (Vertex("o"), Vertex("end_left"), Vertex("end_right")),
        (Edge("left", "o", "end_left", float(half_length)), Edge("right", "o", "end_right", float(half_length))),
    )


def tadpole(loop_length: float = 2.0) -> MetricGraph:
    """ A self-loop and two half-lines at one vertex. """
    _positive("loop_length", loop_length)
    return MetricGraph(
        (Vertex("j"), Vertex("inf_1", True), Vertex("inf_2", True)),
        (_ray("h1", "j", "inf_1"), _ray("h2", "j", "inf_2"), Edge("loop", "j", "j", float(loop_length))),
    )


def bubble_tower(glue_points: tuple[float, ...] = (1.0, 2.0)) -> MetricGraph:
    """
    Tower of n bubbles for glue points a_1 < ... < a_n.

    x_1 carries a loop of length 2 a_1, x_{j-1} and x_j are joined by two
    parallel edges of length a_j - a_{j-1}, and the half-lines leave x_n.
    Vertices are listed from x_n upwards.
    """
    glue = [float(a) for a in glue_points]
    if not glue or glue[0] <= 0 or any(b <= a for a, b in zip(glue, glue[1:])):
        raise ParameterError(f"glue points must be positive and increasing, got {glue_points}")
    n = len(glue)
    names = [f"x{j}" for j in range(n, 0, -1)]
    vertices = [Vertex(name) for name in names] + [Vertex("inf_1", True), Vertex("inf_2", True)]
    edges = [_ray("h1", names[0], "inf_1"), _ray("h2", names[0], "inf_2")]
    for j in range(n, 1, -1):
        length = glue[j - 1] - glue[j - 2]
        edges.append(Edge(f"pair{j}a", f"x{j}", f"x{j - 1}", length))
        edges.append(Edge(f"pair{j}b", f"x{j - 1}", f"x{j}", length))
    edges.append(Edge("loop", "x1", "x1", 2.0 * glue[0]))
    return MetricGraph(tuple(vertices), tuple(edges))


def double_bridge(lengths: tuple[float, float] = (1.0, 1.0)) -> MetricGraph:
    """ Two vertices joined by two parallel edges, one half-line at each. """
    first, second = (float(v) for v in lengths)
    _positive("lengths", min(first, second))
    return MetricGraph(
        (Vertex("v1"), Vertex("v2"), Vertex("inf_1", True), Vertex("inf_2", True)),
        (_ray("h1", "v1", "inf_1"), _ray("h2", "v2", "inf_2"),
         Edge("b1", "v1", "v2", first), Edge("b2", "v1", "v2", second)),
    )


def pendant(length: float = 1.0) -> MetricGraph:
    """ Two half-lines and a terminal edge at one junction; fails (H) through the terminal edge. """
    _positive("length", length)
    return MetricGraph(
        (Vertex("j"), Vertex("tip"), Vertex("inf_1", True), Vertex("inf_2", True)),
        (_ray("h1", "j", "inf_1"), _ray("h2", "j", "inf_2"), Edge("pendant", "j", "tip", float(length))),
    )


def hexagon_with_rays() -> MetricGraph:
    """
    Five half-lines around a 2-edge-connected core of thirteen bounded edges,
    one of them a self-loop. The only cut-edges are the half-lines, so (H) holds.
    """
    ring = ["a", "b", "c", "d", "e", "f"]
    vertices = [Vertex(v) for v in ring] + [Vertex("g")] + [Vertex(f"inf_{k}", True) for k in range(1, 6)]
    edges = [Edge(f"ring_{u}{v}", u, v, 1.0) for u, v in zip(ring, ring[1:] + ring[:1])]
    edges += [Edge("chord_ad", "a", "d", 1.0), Edge("chord_be", "b", "e", 1.0), Edge("chord_cf", "c", "f", 1.0),
              Edge("ring_de_twin", "d", "e", 1.0), Edge("spur_ga", "g", "a", 1.0), Edge("spur_gb", "g", "b", 1.0),
              Edge("loop_g", "g", "g", 1.0)]
    edges += [_ray(f"h{k}", v, f"inf_{k}") for k, v in enumerate(["a", "c", "d", "e", "g"], start=1)]
    return MetricGraph(tuple(vertices), tuple(edges))


def dangling_path() -> MetricGraph:
    """ A line with a two-edge path hanging off it; fails (H) at the first edge of the path. """
    return MetricGraph(
        (Vertex("j"), Vertex("m"), Vertex("tip"), Vertex("inf_1", True), Vertex("inf_2", True)),
        (_ray("h1", "j", "inf_1"), _ray("h2", "j", "inf_2"),
         Edge("stem", "j", "m", 1.0), Edge("twig", "m", "tip", 1.0)),
    )


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ParameterError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    build: Callable[..., MetricGraph]
    description: str
    satisfies_H: bool

    def graph(self, **kwargs) -> MetricGraph:
        return self.build(**kwargs)


CORPUS: dict[str, CorpusEntry] = {entry.name: entry for entry in (
    CorpusEntry("line", line_graph, "the real line", True),
    CorpusEntry("half_line", half_line_graph, "a single half-line", False),
    CorpusEntry("tadpole", tadpole, "self-loop with two half-lines (single bubble)", True),
    CorpusEntry("bubble_tower", bubble_tower, "tower of bubbles, glue points (1, 2) by default", True),
    CorpusEntry("double_bridge", double_bridge, "two parallel bridges with a half-line at each end", True),
    CorpusEntry("pendant", pendant, "two half-lines and a pendant edge", False),
    CorpusEntry("fig2", hexagon_with_rays,
                "five half-lines, thirteen bounded edges, one self-loop", True),
    CorpusEntry("dangling_path", dangling_path, "a line with a hanging two-edge path", False),
)}


def builtin(name: str, **kwargs) -> MetricGraph:
    try:
        entry = CORPUS[name]
    except KeyError:
        raise ParameterError(f"unknown graph {name!r}; choose from {', '.join(sorted(CORPUS))}") from None
    return entry.graph(**kwargs)
