import unittest

import networkx as nx
from hypothesis import given, settings, strategies as st

import corpus
import serialize
from constants import INFINITE, Example1Kind
from errors import GraphValidationError, PreconditionError, TopologyError
from metric_graph import (Edge, MetricGraph, Vertex, busiest_vertex, check_condition_H, cut_edges,
                          pendant_structure, recognize_example1, to_networkx, total_length, validate,
                          vertex_distances)
from test_utils.decorators import number


@st.composite
def connected_multigraphs(draw):
    """ Random connected loop-free multigraphs: a random tree plus a few extra (possibly parallel) edges. """
    n = draw(st.integers(2, 7))
    pairs = [(k, draw(st.integers(0, k - 1))) for k in range(1, n)]
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1]),
                          max_size=6))
    pairs += extra
    vertices = tuple(Vertex(f"v{k}") for k in range(n))
    edges = tuple(Edge(f"e{k}", f"v{a}", f"v{b}", 1.0) for k, (a, b) in enumerate(pairs))
    return MetricGraph(vertices, edges)


@st.composite
def graphs_with_rays(draw):
    """ A random connected multigraph with up to four half-lines hung on random vertices. """
    core = draw(connected_multigraphs())
    anchors = draw(st.lists(st.integers(0, len(core.vertices) - 1), max_size=4))
    rays = tuple(Vertex(f"inf_{k}", True) for k in range(len(anchors)))
    half_lines = tuple(Edge(f"h{k}", f"v{a}", f"inf_{k}", INFINITE) for k, a in enumerate(anchors))
    return MetricGraph(core.vertices + rays, core.edges + half_lines)


def networkx_bridges(graph: MetricGraph) -> frozenset:
    g = to_networkx(graph)
    found = set()
    for u, v in nx.bridges(g):
        found.update(g[u][v])
    return frozenset(found)


class TestValidation(unittest.TestCase):

    @number("1.1")
    def test_corpus_is_valid(self):
        for name in corpus.CORPUS:
            with self.subTest(graph=name):
                self.assertEqual(validate(corpus.builtin(name)), [])

    @number("1.2")
    def test_vertex_at_infinity_of_degree_two(self):
        graph = serialize.load_graph_file("graphs/bad_infinity_degree.json")
        rules = [(v.rule, v.subject) for v in validate(graph)]
        self.assertEqual(rules, [("infinity-degree-one", "inf")])

    @number("1.3")
    def test_all_violations_are_listed(self):
        graph = MetricGraph(
            (Vertex("a"), Vertex("b"), Vertex("c"), Vertex("inf", True)),
            (Edge("e", "a", "b", -1.0), Edge("e", "a", "b", 1.0), Edge("r", "inf", "a", INFINITE),
             Edge("x", "a", "nowhere", 1.0)),
        )
        rules = {v.rule for v in validate(graph)}
        self.assertEqual(rules, {"positive-length", "unique-edge-id", "half-line-orientation", "known-endpoint"})

    @number("1.4")
    def test_disconnected(self):
        graph = MetricGraph(
            (Vertex("a"), Vertex("b"), Vertex("c"), Vertex("d")),
            (Edge("ab", "a", "b", 1.0), Edge("cd", "c", "d", 1.0)),
        )
        self.assertEqual([v.rule for v in validate(graph)], ["connected"])
        with self.assertRaises(GraphValidationError) as caught:
            cut_edges(graph)
        self.assertEqual(len(caught.exception.violations), 1)

    @number("1.5")
    def test_empty_graph(self):
        rules = [v.rule for v in validate(MetricGraph((), ()))]
        self.assertEqual(rules, ["nonempty", "nonempty"])

    @number("1.6")
    def test_total_length(self):
        self.assertIs(total_length(corpus.pendant()), INFINITE)
        self.assertAlmostEqual(total_length(corpus.interval_graph(2.5)), 2.5)
        self.assertAlmostEqual(total_length(corpus.centered_interval_graph(1.5)), 3.0)


class TestCutEdges(unittest.TestCase):

    @number("1.7")
    def test_corpus_cut_edges(self):
        self.assertEqual(cut_edges(corpus.pendant()), {"h1", "h2", "pendant"})
        self.assertEqual(cut_edges(corpus.tadpole()), {"h1", "h2"})
        self.assertEqual(cut_edges(corpus.double_bridge()), {"h1", "h2"})
        self.assertEqual(cut_edges(corpus.bubble_tower()), {"h1", "h2"})
        self.assertEqual(cut_edges(corpus.hexagon_with_rays()), {"h1", "h2", "h3", "h4", "h5"})
        self.assertEqual(cut_edges(corpus.dangling_path()), {"h1", "h2", "stem", "twig"})

    @number("1.8")
    def test_parallel_copy_is_not_a_cut_edge(self):
        graph = MetricGraph((Vertex("a"), Vertex("b")), (Edge("e1", "a", "b", 1.0), Edge("e2", "b", "a", 2.0)))
        self.assertEqual(cut_edges(graph), frozenset())

    @number("1.9")
    @settings(max_examples=60, deadline=None)
    @given(connected_multigraphs())
    def test_matches_networkx(self, graph):
        self.assertEqual(cut_edges(graph), networkx_bridges(graph))

    @number("1.10")
    def test_long_chain_does_not_recurse(self):
        n = 5000
        vertices = tuple(Vertex(f"v{k}") for k in range(n))
        edges = tuple(Edge(f"e{k}", f"v{k}", f"v{k + 1}", 1.0) for k in range(n - 1))
        self.assertEqual(len(cut_edges(MetricGraph(vertices, edges))), n - 1)


class TestConditionH(unittest.TestCase):

    @number("1.11")
    def test_corpus_flags(self):
        for name, entry in corpus.CORPUS.items():
            with self.subTest(graph=name):
                self.assertEqual(check_condition_H(entry.graph()).holds, entry.satisfies_H)

    @number("1.25")
    def test_hexagon_builtin(self):
        graph = corpus.builtin("fig2")
        self.assertEqual(len(graph.half_lines), 5)
        self.assertEqual(sum(1 for e in graph.edges if not e.is_half_line), 13)
        self.assertEqual(sum(1 for e in graph.edges if e.is_loop), 1)
        self.assertTrue(check_condition_H(graph).holds)

    @number("1.26")
    @settings(max_examples=100, deadline=None)
    @given(graphs_with_rays())
    def test_condition_needs_two_ends_at_infinity(self, graph):
        if check_condition_H(graph).holds:
            self.assertGreaterEqual(len(graph.infinity_vertices), 2)

    @number("1.12")
    def test_pendant_witness(self):
        result = check_condition_H(corpus.pendant())
        self.assertFalse(result.holds)
        self.assertFalse(result.compact)
        self.assertEqual(result.witness_edge, "pendant")
        self.assertEqual(result.witness_component, {"tip"})

    @number("1.13")
    def test_dangling_path_witness(self):
        result = check_condition_H(corpus.dangling_path())
        self.assertEqual(result.witness_edge, "stem")
        self.assertEqual(result.witness_component, {"m", "tip"})

    @number("1.14")
    def test_compact_graph_fails(self):
        result = check_condition_H(corpus.interval_graph(1.0))
        self.assertFalse(result.holds)
        self.assertTrue(result.compact)
        self.assertIsNone(result.witness_edge)


class TestExample1Family(unittest.TestCase):

    @number("1.15")
    def test_line(self):
        match = recognize_example1(corpus.line_graph())
        self.assertIs(match.kind, Example1Kind.LINE)
        self.assertEqual(match.n, 0)
        self.assertAlmostEqual(float(match.radial_coordinate("left", 2.5)), 2.5)

    @number("1.16")
    def test_tadpole(self):
        match = recognize_example1(corpus.tadpole(loop_length=2.0))
        self.assertIs(match.kind, Example1Kind.SINGLE_BUBBLE)
        self.assertEqual(match.glue_points, (1.0,))
        # the north pole of the bubble sits at radius 0, the junction at radius a_1
        self.assertAlmostEqual(float(match.radial_coordinate("loop", 1.0)), 0.0)
        self.assertAlmostEqual(float(match.radial_coordinate("loop", 0.0)), 1.0)
        self.assertAlmostEqual(float(match.radial_coordinate("loop", 2.0)), 1.0)
        self.assertAlmostEqual(float(match.radial_coordinate("h2", 3.0)), 4.0)

    @number("1.17")
    def test_bubble_tower(self):
        match = recognize_example1(corpus.bubble_tower((1.0, 2.0)))
        self.assertIs(match.kind, Example1Kind.BUBBLE_TOWER)
        self.assertEqual(match.glue_points, (1.0, 2.0))
        self.assertEqual(match.chain, ("x2", "x1"))
        for edge_id in ("pair2a", "pair2b"):
            edge = corpus.bubble_tower().edge_map[edge_id]
            at_x1 = 0.0 if edge.start == "x1" else 1.0
            at_x2 = 1.0 - at_x1
            self.assertAlmostEqual(float(match.radial_coordinate(edge_id, at_x1)), 1.0)
            self.assertAlmostEqual(float(match.radial_coordinate(edge_id, at_x2)), 2.0)
        self.assertAlmostEqual(float(match.radial_coordinate("h1", 0.5)), 2.5)

    @number("1.18")
    def test_three_bubbles(self):
        match = recognize_example1(corpus.bubble_tower((0.5, 1.25, 3.0)))
        self.assertIs(match.kind, Example1Kind.BUBBLE_TOWER)
        self.assertEqual(match.n, 3)
        for found, expected in zip(match.glue_points, (0.5, 1.25, 3.0)):
            self.assertAlmostEqual(found, expected)

    @number("1.19")
    def test_relabeling_and_swapping(self):
        graph = corpus.bubble_tower((1.0, 2.0))
        names = {"x2": "top", "x1": "bottom", "inf_1": "far_1", "inf_2": "far_2"}
        vertices = tuple(Vertex(names[v.id], v.at_infinity) for v in reversed(graph.vertices))
        edges = tuple(Edge("z_" + e.id, names[e.start], names[e.end], e.length) for e in reversed(graph.edges))
        match = recognize_example1(MetricGraph(vertices, edges))
        self.assertIs(match.kind, Example1Kind.BUBBLE_TOWER)
        self.assertEqual(match.glue_points, (1.0, 2.0))

    @number("1.20")
    def test_not_in_family(self):
        self.assertIs(recognize_example1(corpus.double_bridge()).kind, Example1Kind.NONE)
        self.assertIs(recognize_example1(corpus.hexagon_with_rays()).kind, Example1Kind.NONE)
        unequal = corpus.bubble_tower((1.0, 2.0)).with_edge_length("pair2b", 1.5)
        self.assertIs(recognize_example1(unequal).kind, Example1Kind.NONE)
        with self.assertRaises(PreconditionError):
            recognize_example1(corpus.pendant())

    @number("1.21")
    def test_unmatched_radial_coordinate(self):
        match = recognize_example1(corpus.double_bridge())
        with self.assertRaises(PreconditionError):
            match.radial_coordinate("b1", 0.0)


class TestGraphHelpers(unittest.TestCase):

    @number("1.22")
    def test_pendant_structure(self):
        shape = pendant_structure(corpus.pendant(2.0))
        self.assertEqual((shape.junction, shape.tip, shape.pendant), ("j", "tip", "pendant"))
        self.assertEqual(shape.half_lines, ("h1", "h2"))
        self.assertEqual(shape.length, 2.0)
        self.assertTrue(shape.oriented_from_junction(corpus.pendant()))
        with self.assertRaises(TopologyError):
            pendant_structure(corpus.tadpole())

    @number("1.23")
    def test_distances_and_busiest_vertex(self):
        graph = corpus.bubble_tower((1.0, 2.0))
        self.assertEqual(vertex_distances(graph, "x2"), {"x2": 0.0, "x1": 1.0})
        self.assertEqual(busiest_vertex(graph), "x2")
        self.assertEqual(busiest_vertex(corpus.pendant()), "j")
        with self.assertRaises(PreconditionError):
            vertex_distances(graph, "inf_1")

    @number("1.24")
    def test_with_edge_length(self):
        graph = corpus.pendant(1.0).with_edge_length("pendant", 3.0)
        self.assertEqual(graph.edge_map["pendant"].length, 3.0)
        with self.assertRaises(TopologyError):
            graph.with_edge_length("h1", 1.0)


if __name__ == '__main__':
    unittest.main()
