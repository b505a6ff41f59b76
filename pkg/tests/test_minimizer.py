import dataclasses
import unittest

import numpy as np

import corpus
import serialize
from constants import DEFAULT_L, Example1Kind, Verdict
from errors import GraphValidationError, ParameterError, PreconditionError
from graph_function import TruncatedMesh
from minimizer import (MinimizerConfig, escaping_sequence_energy, example1_exactness_check, mass_shares, minimize,
                       PendantCheck, pendant_structure_check, shifted_soliton, transported_soliton, verify_bounds,
                       verify_monotone, wrapped_soliton)
from soliton import ProblemParams, half_line_tail_mass, soliton_params, soliton_value
from test_utils.decorators import number, slow
from test_utils.timeout import timeout

SOLITON_ENERGY = -1.0 / 96.0


def quick(**changes) -> MinimizerConfig:
    """ Coarse settings for the default test run. """
    base = MinimizerConfig(h=0.1, truncation_length=40.0, max_iterations=2000, escape_start=False)
    return base.replace(**changes)


class TestConfig(unittest.TestCase):

    @number("5.1")
    def test_validation(self):
        self.assertRaises(ParameterError, lambda: MinimizerConfig(h=0.0))
        self.assertRaises(ParameterError, lambda: MinimizerConfig(truncation_length=-1.0))
        self.assertRaises(ParameterError, lambda: MinimizerConfig(backtracking=1.5))
        self.assertRaises(ParameterError, lambda: MinimizerConfig(optimism=0.5))
        self.assertRaises(ParameterError, lambda: MinimizerConfig(max_iterations=0))
        self.assertRaises(ParameterError, lambda: MinimizerConfig(problem=ProblemParams(6.5, 1.0)))
        self.assertEqual(MinimizerConfig().replace(h=0.5).h, 0.5)

    @number("5.23")
    def test_default_truncation_holds_the_soliton(self):
        self.assertEqual(MinimizerConfig().truncation_length, 40.0)
        tails = 2.0 * float(half_line_tail_mass(soliton_params(4.0), 1.0, DEFAULT_L))
        self.assertLess(tails, 1e-8)
        self.assertGreater(tails, 1e-10)


class TestStarts(unittest.TestCase):

    @number("5.2")
    def test_transported_soliton(self):
        params = soliton_params(4.0)
        for graph in (corpus.line_graph(), corpus.tadpole(), corpus.bubble_tower()):
            with self.subTest(graph=graph.edges[-1].id):
                u = transported_soliton(TruncatedMesh.build(graph, 0.02, 40.0), params, 1.0)
                self.assertAlmostEqual(u.mass(), 1.0, delta=1e-5)
                self.assertAlmostEqual(u.energy(4.0), SOLITON_ENERGY, delta=1e-5)
        with self.assertRaises(PreconditionError):
            transported_soliton(TruncatedMesh.build(corpus.double_bridge(), 0.1, 10.0), params, 1.0)

    @number("5.3")
    def test_wrapped_soliton_peaks_at_vertex(self):
        params = soliton_params(4.0)
        mesh = TruncatedMesh.build(corpus.double_bridge(), 0.1, 10.0)
        u = wrapped_soliton(mesh, params, 1.0, "v2")
        self.assertEqual(u.at_vertex("v2"), u.sup())
        self.assertAlmostEqual(u.at_vertex("v1"), float(soliton_value(params, 1.0, 1.0)), places=14)

    @number("5.4")
    def test_mass_shares(self):
        params = soliton_params(4.0)
        mesh = TruncatedMesh.build(corpus.double_bridge(), 0.05, 20.0)
        centred = wrapped_soliton(mesh, params, 1.0, "v1")
        escape, core = mass_shares(centred)
        self.assertLess(escape, 0.01)
        self.assertGreater(core, 0.7)
        parked = shifted_soliton(mesh, params, 1.0, "h1", 15.0)
        escape, core = mass_shares(parked)
        self.assertGreater(escape, 0.2)
        self.assertLess(core, 0.5)


class TestLine(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = minimize(corpus.line_graph(), quick())

    @number("5.5")
    @timeout(120)
    def test_soliton_is_found(self):
        params = soliton_params(4.0)
        report = self.report
        self.assertIs(report.verdict, Verdict.ATTAINED)
        self.assertAlmostEqual(report.energy, SOLITON_ENERGY, delta=2e-4)
        self.assertAlmostEqual(report.lambda_, 1.0 / 16.0, delta=1e-3)
        for edge_id in ("left", "right"):
            coords, values = report.u.edge_values(edge_id)
            self.assertLess(np.max(np.abs(values - soliton_value(params, 1.0, coords))), 1e-3)

    @number("5.6")
    def test_mass_and_monotone_history(self):
        report = self.report
        self.assertAlmostEqual(report.u.mass(), 1.0, places=12)
        self.assertTrue(verify_monotone(report))
        self.assertEqual(report.energy_history[-1], report.energy)

    @number("5.7")
    def test_bounds(self):
        report = self.report
        self.assertAlmostEqual(report.bounds[0], -1.0 / 24.0, places=14)
        self.assertAlmostEqual(report.bounds[1], SOLITON_ENERGY, places=14)
        self.assertTrue(verify_bounds(report))
        self.assertFalse(verify_bounds(dataclasses.replace(report, energy=-1.0)))
        with self.assertRaises(PreconditionError):
            verify_bounds(dataclasses.replace(report, graph=corpus.interval_graph(1.0)))

    @number("5.25")
    @timeout(120)
    def test_energies_settle_as_h_shrinks(self):
        energies = [minimize(corpus.line_graph(), quick(h=h)).energy for h in (0.2, 0.1, 0.05)]
        first, second = abs(energies[1] - energies[0]), abs(energies[2] - energies[1])
        self.assertLess(second, 0.5 * first)
        self.assertAlmostEqual(energies[-1], SOLITON_ENERGY, delta=1e-5)

    @number("5.8")
    def test_positive_away_from_truncation(self):
        u = self.report.u
        interior = ~u.mesh.dirichlet
        self.assertGreater(u.values[interior].min(), 0.0)


class TestEscapingSequence(unittest.TestCase):

    @number("5.9")
    def test_profile_lives_on_one_half_line(self):
        config = MinimizerConfig(h=0.05, truncation_length=80.0)
        far = escaping_sequence_energy(corpus.double_bridge(), 40.0, config)
        for graph in (corpus.line_graph(), corpus.pendant(1.0)):
            with self.subTest(graph=graph.edges[-1].id):
                self.assertAlmostEqual(escaping_sequence_energy(graph, 40.0, config), far, delta=1e-12)
        self.assertGreater(escaping_sequence_energy(corpus.double_bridge(), 2.0, config), far)
        params = soliton_params(4.0)
        mesh = TruncatedMesh.build(corpus.double_bridge(), 0.05, 80.0)
        u = shifted_soliton(mesh, params, 1.0, "h1", 5.0, cutoff=20.0)
        for m in mesh.edges:
            if m.edge_id != "h1":
                self.assertFalse(np.any(u.values[m.nodes]), m.edge_id)

    @number("5.10")
    def test_wider_cutoff_gets_closer(self):
        config = MinimizerConfig(h=0.05, truncation_length=80.0)
        energies = [escaping_sequence_energy(corpus.double_bridge(), 40.0, config, cutoff=r) for r in (10, 20, 30)]
        self.assertGreater(energies[0], energies[1])
        self.assertGreater(energies[1], energies[2])
        self.assertGreater(energies[2], SOLITON_ENERGY - 2e-5)

    @number("5.11")
    def test_converges_to_soliton_energy(self):
        config = MinimizerConfig(h=0.05, truncation_length=120.0)
        energy = escaping_sequence_energy(corpus.double_bridge(), 60.0, config, cutoff=50.0)
        self.assertAlmostEqual(energy, SOLITON_ENERGY, delta=1e-4)

    @number("5.12")
    def test_rejected_inputs(self):
        config = MinimizerConfig(h=0.1, truncation_length=30.0)
        graph = corpus.double_bridge()
        self.assertRaises(ParameterError, lambda: escaping_sequence_energy(graph, 5.0, config, cutoff=0.0))
        self.assertRaises(ParameterError, lambda: escaping_sequence_energy(graph, -1.0, config))
        self.assertRaises(ParameterError, lambda: escaping_sequence_energy(graph, 0.0, config))
        self.assertRaises(ParameterError, lambda: escaping_sequence_energy(graph, 20.0, config, cutoff=20.0))
        self.assertRaises(PreconditionError, lambda: escaping_sequence_energy(corpus.interval_graph(3.0), 5.0, config))

    @number("5.22")
    def test_energies_fall_as_the_shift_grows(self):
        config = MinimizerConfig(h=0.02, truncation_length=60.0)
        energies = [escaping_sequence_energy(corpus.double_bridge(), s, config) for s in (2.0, 5.0, 10.0, 20.0, 30.0)]
        for before, after in zip(energies, energies[1:]):
            self.assertLessEqual(after, before + 1e-12)
        self.assertGreater(energies[0] - energies[2], 1e-4)
        self.assertAlmostEqual(energies[-1], energies[-2], delta=1e-12)
        self.assertAlmostEqual(energies[-1], SOLITON_ENERGY, delta=1e-4)


class TestPreconditions(unittest.TestCase):

    @number("5.13")
    def test_example_family_only(self):
        self.assertRaises(PreconditionError, lambda: example1_exactness_check(corpus.pendant(), quick()))
        self.assertRaises(PreconditionError, lambda: example1_exactness_check(corpus.double_bridge(), quick()))

    @number("5.14")
    def test_pendant_check_needs_pendant_and_attained(self):
        report = minimize(corpus.tadpole(), quick(truncation_length=20.0, max_iterations=50))
        self.assertRaises(PreconditionError, lambda: pendant_structure_check(report))
        pendant = minimize(corpus.pendant(), quick(truncation_length=20.0, max_iterations=50))
        self.assertRaises(PreconditionError,
                          lambda: pendant_structure_check(dataclasses.replace(pendant, verdict=Verdict.INCONCLUSIVE)))

    @number("5.15")
    def test_invalid_graph(self):
        graph = serialize.load_graph_file("graphs/bad_infinity_degree.json")
        self.assertRaises(GraphValidationError, lambda: minimize(graph, quick()))
        self.assertRaises(GraphValidationError, lambda: escaping_sequence_energy(graph, 0.0, quick()))

    @number("5.24")
    def test_pendant_check_verdict(self):
        good = PendantCheck(pendant_increasing=True, tip_is_max=True, half_line_asymmetry=0.0, fit_rms=1e-5,
                            fitted_mass=1.2, fitted_shift=0.4, half_line_slopes=(-0.02, -0.02), pendant_slope=0.04,
                            kirchhoff_sum=1e-4, mu=1.0)
        self.assertTrue(good.passed)
        self.assertFalse(dataclasses.replace(good, fitted_mass=0.9).passed)
        self.assertFalse(dataclasses.replace(good, kirchhoff_sum=0.02).passed)
        self.assertFalse(dataclasses.replace(good, pendant_slope=-0.01).passed)


class TestPendantQuick(unittest.TestCase):

    @number("5.16")
    @timeout(300)
    def test_below_soliton_energy_with_hybrid_steps(self):
        report = minimize(corpus.pendant(1.0), quick(h=0.05, truncation_length=30.0, max_iterations=3000,
                                                     use_hybrid_rearrangement=True))
        self.assertTrue(verify_monotone(report))
        self.assertLess(report.energy, SOLITON_ENERGY - 3e-5)
        self.assertGreater(report.energy, -1.0 / 24.0)
        self.assertGreater(report.hybrid_accepted + report.hybrid_rejected, 0)


class TestReferenceRuns(unittest.TestCase):
    """ Finer meshes; run with --slow. """

    @slow()
    @number("5.17")
    def test_line(self):
        report = minimize(corpus.line_graph(), MinimizerConfig(h=0.01, truncation_length=40.0))
        self.assertIs(report.verdict, Verdict.ATTAINED)
        self.assertAlmostEqual(report.energy, SOLITON_ENERGY, delta=2e-4)
        self.assertTrue(verify_bounds(report))

    @slow()
    @number("5.18")
    def test_tadpole_and_tower(self):
        config = MinimizerConfig(h=0.02, truncation_length=40.0)
        for graph, kind in ((corpus.tadpole(2.0), Example1Kind.SINGLE_BUBBLE),
                            (corpus.bubble_tower((1.0, 2.0)), Example1Kind.BUBBLE_TOWER)):
            with self.subTest(kind=kind.name):
                deviation = example1_exactness_check(graph, config)
                self.assertIs(deviation.kind, kind)
                self.assertLessEqual(deviation.energy_deviation, 2e-4)
                self.assertLessEqual(deviation.wrap_deviation, 1e-3)
                self.assertIs(deviation.report.verdict, Verdict.ATTAINED)

    @slow()
    @number("5.19")
    def test_pendant_ground_state(self):
        report = minimize(corpus.pendant(1.0), MinimizerConfig(h=0.02, truncation_length=30.0))
        self.assertIs(report.verdict, Verdict.ATTAINED)
        self.assertLess(report.energy, SOLITON_ENERGY - 3e-5)
        self.assertTrue(verify_bounds(report))
        check = pendant_structure_check(report)
        self.assertTrue(check.passed, check)
        self.assertGreater(check.fitted_mass, 1.0)
        self.assertLess(abs(check.kirchhoff_sum), 5e-3)

    @slow()
    @number("5.20")
    def test_longer_pendant_is_lower(self):
        config = MinimizerConfig(h=0.02, truncation_length=30.0)
        energies = [minimize(corpus.pendant(ell), config).energy for ell in (0.5, 1.0, 2.0)]
        self.assertGreater(energies[0] - energies[1], 5e-6)
        self.assertGreater(energies[1] - energies[2], 5e-6)

    @slow()
    @number("5.21")
    def test_double_bridge_escapes(self):
        config = MinimizerConfig(h=0.05, truncation_length=20.0, doubling_check=True)
        report = minimize(corpus.double_bridge(), config)
        self.assertIs(report.verdict, Verdict.ESCAPING)
        self.assertGreater(report.energy, SOLITON_ENERGY)
        self.assertLess(report.doubled_energy, report.energy)


if __name__ == '__main__':
    unittest.main()
