"""
Decreasing, symmetric and hybrid rearrangements of nonnegative graph functions.

All three read the decreasing rearrangement u* off the exact distribution
function of u, then lay u* out on the target domain:

    decreasing  u*(x)        on [0, |G|)
    symmetric   u*(2|x|)     on (-|G|/2, |G|/2)
    hybrid      u*(l - x)    on the pendant, x measured from the junction,
                u*(l + 2|x|) on the two half-lines

The output mesh is built from the breakpoints of u*, so the outputs are
exactly equimeasurable with u (up to round-off).
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

import corpus
from constants import RearrangementMode
from errors import ParameterError, ThresholdNotFoundError, ZeroFunctionError
from graph_function import GraphFunction, MeshEdge, TruncatedMesh
from metric_graph import PendantGraph, pendant_structure

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RearrangementResult:
    mode: RearrangementMode
    source: GraphFunction
    output: GraphFunction
    tau: float | None = None
    two_preimages: bool | None = None
    already_shaped: bool | None = None

    @property
    def input_mass(self) -> float:
        return self.source.mass()

    @property
    def output_mass(self) -> float:
        return self.output.mass()

    @property
    def input_dirichlet(self) -> float:
        return self.source.dirichlet_integral()

    @property
    def output_dirichlet(self) -> float:
        return self.output.dirichlet_integral()

    def lp_pair(self, p: float) -> tuple[float, float]:
        return self.source.lp_norm_p(p), self.output.lp_norm_p(p)


@dataclass(frozen=True)
class EnergyAudit:
    mode: RearrangementMode
    p: float
    input_mass: float
    output_mass: float
    input_lp: float
    output_lp: float
    input_dirichlet: float
    output_dirichlet: float
    input_energy: float
    output_energy: float
    tau: float | None

    def summary(self) -> str:
        line = (f"mode={self.mode.value} mass={self.input_mass:.12g}->{self.output_mass:.12g} "
                f"dirichlet={self.input_dirichlet:.12g}->{self.output_dirichlet:.12g} "
                f"energy={self.input_energy:.12g}->{self.output_energy:.12g}")
        if self.tau is not None:
            line += f" tau={self.tau:.12g}"
        return line


def energy_audit(result: RearrangementResult, p: float) -> EnergyAudit:
    input_lp, output_lp = result.lp_pair(p)
    return EnergyAudit(
        mode=result.mode, p=p,
        input_mass=result.input_mass, output_mass=result.output_mass,
        input_lp=input_lp, output_lp=output_lp,
        input_dirichlet=result.input_dirichlet, output_dirichlet=result.output_dirichlet,
        input_energy=result.source.energy(p), output_energy=result.output.energy(p),
        tau=result.tau,
    )


class DecreasingProfile:
    """ u* as the polyline through its breakpoints. """

    def __init__(self, u: GraphFunction) -> None:
        self.xs, self.ts = u.levels.decreasing_profile()
        self.total = float(self.xs[-1])

    def __call__(self, x):
        return np.interp(x, self.xs, self.ts)


def _edge_coords(points: np.ndarray, length: float) -> np.ndarray:
    """ Sorted node coordinates on [0, length]: the given breakpoints plus both ends, at least two steps. """
    coords = np.unique(np.concatenate(([0.0], points[(points > 0) & (points < length)], [length])))
    gaps = np.diff(coords)
    coords = coords[np.concatenate(([True], gaps > 1e-12 * length))]
    coords[-1] = length
    if coords.size < 3:
        coords = np.unique(np.concatenate((coords, [0.5 * length])))
    return coords


def _checked_source(u: GraphFunction) -> GraphFunction:
    if np.any(u.values < 0):
        raise ParameterError("rearrangements need a nonnegative function")
    if not np.any(u.values > 0):
        raise ZeroFunctionError("rearrangement of the zero function")
    return u


class Rearrangement(ABC):
    """ One way of laying the decreasing rearrangement out on a target graph. """

    mode: RearrangementMode

    def apply(self, u: GraphFunction) -> RearrangementResult:
        u = _checked_source(u)
        profile = DecreasingProfile(u)
        result = self.build(u, profile)
        logger.debug("%s rearrangement: mass %.12g -> %.12g", self.mode.value, result.input_mass,
                     result.output_mass)
        return result

    @abstractmethod
    def build(self, u: GraphFunction, profile: DecreasingProfile) -> RearrangementResult:
        raise NotImplementedError()


class DecreasingRearrangement(Rearrangement):

    mode = RearrangementMode.DECREASING

    def build(self, u: GraphFunction, profile: DecreasingProfile) -> RearrangementResult:
        total = u.mesh.total_length
        if u.mesh.graph.is_compact:
            graph, edge_id = corpus.interval_graph(total), "segment"
        else:
            graph, edge_id = corpus.half_line_graph(), "ray"
        coords = _edge_coords(profile.xs, total)
        mesh = TruncatedMesh(graph, {edge_id: coords}, total)
        output = GraphFunction.from_profile(mesh, lambda m: profile(m.coords))
        return RearrangementResult(self.mode, u, output)


class SymmetricRearrangement(Rearrangement):

    mode = RearrangementMode.SYMMETRIC

    def build(self, u: GraphFunction, profile: DecreasingProfile) -> RearrangementResult:
        half = 0.5 * u.mesh.total_length
        graph = corpus.centered_interval_graph(half) if u.mesh.graph.is_compact else corpus.line_graph()
        coords = _edge_coords(0.5 * profile.xs, half)
        mesh = TruncatedMesh(graph, {e.id: coords for e in graph.edges}, half)
        output = GraphFunction.from_profile(mesh, lambda m: profile(2.0 * m.coords))
        return RearrangementResult(self.mode, u, output, two_preimages=u.has_two_preimages())


class HybridRearrangement(Rearrangement):
    """
    Pendant graph only. With tau chosen so that |{u > tau}| = l', the part of
    u above tau goes increasingly onto the pendant and the part below tau
    goes symmetric-decreasingly onto the two half-lines. Both pieces take the
    value tau at the junction.
    """

    mode = RearrangementMode.HYBRID

    def __init__(self, target_length: float | None = None) -> None:
        if target_length is not None and not target_length > 0:
            raise ParameterError(f"pendant length must be positive, got {target_length!r}")
        self.target_length = target_length

    def build(self, u: GraphFunction, profile: DecreasingProfile) -> RearrangementResult:
        source_graph = u.mesh.graph
        shape = pendant_structure(source_graph)
        ell = shape.length if self.target_length is None else float(self.target_length)
        tau = threshold_from_profile(u, profile, ell)
        graph = source_graph if ell == shape.length else source_graph.with_edge_length(shape.pendant, ell)

        line_length = 0.5 * (u.mesh.total_length - ell)
        half_coords = _edge_coords(0.5 * (profile.xs - ell), line_length)
        from_junction = shape.oriented_from_junction(graph)
        pendant_points = ell - profile.xs if from_junction else profile.xs
        coordinates = {shape.pendant: _edge_coords(pendant_points, ell)}
        coordinates.update({h: half_coords for h in shape.half_lines})
        mesh = TruncatedMesh(graph, coordinates, line_length)

        def lay_out(m: MeshEdge) -> np.ndarray:
            if m.half_line:
                return profile(2.0 * m.coords + ell)
            return profile(ell - m.coords) if from_junction else profile(m.coords)

        values = GraphFunction.from_profile(mesh, lay_out).values.copy()
        values[mesh.vertex_node[shape.junction]] = tau
        output = GraphFunction(mesh, values)
        return RearrangementResult(self.mode, u, output, tau=tau, already_shaped=_already_shaped(u, shape))


def _already_shaped(u: GraphFunction, shape: PendantGraph) -> bool:
    """ Increasing pendant sitting on an even, radially nonincreasing line part. """
    coords, psi = u.edge_values(shape.pendant)
    if not shape.oriented_from_junction(u.mesh.graph):
        psi = psi[::-1]
    first, second = (u.edge_values(h)[1] for h in shape.half_lines)
    return bool(np.all(np.diff(psi) >= 0) and np.all(np.diff(first) <= 0) and np.all(np.diff(second) <= 0)
                and np.array_equal(first, second) and psi.min() >= first.max())


def threshold_from_profile(u: GraphFunction, profile: DecreasingProfile, target: float) -> float:
    support = u.support_measure()
    if not 0 < target < support:
        raise ThresholdNotFoundError(f"no level has superlevel measure {target}; the support measures {support}")
    return float(profile(target))


def find_threshold(u: GraphFunction, target_measure: float) -> float:
    """
    The level tau with |{u > tau}| = target_measure.

    :raises ThresholdNotFoundError: target outside (0, |supp u|).
    """
    u = _checked_source(u)
    return threshold_from_profile(u, DecreasingProfile(u), target_measure)


def decreasing_rearrangement(u: GraphFunction) -> RearrangementResult:
    return DecreasingRearrangement().apply(u)


def symmetric_rearrangement(u: GraphFunction) -> RearrangementResult:
    return SymmetricRearrangement().apply(u)


def hybrid_rearrangement(u: GraphFunction, target_length: float | None = None) -> RearrangementResult:
    return HybridRearrangement(target_length).apply(u)


REARRANGEMENTS: dict[RearrangementMode, type[Rearrangement]] = {
    RearrangementMode.DECREASING: DecreasingRearrangement,
    RearrangementMode.SYMMETRIC: SymmetricRearrangement,
    RearrangementMode.HYBRID: HybridRearrangement,
}


def half_line_lower_bound(u: GraphFunction, p: float) -> float:
    """
    E(u*) on the half-line. It never exceeds E(u), and it is itself bounded
    below by half the energy of the soliton of twice the mass.
    """
    return decreasing_rearrangement(u.abs()).output.energy(p)

