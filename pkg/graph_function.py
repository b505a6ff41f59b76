"""
Continuous piecewise-linear functions on a truncated metric graph.

Every finite edge is meshed as it is; every half-line is cut at the
truncation length L and its far node is held at zero. Nodes at a vertex are
shared by all incident edges, which is what makes the functions continuous.

Mass and the Dirichlet integral are integrated exactly for P1 elements,
|u|^p by three-point Gauss-Legendre per interval (exact for p = 4).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse

from constants import DEFAULT_L
from errors import AmbiguousLevelError, ParameterError, PreconditionError, ZeroFunctionError
from metric_graph import MetricGraph, require_valid

logger = logging.getLogger(__name__)

_GAUSS_X, _GAUSS_W = leggauss(3)
GAUSS_POINTS = 0.5 * (_GAUSS_X + 1.0)
GAUSS_WEIGHTS = 0.5 * _GAUSS_W

# relative spacing under which two breakpoints are merged
_MERGE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class MeshEdge:
    edge_id: str
    start_vertex: str
    end_vertex: str
    nodes: np.ndarray
    coords: np.ndarray
    half_line: bool

    @property
    def length(self) -> float:
        return float(self.coords[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.coords)


class TruncatedMesh:
    """
    P1 mesh of a metric graph.

    Attributes:
        graph: the graph being meshed
        h: largest step
        truncation_length: the length L every half-line is cut at
        edges: one MeshEdge per graph edge, in graph order
        vertex_node: global node index of every finite vertex
        dirichlet: boolean mask of the far nodes of the half-lines
        left, right, steps: the intervals as node pairs and lengths
    """

    def __init__(self, graph: MetricGraph, coordinates: Mapping[str, np.ndarray], truncation_length: float) -> None:
        require_valid(graph)
        self.graph = graph
        self.truncation_length = float(truncation_length)
        self.vertex_node = {v.id: k for k, v in enumerate(graph.finite_vertices)}
        count = len(self.vertex_node)
        dirichlet: list[int] = []
        edges = []
        for e in graph.edges:
            coords = np.asarray(coordinates[e.id], dtype=float)
            expected = self.truncation_length if e.is_half_line else float(e.length)
            if coords.ndim != 1 or coords.size < 3 or coords[0] != 0.0 or np.any(np.diff(coords) <= 0) \
                    or not math.isclose(coords[-1], expected, rel_tol=1e-12, abs_tol=1e-12):
                raise ParameterError(f"edge {e.id!r} needs at least two increasing steps from 0 to {expected}")
            coords = coords.copy()
            coords[-1] = expected
            inner = np.arange(count, count + coords.size - 2)
            count += coords.size - 2
            if e.is_half_line:
                far = count
                count += 1
                dirichlet.append(far)
            else:
                far = self.vertex_node[e.end]
            nodes = np.concatenate(([self.vertex_node[e.start]], inner, [far])).astype(int)
            coords.setflags(write=False)
            nodes.setflags(write=False)
            edges.append(MeshEdge(e.id, e.start, e.end, nodes, coords, e.is_half_line))
        self.edges: tuple[MeshEdge, ...] = tuple(edges)
        self.edge_index = {m.edge_id: m for m in self.edges}
        self.n_nodes = count
        self.dirichlet = np.zeros(count, dtype=bool)
        self.dirichlet[dirichlet] = True
        self.left = np.concatenate([m.nodes[:-1] for m in self.edges])
        self.right = np.concatenate([m.nodes[1:] for m in self.edges])
        self.steps = np.concatenate([m.steps for m in self.edges])
        self.h = float(self.steps.max())

    @classmethod
    def build(cls, graph: MetricGraph, h: float, truncation_length: float = DEFAULT_L) -> TruncatedMesh:
        """ Uniform-ish mesh: every edge gets max(2, ceil(length/h)) equal steps. """
        if not (h > 0 and math.isfinite(h)):
            raise ParameterError(f"mesh size must be positive, got {h!r}")
        if not (truncation_length > 0 and math.isfinite(truncation_length)):
            raise ParameterError(f"truncation length must be positive, got {truncation_length!r}")
        require_valid(graph)
        coordinates = {}
        for e in graph.edges:
            length = truncation_length if e.is_half_line else float(e.length)
            steps = max(2, math.ceil(length / h - 1e-9))
            coordinates[e.id] = np.linspace(0.0, length, steps + 1)
        mesh = cls(graph, coordinates, truncation_length)
        logger.debug("mesh with %d nodes, h=%g, L=%g", mesh.n_nodes, mesh.h, truncation_length)
        return mesh

    @classmethod
    def from_coordinates(cls, graph: MetricGraph, coordinates: Mapping[str, np.ndarray],
                         truncation_length: float | None = None) -> TruncatedMesh:
        """ Mesh with the given node coordinates along every edge; L is read off the half-lines if omitted. """
        if truncation_length is None:
            ends = {float(coordinates[e.id][-1]) for e in graph.half_lines}
            if len(ends) > 1:
                raise ParameterError("all half-lines must be truncated at the same length")
            truncation_length = ends.pop() if ends else DEFAULT_L
        return cls(graph, coordinates, truncation_length)

    @property
    def total_length(self) -> float:
        return float(self.steps.sum())

    @cached_property
    def stiffness(self) -> sparse.csr_matrix:
        w = 1.0 / self.steps
        return self._assemble(w, -w, w)

    @cached_property
    def mass_matrix(self) -> sparse.csr_matrix:
        return self._assemble(self.steps / 3.0, self.steps / 6.0, self.steps / 3.0)

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        return np.bincount(self.left, self.steps / 2.0, self.n_nodes) + \
            np.bincount(self.right, self.steps / 2.0, self.n_nodes)

    def _assemble(self, diag_left, off, diag_right) -> sparse.csr_matrix:
        rows = np.concatenate([self.left, self.left, self.right, self.right])
        cols = np.concatenate([self.left, self.right, self.left, self.right])
        data = np.concatenate([diag_left, off, off, diag_right])
        return sparse.coo_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_nodes)).tocsr()

    def interior_nodes(self) -> np.ndarray:
        """ Mask of the nodes neither on nor next to a Dirichlet far node; all free nodes if that leaves none. """
        touching = self.dirichlet[self.left] | self.dirichlet[self.right]
        near = self.dirichlet.copy()
        near[self.left[touching]] = True
        near[self.right[touching]] = True
        return ~near if np.any(~near) else ~self.dirichlet

    def edge_of_interval(self) -> np.ndarray:
        """ Position in self.edges of every interval. """
        return np.repeat(np.arange(len(self.edges)), [m.coords.size - 1 for m in self.edges])

    def interval_midpoints(self) -> np.ndarray:
        """ Coordinate of every interval midpoint along its own edge. """
        return np.concatenate([0.5 * (m.coords[:-1] + m.coords[1:]) for m in self.edges])


@dataclass(frozen=True)
class OptimalityResiduals:
    el_residual: float
    kirchhoff_residual: float
    lambda_: float
    vertex_residuals: Mapping[str, float]


@dataclass(frozen=True, eq=False)
class GraphFunction:
    mesh: TruncatedMesh
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.mesh.n_nodes,):
            raise ParameterError(f"expected {self.mesh.n_nodes} nodal values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("nodal values must be finite")
        values[self.mesh.dirichlet] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, mesh: TruncatedMesh) -> GraphFunction:
        return cls(mesh, np.zeros(mesh.n_nodes))

    @classmethod
    def from_profile(cls, mesh: TruncatedMesh, profile: Callable[[MeshEdge], np.ndarray]) -> GraphFunction:
        """ Nodal values edge by edge; profile gets a MeshEdge and returns values at its coords. """
        values = np.zeros(mesh.n_nodes)
        for m in mesh.edges:
            values[m.nodes] = profile(m)
        return cls(mesh, values)

    def with_values(self, values: np.ndarray) -> GraphFunction:
        return GraphFunction(self.mesh, values)

    def edge_values(self, edge_id: str) -> tuple[np.ndarray, np.ndarray]:
        m = self.mesh.edge_index[edge_id]
        return m.coords, self.values[m.nodes]

    def at_vertex(self, vertex_id: str) -> float:
        return float(self.values[self.mesh.vertex_node[vertex_id]])

    def _ends(self) -> tuple[np.ndarray, np.ndarray]:
        return self.values[self.mesh.left], self.values[self.mesh.right]

    def _gauss_values(self) -> np.ndarray:
        a, b = self._ends()
        return a[:, None] + (b - a)[:, None] * GAUSS_POINTS[None, :]

    def interval_masses(self) -> np.ndarray:
        a, b = self._ends()
        return self.mesh.steps * (a * a + a * b + b * b) / 3.0

    def mass(self) -> float:
        return float(self.interval_masses().sum())

    def lp_norm_p(self, p: float) -> float:
        """ Integral of |u|^p. """
        q = np.abs(self._gauss_values()) ** p
        return float(self.mesh.steps @ (q @ GAUSS_WEIGHTS))

    def dirichlet_integral(self) -> float:
        a, b = self._ends()
        return float(np.sum((b - a) ** 2 / self.mesh.steps))

    def energy(self, p: float) -> float:
        """ E(u) = 1/2 int |u'|^2 - 1/p int |u|^p. """
        return 0.5 * self.dirichlet_integral() - self.lp_norm_p(p) / p

    def sup(self) -> float:
        return float(self.values.max())

    def support_measure(self) -> float:
        """ Measure of {u > 0}, exact for piecewise-linear u. """
        return float(self.distribution_function(0.0))

    def energy_gradient(self, p: float) -> GraphFunction:
        """ Derivative of E with respect to the nodal values; zero on the Dirichlet nodes. """
        mesh = self.mesh
        q = self._gauss_values()
        force = np.abs(q) ** (p - 2.0) * q * GAUSS_WEIGHTS[None, :] * mesh.steps[:, None]
        load = np.bincount(mesh.left, force @ (1.0 - GAUSS_POINTS), mesh.n_nodes) + \
            np.bincount(mesh.right, force @ GAUSS_POINTS, mesh.n_nodes)
        return GraphFunction(mesh, mesh.stiffness @ self.values - load)

    def mass_gradient(self) -> GraphFunction:
        return GraphFunction(self.mesh, 2.0 * (self.mesh.mass_matrix @ self.values))

    def abs(self) -> GraphFunction:
        return GraphFunction(self.mesh, np.abs(self.values))

    def scaled_to_mass(self, mu: float) -> GraphFunction:
        mass = self.mass()
        if mass <= 0:
            raise ZeroFunctionError("cannot rescale the zero function to a positive mass")
        return GraphFunction(self.mesh, self.values * math.sqrt(mu / mass))

    def resample(self, mesh: TruncatedMesh) -> GraphFunction:
        """ Linear interpolation onto another mesh of the same graph; zero past the old truncation. """
        if mesh.graph != self.mesh.graph:
            raise PreconditionError("resampling needs both meshes on the same graph")

        def onto(target: MeshEdge) -> np.ndarray:
            coords, values = self.edge_values(target.edge_id)
            return np.interp(target.coords, coords, values, right=0.0 if target.half_line else values[-1])

        return GraphFunction.from_profile(mesh, onto)

    @cached_property
    def levels(self) -> LevelTable:
        return LevelTable.of(self)

    def distribution_function(self, t) -> float | np.ndarray:
        """ rho(t) = |{u > t}|, exact for piecewise-linear u. """
        a, b = self._ends()
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        t = np.asarray(t, float)
        span = np.where(hi > lo, hi - lo, 1.0)
        frac = np.clip((hi[None, :] - t.reshape(-1, 1)) / span[None, :], 0.0, 1.0)
        frac = np.where((hi > lo)[None, :], frac, (lo[None, :] > t.reshape(-1, 1)).astype(float))
        rho = frac @ self.mesh.steps
        return float(rho[0]) if t.ndim == 0 else rho.reshape(t.shape)

    def count_preimages(self, t: float) -> int:
        """
        Number of points where u = t.

        :raises AmbiguousLevelError: t is a nodal value or u is flat at t.
        """
        if np.any(self.values == t):
            raise AmbiguousLevelError(f"level {t!r} is attained at a mesh node")
        a, b = self._ends()
        return int(np.count_nonzero(np.minimum(a, b) < t) - np.count_nonzero(np.maximum(a, b) < t))

    def has_two_preimages(self, samples: int = 64) -> bool:
        """ Whether almost every level in (0, sup u) has at least two preimages, checked on midpoints of the nodal levels. """
        levels = np.unique(self.values[self.values > 0])
        if levels.size == 0:
            return False
        probes = np.concatenate(([0.5 * levels[0]], 0.5 * (levels[1:] + levels[:-1])))
        probes = probes[~np.isin(probes, self.values)]
        if probes.size > samples:
            probes = probes[np.linspace(0, probes.size - 1, samples).astype(int)]
        return all(self.count_preimages(t) >= 2 for t in probes)

    def optimality_residuals(self, p: float) -> OptimalityResiduals:
        """
        Discrete Euler-Lagrange and Kirchhoff residuals.

        lambda is the least-squares multiplier of grad E + lambda M u = 0 over
        the interior nodes. The Euler-Lagrange residual is the lumped-mass
        dual norm of what is left, divided by sqrt(|G_L|). Nodes next to a
        truncated far end are left out: their residual measures the jump to
        the zero boundary value, about u(L)/h, and not the equation. The
        Kirchhoff residual sums one-sided second-order outgoing derivatives
        at each finite vertex.

        :raises ZeroFunctionError: u is identically zero.
        """
        if not np.any(self.values):
            raise ZeroFunctionError("optimality residuals of the zero function")
        mesh = self.mesh
        interior = mesh.interior_nodes()
        grad = self.energy_gradient(p).values[interior]
        mu_vec = (mesh.mass_matrix @ self.values)[interior]
        lam = -float(grad @ mu_vec) / float(mu_vec @ mu_vec)
        residual = grad + lam * mu_vec
        el = math.sqrt(float(np.sum(residual ** 2 / mesh.lumped_mass[interior]))) / math.sqrt(mesh.total_length)

        vertex_residuals = {}
        for vertex in mesh.vertex_node:
            vertex_residuals[vertex] = float(sum(self.outgoing_derivatives(vertex).values()))
        kirchhoff = max((abs(v) for v in vertex_residuals.values()), default=0.0)
        return OptimalityResiduals(el, kirchhoff, lam, vertex_residuals)

    def outgoing_derivatives(self, vertex_id: str) -> dict[str, float]:
        """
        One-sided derivative along every edge end at the vertex, pointing away
        from it. A loop contributes two entries, keyed by id and id + "'".
        """
        out: dict[str, float] = {}
        for m in self.mesh.edges:
            values = self.values[m.nodes]
            if m.start_vertex == vertex_id:
                out[m.edge_id] = _one_sided(values[:3], m.coords[:3])
            if m.end_vertex == vertex_id and not m.half_line:
                key = m.edge_id + "'" if m.edge_id in out else m.edge_id
                out[key] = _one_sided(values[::-1][:3], m.length - m.coords[::-1][:3])
        return out


def _one_sided(u: np.ndarray, x: np.ndarray) -> float:
    """ Second-order derivative at x[0] from three nodes, for any spacing. """
    h1, h2 = x[1] - x[0], x[2] - x[1]
    return float(-(2 * h1 + h2) / (h1 * (h1 + h2)) * u[0] + (h1 + h2) / (h1 * h2) * u[1]
                 - h1 / (h2 * (h1 + h2)) * u[2])


@dataclass(frozen=True, eq=False)
class LevelTable:
    """
    The distribution function of a P1 function sampled at its own nodal values.

    levels: the distinct nodal values, increasing.
    above: |{u > t}| at each level.
    at_least: |{u >= t}| at each level; it exceeds `above` only on plateaus.
    """
    levels: np.ndarray
    above: np.ndarray
    at_least: np.ndarray

    @classmethod
    def of(cls, u: GraphFunction) -> LevelTable:
        """
        Built interval by interval without ever forming slopes, so nearly
        flat intervals cost no precision.

        :complexity: O(n log n + P), P the number of (interval, level) crossings.
        """
        a, b = u._ends()
        steps = u.mesh.steps
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        levels = np.unique(u.values)

        order = np.argsort(lo, kind="stable")
        cumulative = np.concatenate(([0.0], np.cumsum(steps[order])))
        full = cumulative[-1] - cumulative[np.searchsorted(lo[order], levels, side="right")]

        ramp = hi > lo
        r_lo, r_hi, r_h = lo[ramp], hi[ramp], steps[ramp]
        first = np.searchsorted(levels, r_lo, side="left")
        stop = np.searchsorted(levels, r_hi, side="left")
        counts = stop - first
        owner = np.repeat(np.arange(r_lo.size), counts)
        offsets = np.arange(owner.size) - np.repeat(np.cumsum(counts) - counts, counts)
        at = first[owner] + offsets
        share = r_h[owner] * (r_hi[owner] - levels[at]) / (r_hi[owner] - r_lo[owner])
        partial = np.bincount(at, share, levels.size)

        flat = ~ramp
        plateau = np.bincount(np.searchsorted(levels, lo[flat]), steps[flat], levels.size)
        above = full + partial
        return cls(levels, above, above + plateau)

    def decreasing_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Breakpoints (x, t) of the decreasing rearrangement, x increasing.

        Each level t contributes the plateau [above(t), at_least(t)]; the
        rearrangement is linear in between.
        """
        xs = np.column_stack((self.above[::-1], self.at_least[::-1])).ravel()
        ts = np.repeat(self.levels[::-1], 2)
        keep = np.concatenate(([True], np.diff(xs) > _MERGE_RTOL * max(xs[-1], 1.0)))
        xs, ts = xs[keep], ts[keep]
        xs[0] = 0.0
        return xs, ts
