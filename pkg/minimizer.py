"""
Ground states of the NLS energy at fixed mass on truncated metric graphs.

The descent works on the mass sphere {mass = mu} of a TruncatedMesh:

  * the energy gradient is preconditioned by A = K + lambda_mu M (the
    H^1 Riesz map at the soliton multiplier) and projected on the tangent
    space of the sphere in the A inner product;
  * a Nesterov momentum term (1 - 3/k)(u_k - u_{k-1}) is added and dropped
    again (restart) as soon as it points uphill;
  * every trial point is pulled back to the sphere by rescaling, and an
    Armijo backtracking search with step memory picks the step.

Accepted steps therefore never raise the energy. On pendant graphs a hybrid
rearrangement step can be interleaved; it is kept only if it does not raise
the energy either.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.sparse.linalg import splu

from constants import DEFAULT_H, DEFAULT_L, INNER_SHARE, OUTER_SHARE, Example1Kind, Verdict
from errors import NumericalError, ParameterError, PreconditionError, TopologyError
from graph_function import GraphFunction, MeshEdge, OptimalityResiduals, TruncatedMesh
from metric_graph import (MetricGraph, busiest_vertex, pendant_structure, recognize_example1, require_valid,
                          vertex_distances)
from rearrangement import hybrid_rearrangement
from soliton import ProblemParams, SolitonParams, soliton_energy, soliton_lambda, soliton_params, \
    soliton_value, solve_half_line

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 20.0


@dataclass(frozen=True)
class MinimizerConfig:
    problem: ProblemParams = field(default_factory=ProblemParams)
    h: float = DEFAULT_H
    truncation_length: float = DEFAULT_L
    initial_step: float = 1.0
    backtracking: float = 0.5
    armijo: float = 1e-4
    optimism: float = 2.0
    max_step: float = 4.0
    max_backtracks: int = 40
    max_iterations: int = 4000
    energy_tol: float = 1e-11
    gradient_tol: float = 1e-6
    stall_tol: float = 1e-5
    momentum: bool = True
    use_hybrid_rearrangement: bool = False
    hybrid_every: int = 10
    seed: int = 0
    perturbation: float = 0.0
    start_vertex: str | None = None
    escape_start: bool = True
    escape_margin: float = 1e-7
    escape_threshold: float = 0.2
    core_threshold: float = 0.5
    doubling_check: bool = False
    doubling_tol: float = 1e-9
    log_every: int = 100

    def __post_init__(self) -> None:
        for name in ("h", "truncation_length", "initial_step", "armijo", "max_step", "energy_tol",
                     "gradient_tol", "stall_tol", "escape_margin", "doubling_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be positive, got {value!r}")
        if not 0 < self.backtracking < 1:
            raise ParameterError(f"backtracking factor must lie in (0, 1), got {self.backtracking!r}")
        if self.optimism < 1:
            raise ParameterError(f"optimism must be at least 1, got {self.optimism!r}")
        for name in ("max_iterations", "max_backtracks", "hybrid_every", "log_every"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be at least 1")
        if self.perturbation < 0:
            raise ParameterError("perturbation must be nonnegative")

    @property
    def p(self) -> float:
        return self.problem.p

    @property
    def mu(self) -> float:
        return self.problem.mu

    def replace(self, **changes) -> MinimizerConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class DescentRun:
    start: str
    u: GraphFunction
    energy: float
    iterations: int
    converged: bool
    history: tuple[float, ...]
    restarts: int = 0
    hybrid_accepted: int = 0
    hybrid_rejected: int = 0


@dataclass(frozen=True, eq=False)
class GroundStateReport:
    graph: MetricGraph
    config: MinimizerConfig
    u: GraphFunction
    energy: float
    lambda_: float
    residuals: OptimalityResiduals
    bounds: tuple[float, float]
    escape_fraction: float
    core_fraction: float
    verdict: Verdict
    converged: bool
    iterations: int
    start: str
    energy_history: tuple[float, ...]
    candidates: dict[str, float]
    doubled_energy: float | None = None
    hybrid_accepted: int = 0
    hybrid_rejected: int = 0

    @property
    def h(self) -> float:
        return self.u.mesh.h


class ProjectedGradientDescent:
    """ Descent on the mass sphere of one mesh; the factorized preconditioner is shared by all starts. """

    def __init__(self, mesh: TruncatedMesh, config: MinimizerConfig) -> None:
        self.mesh = mesh
        self.config = config
        self.free = ~mesh.dirichlet
        shift = soliton_lambda(soliton_params(config.p), config.mu)
        operator = (mesh.stiffness + shift * mesh.mass_matrix)[self.free][:, self.free]
        self.solve = splu(operator.tocsc()).solve
        self.hybrid = config.use_hybrid_rearrangement and _is_pendant(mesh.graph)
        if config.use_hybrid_rearrangement and not self.hybrid:
            logger.info("hybrid steps need a pendant graph; running plain descent")

    def _gradient_direction(self, u: GraphFunction) -> tuple[np.ndarray, np.ndarray]:
        """ Euclidean energy gradient and the projected, preconditioned descent direction. """
        free = self.free
        gradient = u.energy_gradient(self.config.p).values
        normal = 2.0 * (self.mesh.mass_matrix @ u.values)
        g_pre = self.solve(gradient[free])
        n_pre = self.solve(normal[free])
        direction = np.zeros_like(gradient)
        direction[free] = -(g_pre - (normal[free] @ g_pre) / (normal[free] @ n_pre) * n_pre)
        return gradient, direction

    def _tangent(self, u: GraphFunction, v: np.ndarray) -> np.ndarray:
        mu_vec = self.mesh.mass_matrix @ u.values
        return v - (mu_vec @ v) / (mu_vec @ u.values) * u.values

    def _line_search(self, u: GraphFunction, energy: float, direction: np.ndarray,
                     slope: float) -> tuple[GraphFunction, float, float] | None:
        cfg = self.config
        t = 1.0
        for _ in range(cfg.max_backtracks):
            trial = u.with_values(u.values + t * direction).scaled_to_mass(cfg.mu)
            trial_energy = trial.energy(cfg.p)
            if trial_energy <= energy + cfg.armijo * t * slope:
                return trial, trial_energy, t
            t *= cfg.backtracking
        return None

    def run(self, start: GraphFunction, label: str) -> DescentRun:
        cfg = self.config
        u = start.scaled_to_mass(cfg.mu)
        energy = u.energy(cfg.p)
        history = [energy]
        step = cfg.initial_step
        previous: np.ndarray | None = None
        since_restart = 0
        restarts = accepted = rejected = 0
        last_decrease = math.inf
        converged = False
        iterations = 0

        for iterations in range(1, cfg.max_iterations + 1):
            gradient, steepest = self._gradient_direction(u)
            steepest_slope = float(gradient @ steepest)
            gradient_norm = math.sqrt(max(-steepest_slope, 0.0))
            if gradient_norm < cfg.gradient_tol and last_decrease < cfg.energy_tol:
                converged = True
                break

            since_restart += 1
            direction = step * steepest
            if cfg.momentum and previous is not None and since_restart > 1:
                carried = self._tangent(u, u.values - previous)
                if gradient @ carried > 0:
                    since_restart = 1
                    restarts += 1
                else:
                    direction = direction + max(0.0, 1.0 - 3.0 / since_restart) * carried

            slope = float(gradient @ direction)
            found = self._line_search(u, energy, direction, slope) if slope < 0 else None
            if found is None and since_restart > 1:
                since_restart = 1
                restarts += 1
                direction = step * steepest
                found = self._line_search(u, energy, direction, step * steepest_slope)
            if found is None:
                converged = gradient_norm < cfg.stall_tol
                logger.info("%s: line search stalled at iteration %d (projected gradient %.3e)",
                            label, iterations, gradient_norm)
                break

            trial, trial_energy, t = found
            step = min(t * step * cfg.optimism, cfg.max_step) if t == 1.0 else max(t * step, 1e-12)
            previous = u.values
            last_decrease = energy - trial_energy
            u, energy = trial, trial_energy
            history.append(energy)

            if self.hybrid and iterations % cfg.hybrid_every == 0:
                rearranged = self._hybrid_step(u)
                if rearranged is not None and rearranged[1] <= energy:
                    u, energy = rearranged
                    history.append(energy)
                    previous = None
                    since_restart = 0
                    accepted += 1
                else:
                    rejected += 1
                    logger.info("%s: hybrid step rejected at iteration %d", label, iterations)

            if iterations % cfg.log_every == 0:
                logger.debug("%s: iteration %d energy %.15g gradient %.3e step %.3g", label, iterations, energy,
                             gradient_norm, step)
        else:
            logger.warning("%s: no convergence within %d iterations", label, cfg.max_iterations)

        return DescentRun(label, u, energy, iterations, converged, tuple(history), restarts, accepted, rejected)

    def _hybrid_step(self, u: GraphFunction) -> tuple[GraphFunction, float] | None:
        try:
            result = hybrid_rearrangement(u.abs())
        except NumericalError as exc:
            logger.info("hybrid rearrangement failed: %s", exc)
            return None
        v = result.output.resample(self.mesh).scaled_to_mass(self.config.mu)
        return v, v.energy(self.config.p)


def _is_pendant(graph: MetricGraph) -> bool:
    try:
        pendant_structure(graph)
    except TopologyError:
        return False
    return True


def _node_distances(mesh: TruncatedMesh, distances: dict[str, float], m: MeshEdge) -> np.ndarray:
    """ Graph distance of every node of m from the source the distances were taken from. """
    if m.half_line:
        return distances[m.start_vertex] + m.coords
    return np.minimum(distances[m.start_vertex] + m.coords, distances[m.end_vertex] + m.length - m.coords)


def wrapped_soliton(mesh: TruncatedMesh, params: SolitonParams, mu: float, vertex: str) -> GraphFunction:
    """ phi_mu of the distance to vertex; unnormalized. """
    distances = vertex_distances(mesh.graph, vertex)
    return GraphFunction.from_profile(
        mesh, lambda m: soliton_value(params, mu, _node_distances(mesh, distances, m)))


def shifted_soliton(mesh: TruncatedMesh, params: SolitonParams, mu: float, half_line: str, center: float,
                    cutoff: float | None = None) -> GraphFunction:
    """
    max(phi_mu(x - center) - phi_mu(r), 0) on the chosen half-line and zero
    on every other edge, with r = min(cutoff, center). The support
    [center - r, center + r] never reaches back past the junction.
    """
    edge = mesh.graph.edge_map[half_line]
    if not edge.is_half_line:
        raise PreconditionError(f"edge {half_line!r} is not a half-line")
    if not center > 0:
        raise ParameterError(f"the soliton centre must lie inside the half-line, got {center!r}")
    radius = center if cutoff is None else min(cutoff, center)
    floor = float(soliton_value(params, mu, radius))

    def profile(m: MeshEdge) -> np.ndarray:
        if m.edge_id != half_line:
            return np.zeros_like(m.coords)
        return np.maximum(soliton_value(params, mu, m.coords - center) - floor, 0.0)

    return GraphFunction.from_profile(mesh, profile)


def _perturbed(u: GraphFunction, config: MinimizerConfig) -> GraphFunction:
    if config.perturbation == 0:
        return u
    rng = np.random.default_rng(config.seed)
    return u.with_values(u.values * (1.0 + config.perturbation * rng.uniform(-1.0, 1.0, u.values.size)))


def mass_shares(u: GraphFunction) -> tuple[float, float]:
    """
    (escape_fraction, core_fraction): share of the mass on the outer
    OUTER_SHARE of the truncated half-lines, and on the finite edges plus
    the inner INNER_SHARE of the half-lines.
    """
    mesh = u.mesh
    masses = u.interval_masses()
    total = masses.sum()
    if total <= 0:
        return 0.0, 0.0
    on_half_line = np.array([m.half_line for m in mesh.edges])[mesh.edge_of_interval()]
    midpoints = mesh.interval_midpoints()
    length = mesh.truncation_length
    outer = masses[on_half_line & (midpoints >= (1.0 - OUTER_SHARE) * length)].sum()
    core = masses[~on_half_line].sum() + masses[on_half_line & (midpoints <= INNER_SHARE * length)].sum()
    return float(outer / total), float(core / total)


def energy_bounds(params: SolitonParams, mu: float) -> tuple[float, float]:
    """ Half the energy of the soliton of mass 2 mu, and the energy of the soliton of mass mu. """
    return 0.5 * soliton_energy(params, 2.0 * mu), soliton_energy(params, mu)


def minimize(graph: MetricGraph, config: MinimizerConfig = MinimizerConfig(),
             initial: GraphFunction | None = None) -> GroundStateReport:
    """
    Lowest energy state of mass mu found from a few starts.

    Starts: phi_mu wrapped around config.start_vertex (or the busiest finite
    vertex), the optional `initial`, and on non-compact graphs phi_mu parked
    in the middle of the first half-line. The parked start wins only if it
    is lower by more than escape_margin.

    Non-convergence is reported through the verdict, never raised.
    """
    require_valid(graph)
    params = soliton_params(config.p)
    mesh = TruncatedMesh.build(graph, config.h, config.truncation_length)
    descent = ProjectedGradientDescent(mesh, config)

    vertex = config.start_vertex or busiest_vertex(graph)
    starts = [(f"wrapped:{vertex}", _perturbed(wrapped_soliton(mesh, params, config.mu, vertex), config))]
    if initial is not None:
        starts.append(("initial", initial if initial.mesh is mesh else initial.resample(mesh)))
    runs = [descent.run(u0, label) for label, u0 in starts]
    best = min(runs, key=lambda run: run.energy)
    if config.escape_start and graph.half_lines:
        parked = shifted_soliton(mesh, params, config.mu, graph.half_lines[0].id, 0.5 * config.truncation_length)
        escape = descent.run(parked, "escape")
        runs.append(escape)
        if escape.energy < best.energy - config.escape_margin:
            best = escape
    logger.info("best start %s with energy %.15g after %d iterations", best.start, best.energy, best.iterations)

    doubled = None
    if config.doubling_check and graph.half_lines:
        doubled = minimize(graph, config.replace(truncation_length=2.0 * config.truncation_length,
                                                 doubling_check=False)).energy
    return _report(graph, config, params, best, {run.start: run.energy for run in runs}, doubled)


def _report(graph: MetricGraph, config: MinimizerConfig, params: SolitonParams, run: DescentRun,
            candidates: dict[str, float], doubled: float | None) -> GroundStateReport:
    u = run.u
    if np.all(u.values <= 0):
        u = u.with_values(-u.values)
    residuals = u.optimality_residuals(config.p)
    escape_fraction, core_fraction = mass_shares(u)

    escaping = bool(graph.half_lines) and (
        escape_fraction > config.escape_threshold
        or core_fraction < config.core_threshold
        or (doubled is not None and doubled < run.energy - config.doubling_tol))
    if escaping:
        verdict = Verdict.ESCAPING
    elif run.converged:
        verdict = Verdict.ATTAINED
    else:
        verdict = Verdict.INCONCLUSIVE
    return GroundStateReport(
        graph=graph, config=config, u=u, energy=run.energy, lambda_=residuals.lambda_, residuals=residuals,
        bounds=energy_bounds(params, config.mu), escape_fraction=escape_fraction, core_fraction=core_fraction,
        verdict=verdict, converged=run.converged, iterations=run.iterations, start=run.start,
        energy_history=run.history, candidates=candidates, doubled_energy=doubled,
        hybrid_accepted=run.hybrid_accepted, hybrid_rejected=run.hybrid_rejected,
    )


def verify_bounds(report: GroundStateReport) -> bool:
    """ lower - 10 h^2 <= energy <= upper + 10 h^2. """
    if not report.graph.half_lines:
        raise PreconditionError("the two-sided bound needs a graph with a half-line")
    lower, upper = report.bounds
    slack = 10.0 * report.h ** 2
    return lower - slack <= report.energy <= upper + slack


def verify_monotone(report: GroundStateReport) -> bool:
    history = np.asarray(report.energy_history)
    return bool(np.all(np.diff(history) <= 1e-15 * np.abs(history[1:])))


def escaping_sequence_energy(graph: MetricGraph, shift: float, config: MinimizerConfig = MinimizerConfig(),
                             cutoff: float = DEFAULT_CUTOFF, half_line: str | None = None) -> float:
    """
    Energy of the cut-off soliton max(phi_mu - phi_mu(r), 0) centred at
    distance `shift` down a half-line, rescaled to mass mu. The radius r is
    min(cutoff, shift), so short shifts use a narrower support that still
    vanishes at the junction. Energies decrease toward E(phi_mu) as the
    shift grows to the cutoff and stay flat beyond it.

    :raises ParameterError: cutoff <= 0, shift <= 0, or the support reaching past the truncation.
    """
    require_valid(graph)
    if not graph.half_lines:
        raise PreconditionError("escaping sequences need a half-line")
    if not cutoff > 0:
        raise ParameterError(f"cutoff radius must be positive, got {cutoff!r}")
    if not shift > 0:
        raise ParameterError(f"shift must be positive, got {shift!r}")
    if shift + min(cutoff, shift) > config.truncation_length:
        raise ParameterError(f"shift {shift} with cutoff {cutoff} does not fit in L={config.truncation_length}")
    params = soliton_params(config.p)
    mesh = TruncatedMesh.build(graph, config.h, config.truncation_length)
    edge_id = half_line or graph.half_lines[0].id
    u = shifted_soliton(mesh, params, config.mu, edge_id, shift, cutoff=cutoff)
    return u.scaled_to_mass(config.mu).energy(config.p)


@dataclass(frozen=True)
class PendantCheck:
    pendant_increasing: bool
    tip_is_max: bool
    half_line_asymmetry: float
    fit_rms: float
    fitted_mass: float
    fitted_shift: float
    half_line_slopes: tuple[float, float]
    pendant_slope: float
    kirchhoff_sum: float
    mu: float
    kirchhoff_tol: float = 5e-3

    @property
    def passed(self) -> bool:
        return (self.pendant_increasing and self.tip_is_max and self.half_line_asymmetry <= 1e-6
                and self.fit_rms <= 1e-3 and self.fitted_mass > self.mu and self.fitted_shift > 0
                and min(-s for s in self.half_line_slopes) > 0 and self.pendant_slope > 0
                and abs(self.kirchhoff_sum) <= self.kirchhoff_tol)


def pendant_structure_check(report: GroundStateReport) -> PendantCheck:
    """
    Shape of a pendant-graph ground state: increasing along the pendant with
    its maximum at the tip, the same profile x -> phi_M(x + y) on both
    half-lines, and a corner at the junction.

    :raises PreconditionError: not a pendant graph, or the run did not attain.
    """
    try:
        shape = pendant_structure(report.graph)
    except TopologyError as exc:
        raise PreconditionError(f"pendant check on a graph of the wrong shape: {exc}") from exc
    if report.verdict is not Verdict.ATTAINED:
        raise PreconditionError(f"pendant check needs an ATTAINED run, got {report.verdict.name}")
    u = report.u
    params = soliton_params(report.config.p)

    _, psi = u.edge_values(shape.pendant)
    if not shape.oriented_from_junction(report.graph):
        psi = psi[::-1]
    first_x, first = u.edge_values(shape.half_lines[0])
    _, second = u.edge_values(shape.half_lines[1])

    mesh = u.mesh
    owner = mesh.edge_of_interval()
    index = [m.edge_id for m in mesh.edges].index(shape.half_lines[0])
    half_mass = float(u.interval_masses()[owner == index].sum())
    guess = solve_half_line(params, float(first[0]), 2.0 * half_mass)
    keep = first_x <= (1.0 - OUTER_SHARE) * mesh.truncation_length

    def misfit(q: np.ndarray) -> np.ndarray:
        return soliton_value(params, math.exp(q[0]), first_x[keep] + q[1]) - first[keep]

    fit = least_squares(misfit, x0=[math.log(guess.M), guess.y], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    slopes = u.outgoing_derivatives(shape.junction)
    return PendantCheck(
        pendant_increasing=bool(np.all(np.diff(psi) > 0)),
        tip_is_max=u.at_vertex(shape.tip) == u.sup(),
        half_line_asymmetry=float(np.max(np.abs(first - second))),
        fit_rms=float(np.sqrt(np.mean(fit.fun ** 2))),
        fitted_mass=math.exp(fit.x[0]),
        fitted_shift=float(fit.x[1]),
        half_line_slopes=(slopes[shape.half_lines[0]], slopes[shape.half_lines[1]]),
        pendant_slope=slopes[shape.pendant],
        kirchhoff_sum=float(sum(slopes.values())),
        mu=report.config.mu,
    )


@dataclass(frozen=True)
class Example1Deviation:
    kind: Example1Kind
    glue_points: tuple[float, ...]
    energy: float
    soliton_energy: float
    energy_deviation: float
    wrap_deviation: float
    report: GroundStateReport


def transported_soliton(mesh: TruncatedMesh, params: SolitonParams, mu: float) -> GraphFunction:
    """ phi_mu carried onto a line, tadpole or bubble tower by folding the line at the glue points. """
    match = recognize_example1(mesh.graph)
    if match.kind is Example1Kind.NONE:
        raise PreconditionError("graph is not a line, a tadpole or a tower of bubbles")
    return GraphFunction.from_profile(
        mesh, lambda m: soliton_value(params, mu, match.radial_coordinate(m.edge_id, m.coords)))


def example1_exactness_check(graph: MetricGraph, config: MinimizerConfig = MinimizerConfig()) -> Example1Deviation:
    """
    On the line, the tadpole and towers of bubbles the ground state is the
    soliton folded onto the graph. Runs minimize with the folded soliton as
    an extra start and measures how far the result is from it.

    :raises PreconditionError: the graph is not in the family.
    """
    match = recognize_example1(graph)
    if match.kind is Example1Kind.NONE:
        raise PreconditionError("graph is not a line, a tadpole or a tower of bubbles")
    params = soliton_params(config.p)
    mesh = TruncatedMesh.build(graph, config.h, config.truncation_length)
    folded = transported_soliton(mesh, params, config.mu)
    report = minimize(graph, config, initial=folded)
    reference = soliton_energy(params, config.mu)
    return Example1Deviation(
        kind=match.kind,
        glue_points=match.glue_points,
        energy=report.energy,
        soliton_energy=reference,
        energy_deviation=abs(report.energy - reference),
        wrap_deviation=float(np.max(np.abs(report.u.resample(mesh).values - folded.values))),
        report=report,
    )
