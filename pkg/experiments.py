"""
Parameter sweeps over minimize and escaping_sequence_energy.

An ExperimentSpec names a graph (a corpus name or a graph file), a kind of
run and a grid; run_experiment runs every grid point, in a thread pool if
asked, and collects the results in grid order. Results go to
<output dir>/<name>/record.json plus one CSV per minimizer.
"""
from __future__ import annotations

import itertools
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import corpus
import serialize
from constants import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV, __version__
from errors import GroundStateError, ParameterError
from metric_graph import MetricGraph, pendant_structure
from minimizer import MinimizerConfig, escaping_sequence_energy, minimize
from soliton import ProblemParams

logger = logging.getLogger(__name__)

GRID_KEYS = ("p", "mu", "h", "L", "ell", "seed", "shift")
KINDS = ("minimize", "escape")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    graph: str
    kind: str = "minimize"
    graph_args: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, list] = field(default_factory=dict)
    hybrid: bool = False
    max_iterations: int = 4000
    doubling_check: bool = False
    workers: int = 1
    write_functions: bool = True

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ParameterError(f"experiment kind must be one of {KINDS}, got {self.kind!r}")
        unknown = set(self.grid) - set(GRID_KEYS)
        if unknown:
            raise ParameterError(f"unknown grid keys {sorted(unknown)}; allowed: {GRID_KEYS}")
        if self.kind == "escape" and "shift" not in self.grid:
            raise ParameterError("an escape experiment needs a 'shift' grid")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentSpec:
        try:
            return cls(**data)
        except TypeError as exc:
            raise ParameterError(f"bad experiment description: {exc}") from exc

    def points(self) -> list[dict[str, Any]]:
        """ Cartesian product of the grid, keys in sorted order, values in the order given. """
        keys = sorted(self.grid)
        return [dict(zip(keys, values)) for values in itertools.product(*(self.grid[k] for k in keys))]


@dataclass(frozen=True)
class ExperimentRun:
    index: int
    point: dict[str, Any]
    graph_hash: str | None = None
    config: MinimizerConfig | None = None
    energy: float | None = None
    verdict: str | None = None
    escape_fraction: float | None = None
    core_fraction: float | None = None
    lambda_: float | None = None
    iterations: int | None = None
    error: str | None = None


@dataclass(frozen=True)
class ExperimentRecord:
    name: str
    kind: str
    graph: str
    graph_args: dict[str, Any]
    grid: dict[str, list]
    runs: list[ExperimentRun]
    tables: dict[str, list[dict[str, Any]]]
    version: str = __version__


BUILTIN_EXPERIMENTS: dict[str, ExperimentSpec] = {spec.name: spec for spec in (
    ExperimentSpec("pendant_sweep", "pendant", grid={"ell": [0.5, 1.0, 2.0], "h": [0.01], "L": [40.0]}),
    ExperimentSpec("double_bridge_L_sweep", "double_bridge", grid={"L": [20.0, 40.0, 80.0], "h": [0.02]},
                   doubling_check=True),
    ExperimentSpec("tadpole", "tadpole", graph_args={"loop_length": 2.0}, grid={"h": [0.01], "L": [40.0]}),
    ExperimentSpec("bubble_tower", "bubble_tower", graph_args={"glue_points": [1.0, 2.0]},
                   grid={"h": [0.01], "L": [40.0]}),
    ExperimentSpec("escape_shift", "double_bridge", kind="escape",
                   grid={"shift": [2.0, 5.0, 10.0, 20.0, 30.0], "L": [60.0], "h": [0.02]}),
    ExperimentSpec("line", "line", grid={"h": [0.01], "L": [40.0]}),
)}


def load_spec(name_or_path: str) -> ExperimentSpec:
    if name_or_path in BUILTIN_EXPERIMENTS:
        return BUILTIN_EXPERIMENTS[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        raise ParameterError(f"{name_or_path!r} is neither a builtin experiment "
                             f"({', '.join(sorted(BUILTIN_EXPERIMENTS))}) nor a file")
    try:
        return ExperimentSpec.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def output_root(override: str | os.PathLike | None = None) -> Path:
    return Path(override or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def _graph_for(spec: ExperimentSpec, point: dict[str, Any]) -> MetricGraph:
    if spec.graph in corpus.CORPUS:
        kwargs = dict(spec.graph_args)
        if "glue_points" in kwargs:
            kwargs["glue_points"] = tuple(kwargs["glue_points"])
        if "lengths" in kwargs:
            kwargs["lengths"] = tuple(kwargs["lengths"])
        graph = corpus.builtin(spec.graph, **kwargs)
    else:
        graph = serialize.load_graph_file(spec.graph)
    if "ell" in point:
        graph = graph.with_edge_length(pendant_structure(graph).pendant, point["ell"])
    return graph


def _config_for(spec: ExperimentSpec, point: dict[str, Any]) -> MinimizerConfig:
    base = MinimizerConfig()
    return MinimizerConfig(
        problem=ProblemParams(p=point.get("p", base.p), mu=point.get("mu", base.mu)),
        h=point.get("h", base.h),
        truncation_length=point.get("L", base.truncation_length),
        seed=point.get("seed", base.seed),
        use_hybrid_rearrangement=spec.hybrid,
        max_iterations=spec.max_iterations,
        doubling_check=spec.doubling_check,
    )


def run_point(spec: ExperimentSpec, index: int, point: dict[str, Any], directory: Path | None) -> ExperimentRun:
    """
    One grid point. Library errors, including a graph that cannot be built
    for the point, become a failed run instead of stopping the sweep.
    """
    digest = config = None
    try:
        graph = _graph_for(spec, point)
        digest = serialize.graph_hash(graph)
        config = _config_for(spec, point)
        if spec.kind == "escape":
            energy = escaping_sequence_energy(graph, point["shift"], config)
            return ExperimentRun(index, point, digest, config, energy=energy)
        report = minimize(graph, config)
    except GroundStateError as exc:
        logger.warning("%s run %d %s failed: %s", spec.name, index, point, exc)
        return ExperimentRun(index, point, digest, config, error=f"{type(exc).__name__}: {exc}")
    if directory is not None and spec.write_functions:
        with open(directory / f"run_{index:03d}.csv", "w", encoding="utf-8", newline="") as stream:
            serialize.dump_function(report.u, stream, p=config.p, mu=config.mu)
    return ExperimentRun(index, point, digest, config, energy=report.energy, verdict=report.verdict.name,
                         escape_fraction=report.escape_fraction, core_fraction=report.core_fraction,
                         lambda_=report.lambda_, iterations=report.iterations)


def _tables(spec: ExperimentSpec, runs: list[ExperimentRun]) -> dict[str, list[dict[str, Any]]]:
    """ Energy against every grid key that takes more than one value. """
    tables = {}
    for key in sorted(spec.grid):
        if len(spec.grid[key]) > 1:
            tables[f"energy_vs_{key}"] = [{key: run.point[key], "energy": run.energy, "verdict": run.verdict}
                                          for run in runs]
    return tables


def run_experiment(spec: ExperimentSpec, output_dir: str | os.PathLike | None = None,
                   write: bool = True) -> ExperimentRecord:
    """
    Every grid point of spec; runs are independent and are collected in grid
    order whatever the number of workers, so records are reproducible.
    """
    directory = None
    if write:
        directory = output_root(output_dir) / spec.name
        directory.mkdir(parents=True, exist_ok=True)
    points = spec.points()
    logger.info("experiment %s: %d runs on %d worker(s)", spec.name, len(points), spec.workers)
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        runs = list(pool.map(lambda item: run_point(spec, item[0], item[1], directory), enumerate(points)))
    record = ExperimentRecord(spec.name, spec.kind, spec.graph, dict(spec.graph_args), dict(spec.grid), runs,
                              _tables(spec, runs))
    if directory is not None:
        (directory / "record.json").write_text(serialize.record_to_json(record) + "\n", encoding="utf-8")
    return record
