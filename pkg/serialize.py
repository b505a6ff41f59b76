"""
Reading and writing graphs, graph functions and reports.

Graph files are JSON:

    {"vertices": [{"id": "j"}, {"id": "inf_1", "infinity": true}, ...],
     "edges": [{"id": "h1", "from": "j", "to": "inf_1", "length": "inf"},
               {"id": "pendant", "from": "j", "to": "tip", "length": 1.0}, ...]}

Graph functions are CSV rows `edge_id,x,u` after `#`-prefixed header lines.
Reports go through serpy serializers and are dumped with sorted keys so that
equal inputs give byte-equal files.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
import math
from collections import defaultdict
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import serpy

from constants import INFINITE, __version__
from errors import GraphFormatError
from graph_function import GraphFunction, TruncatedMesh
from metric_graph import Edge, MetricGraph, Vertex


class EnhancedJSONEncoder(json.JSONEncoder):
    """ Dataclasses, enums and numpy scalars/arrays as plain JSON. """

    def default(self, o):
        if dataclasses.is_dataclass(o) and not isinstance(o, type):
            return dataclasses.asdict(o)
        if isinstance(o, enum.Enum):
            return o.name if o is not INFINITE else "inf"
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        return super().default(o)


def dumps(data: Any) -> str:
    return json.dumps(data, cls=EnhancedJSONEncoder, sort_keys=True, indent=2)


def graph_to_dict(graph: MetricGraph) -> dict:
    return {
        "vertices": [{"id": v.id, "infinity": v.at_infinity} for v in graph.vertices],
        "edges": [{"id": e.id, "from": e.start, "to": e.end, "length": "inf" if e.is_half_line else e.length}
                  for e in graph.edges],
    }


def dump_graph(graph: MetricGraph) -> str:
    return dumps(graph_to_dict(graph))


def graph_hash(graph: MetricGraph) -> str:
    canonical = json.dumps(graph_to_dict(graph), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _field(item: dict, key: str, path: str, kind: type, source: str, default: Any = ...) -> Any:
    if key not in item:
        if default is not ...:
            return default
        raise GraphFormatError(f"{source}: {path}.{key}: missing")
    value = item[key]
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise GraphFormatError(f"{source}: {path}.{key}: expected {kind.__name__}, got {json.dumps(value)}")
    return value


def graph_from_dict(data: Any, source: str = "<graph>") -> MetricGraph:
    """ :raises GraphFormatError: with the JSON path of the first offending field. """
    if not isinstance(data, dict):
        raise GraphFormatError(f"{source}: top level must be an object")
    for key in ("vertices", "edges"):
        if not isinstance(data.get(key), list):
            raise GraphFormatError(f"{source}: {key}: expected a list")
    vertices = []
    for k, item in enumerate(data["vertices"]):
        path = f"vertices[{k}]"
        if not isinstance(item, dict):
            raise GraphFormatError(f"{source}: {path}: expected an object")
        vertices.append(Vertex(_field(item, "id", path, str, source),
                               _field(item, "infinity", path, bool, source, default=False)))
    edges = []
    for k, item in enumerate(data["edges"]):
        path = f"edges[{k}]"
        if not isinstance(item, dict):
            raise GraphFormatError(f"{source}: {path}: expected an object")
        raw = item.get("length")
        if raw == "inf":
            length = INFINITE
        elif isinstance(raw, (int, float)) and not isinstance(raw, bool) and math.isfinite(raw) and raw > 0:
            length = float(raw)
        else:
            raise GraphFormatError(f"{source}: {path}.length: expected a positive number or \"inf\", "
                                   f"got {json.dumps(raw)}")
        edges.append(Edge(_field(item, "id", path, str, source), _field(item, "from", path, str, source),
                          _field(item, "to", path, str, source), length))
    return MetricGraph(tuple(vertices), tuple(edges))


def load_graph(text: str, source: str = "<graph>") -> MetricGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return graph_from_dict(data, source)


def load_graph_file(path: str | Path) -> MetricGraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphFormatError(f"{path}: cannot read graph file ({exc.strerror})") from exc
    return load_graph(text, str(path))


def dump_function(u: GraphFunction, stream: TextIO, p: float | None = None, mu: float | None = None) -> None:
    """ CSV block per edge, after a header naming the graph and the mesh. """
    mesh = u.mesh
    header = {"graph_hash": graph_hash(mesh.graph), "h": mesh.h, "L": mesh.truncation_length,
              "mass": u.mass(), "version": __version__}
    if p is not None:
        header.update(p=p, energy=u.energy(p))
    if mu is not None:
        header["mu"] = mu
    for key in sorted(header):
        stream.write(f"# {key}={header[key]!r}\n" if isinstance(header[key], float) else f"# {key}={header[key]}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["edge_id", "x", "u"])
    for m in mesh.edges:
        for x, value in zip(m.coords, u.values[m.nodes]):
            writer.writerow([m.edge_id, repr(float(x)), repr(float(value))])


def load_function(graph: MetricGraph, stream: TextIO) -> GraphFunction:
    """
    Graph function from a CSV written by dump_function. The mesh is rebuilt
    from the coordinates in the file.

    :raises GraphFormatError: malformed rows, unknown edges, or a header hash of another graph.
    """
    header: dict[str, str] = {}
    rows: dict[str, list[tuple[float, float]]] = defaultdict(list)
    body = []
    for line in stream:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    expected = graph_hash(graph)
    if "graph_hash" in header and header["graph_hash"] != expected:
        raise GraphFormatError("function file was written for a different graph")
    reader = csv.reader(body)
    if next(reader, None) != ["edge_id", "x", "u"]:
        raise GraphFormatError("function file needs the column header edge_id,x,u")
    for number, row in enumerate(reader, start=2):
        if len(row) != 3 or row[0] not in graph.edge_map:
            raise GraphFormatError(f"function file row {number}: expected a known edge id, x and u")
        try:
            rows[row[0]].append((float(row[1]), float(row[2])))
        except ValueError as exc:
            raise GraphFormatError(f"function file row {number}: {exc}") from exc
    missing = [e.id for e in graph.edges if e.id not in rows]
    if missing:
        raise GraphFormatError(f"function file has no rows for edges {', '.join(missing)}")
    coordinates = {k: np.array([x for x, _ in v]) for k, v in rows.items()}
    truncation = float(header["L"]) if "L" in header else None
    mesh = TruncatedMesh.from_coordinates(graph, coordinates, truncation)
    values = np.zeros(mesh.n_nodes)
    for m in mesh.edges:
        values[m.nodes] = [value for _, value in rows[m.edge_id]]
    return GraphFunction(mesh, values)


class ResidualsSerializer(serpy.Serializer):
    el_residual = serpy.FloatField()
    kirchhoff_residual = serpy.FloatField()
    vertex_residuals = serpy.MethodField()

    def get_vertex_residuals(self, obj) -> dict:
        return {k: float(v) for k, v in obj.vertex_residuals.items()}


class ConfigSerializer(serpy.Serializer):
    p = serpy.FloatField()
    mu = serpy.FloatField()
    h = serpy.FloatField()
    truncation_length = serpy.FloatField()
    initial_step = serpy.FloatField()
    backtracking = serpy.FloatField()
    armijo = serpy.FloatField()
    optimism = serpy.FloatField()
    max_step = serpy.FloatField()
    max_backtracks = serpy.IntField()
    max_iterations = serpy.IntField()
    energy_tol = serpy.FloatField()
    gradient_tol = serpy.FloatField()
    stall_tol = serpy.FloatField()
    momentum = serpy.BoolField()
    use_hybrid_rearrangement = serpy.BoolField()
    hybrid_every = serpy.IntField()
    seed = serpy.IntField()
    perturbation = serpy.FloatField()
    start_vertex = serpy.Field()
    escape_start = serpy.BoolField()
    escape_margin = serpy.FloatField()
    escape_threshold = serpy.FloatField()
    core_threshold = serpy.FloatField()
    doubling_check = serpy.BoolField()
    doubling_tol = serpy.FloatField()
    log_every = serpy.IntField()


class GroundStateReportSerializer(serpy.Serializer):
    graph_hash = serpy.MethodField()
    config = ConfigSerializer()
    energy = serpy.FloatField()
    lambda_ = serpy.FloatField(label="lambda")
    residuals = ResidualsSerializer()
    bounds = serpy.MethodField()
    escape_fraction = serpy.FloatField()
    core_fraction = serpy.FloatField()
    verdict = serpy.MethodField()
    converged = serpy.BoolField()
    iterations = serpy.IntField()
    start = serpy.StrField()
    candidates = serpy.Field()
    doubled_energy = serpy.Field(required=False)
    hybrid_accepted = serpy.IntField()
    hybrid_rejected = serpy.IntField()
    mass = serpy.MethodField()
    h = serpy.FloatField()

    def get_graph_hash(self, obj) -> str:
        return graph_hash(obj.graph)

    def get_bounds(self, obj) -> dict:
        return {"lower": obj.bounds[0], "upper": obj.bounds[1]}

    def get_verdict(self, obj) -> str:
        return obj.verdict.name

    def get_mass(self, obj) -> float:
        return obj.u.mass()


class EnergyAuditSerializer(serpy.Serializer):
    mode = serpy.MethodField()
    p = serpy.FloatField()
    input_mass = serpy.FloatField()
    output_mass = serpy.FloatField()
    input_lp = serpy.FloatField()
    output_lp = serpy.FloatField()
    input_dirichlet = serpy.FloatField()
    output_dirichlet = serpy.FloatField()
    input_energy = serpy.FloatField()
    output_energy = serpy.FloatField()
    tau = serpy.Field(required=False)

    def get_mode(self, obj) -> str:
        return obj.mode.value


class RunSerializer(serpy.Serializer):
    index = serpy.IntField()
    point = serpy.Field()
    graph_hash = serpy.Field(required=False)
    config = ConfigSerializer(required=False)
    energy = serpy.FloatField(required=False)
    verdict = serpy.Field(required=False)
    escape_fraction = serpy.Field(required=False)
    core_fraction = serpy.Field(required=False)
    lambda_ = serpy.Field(label="lambda", required=False)
    iterations = serpy.Field(required=False)
    error = serpy.Field(required=False)


class ExperimentRecordSerializer(serpy.Serializer):
    name = serpy.StrField()
    kind = serpy.StrField()
    graph = serpy.StrField()
    graph_args = serpy.Field()
    grid = serpy.Field()
    version = serpy.StrField()
    runs = RunSerializer(many=True)
    tables = serpy.Field()


def report_to_json(report) -> str:
    return dumps(GroundStateReportSerializer(report).data)


def record_to_json(record) -> str:
    return dumps(ExperimentRecordSerializer(record).data)
