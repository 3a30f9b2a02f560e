"""Open graph states: model, standard generators, and the on-disk format.

Vertices are 0-based integers internally; the JSON file format and all
rendered reports use 1-based labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

CLIFFORD_TOL = 1e-12


class Plane(Enum):
    """Measurement plane of a single qubit."""

    XY = "XY"
    XZ = "XZ"
    YZ = "YZ"


@dataclass(frozen=True)
class OpenGraph:
    """Open graph state: a graph with ordered inputs/outputs and measurement data.

    Attributes
    ----------
    n_vertices : int
        Number of vertices, labelled ``0 .. n_vertices - 1``.
    edges : frozenset[tuple[int, int]]
        Undirected edges, stored as ``(a, b)`` with ``a < b``.
    inputs, outputs : tuple[int, ...]
        Ordered input and output vertices.
    angles : dict[int, float]
        Measurement angle (radians) per non-output vertex.
    planes : dict[int, Plane]
        Measurement plane per non-output vertex.

    Treat instances as immutable; they are safe to share between threads.
    """

    n_vertices: int
    edges: frozenset[tuple[int, int]]
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    angles: dict[int, float]
    planes: dict[int, Plane]
    adjacency: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        adj = [0] * self.n_vertices
        for a, b in self.edges:
            if 0 <= a < self.n_vertices and 0 <= b < self.n_vertices and a != b:
                adj[a] |= 1 << b
                adj[b] |= 1 << a
        object.__setattr__(self, "adjacency", tuple(adj))

    @property
    def vertices(self) -> range:
        return range(self.n_vertices)

    @property
    def non_outputs(self) -> tuple[int, ...]:
        out = set(self.outputs)
        return tuple(v for v in self.vertices if v not in out)

    @property
    def non_inputs(self) -> tuple[int, ...]:
        inp = set(self.inputs)
        return tuple(v for v in self.vertices if v not in inp)

    def neighbors(self, v: int) -> frozenset[int]:
        if not 0 <= v < self.n_vertices:
            raise ValueError(f"unknown vertex {v}")
        mask = self.adjacency[v]
        return frozenset(w for w in self.vertices if mask >> w & 1)

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges


def make_graph(
    n: int,
    edges: Iterable[tuple[int, int]],
    inputs: Sequence[int],
    outputs: Sequence[int],
    angles: Mapping[int, float] | None = None,
    planes: Mapping[int, Plane] | None = None,
) -> OpenGraph:
    """Build an :class:`OpenGraph`, normalising edges and defaulting planes to XY.

    Missing angles default to 0 on non-outputs.  No validity judgement is
    made here; see :func:`validate`.
    """
    edge_set = frozenset((min(a, b), max(a, b)) for a, b in edges)
    outs = tuple(outputs)
    out_set = set(outs)
    angle_map = {v: 0.0 for v in range(n) if v not in out_set}
    if angles:
        angle_map.update({v: float(a) for v, a in angles.items()})
    plane_map = {v: Plane.XY for v in range(n) if v not in out_set}
    if planes:
        plane_map.update(dict(planes))
    return OpenGraph(n, edge_set, tuple(inputs), outs, angle_map, plane_map)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple[str, ...]


def validate(graph: OpenGraph) -> ValidationReport:
    """Check the structural invariants of an open graph; report, don't raise."""
    problems: list[str] = []
    n = graph.n_vertices
    if n <= 0:
        problems.append("graph has no vertices")

    def in_range(v: int) -> bool:
        return 0 <= v < n

    for a, b in sorted(graph.edges):
        if a == b:
            problems.append(f"self-loop at vertex {a + 1}")
        if not in_range(a) or not in_range(b):
            problems.append(f"edge ({a + 1},{b + 1}) uses an unknown vertex")
    for name, seq in (("inputs", graph.inputs), ("outputs", graph.outputs)):
        if len(set(seq)) != len(seq):
            problems.append(f"duplicate vertices in {name}")
        for v in seq:
            if not in_range(v):
                problems.append(f"unknown vertex {v + 1} in {name}")
    if len(graph.outputs) < len(graph.inputs):
        problems.append(
            "information loss: fewer outputs than inputs "
            f"({len(graph.outputs)} < {len(graph.inputs)})"
        )
    out_set = set(graph.outputs)
    for v in graph.vertices:
        if v in out_set:
            if v in graph.angles:
                problems.append(f"output vertex {v + 1} carries a measurement angle")
            if v in graph.planes:
                problems.append(f"output vertex {v + 1} carries a measurement plane")
        else:
            if v not in graph.angles:
                problems.append(f"non-output vertex {v + 1} has no measurement angle")
            if v not in graph.planes:
                problems.append(f"non-output vertex {v + 1} has no measurement plane")
    return ValidationReport(not problems, tuple(problems))


def odd_connectivity(graph: OpenGraph, vertex_set: Iterable[int], v: int) -> bool:
    """True when ``v`` has an odd number of edges into ``vertex_set``."""
    if not 0 <= v < graph.n_vertices:
        raise ValueError(f"unknown vertex {v}")
    mask = 0
    for w in vertex_set:
        if not 0 <= w < graph.n_vertices:
            raise ValueError(f"unknown vertex {w}")
        mask |= 1 << w
    return bool((graph.adjacency[v] & mask).bit_count() & 1)


def is_clifford_angle(theta: float, tol: float = CLIFFORD_TOL) -> bool:
    """True when ``theta`` is a multiple of pi/2 within ``tol``."""
    r = math.remainder(theta, math.pi / 2)
    return abs(r) < tol


# ---------------------------------------------------------------------------
# standard generators


def generate_chain(n: int, angles: Sequence[float]) -> OpenGraph:
    """Path graph 0-1-...-(n-1) with input 0 and output n-1.

    ``angles`` must have length ``n``; the last entry (the output vertex)
    is ignored since outputs are not measured.
    """
    if n < 2:
        raise ValueError("a chain needs at least 2 vertices")
    if len(angles) != n:
        raise ValueError(f"expected {n} angles, got {len(angles)}")
    edges = [(v, v + 1) for v in range(n - 1)]
    angle_map = {v: float(angles[v]) for v in range(n - 1)}
    return make_graph(n, edges, inputs=[0], outputs=[n - 1], angles=angle_map)


def generate_cluster(rows: int, cols: int, angles: Mapping[int, float] | None = None) -> OpenGraph:
    """Square-lattice cluster with inputs on the first column, outputs on the last.

    Vertex ``col * rows + row``; all angles default to 0.
    """
    if rows < 1 or cols < 2:
        raise ValueError("cluster needs rows >= 1 and cols >= 2")
    n = rows * cols

    def vid(row: int, col: int) -> int:
        return col * rows + row

    edges = []
    for c in range(cols):
        for r in range(rows):
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
    inputs = [vid(r, 0) for r in range(rows)]
    outputs = [vid(r, cols - 1) for r in range(rows)]
    return make_graph(n, edges, inputs, outputs, angles=angles)


def generate_zigzag(n: int) -> OpenGraph:
    """Zig-zag graph: inputs 0..n-1, outputs n..2n-1.

    Input ``v`` connects to output ``n + v``; input ``v + 1`` additionally
    connects to output ``n + v``.  With this wiring the whole family of
    gflows ``g^r`` (see :func:`agqc.gflow.zigzag_gflow_family`) is valid,
    with depth ``ceil(n / r)`` and stabilizer-product support ``r + 2``
    on interior vertices.
    """
    if n < 1:
        raise ValueError("zigzag needs n >= 1")
    edges = [(v, n + v) for v in range(n)]
    edges += [(v + 1, n + v) for v in range(n - 1)]
    return make_graph(2 * n, edges, inputs=range(n), outputs=range(n, 2 * n))


#: 0-based vertex ids of the two-row CNOT graph, row a then row b.
CNOT_VERTEX_NAMES = ("a1", "a2", "a3", "b1", "b2", "b3")


def generate_cnot_graph() -> OpenGraph:
    """Two three-vertex rows joined by a rung at the middle column.

    Vertices (a1, a2, a3, b1, b2, b3) = (0, 1, 2, 3, 4, 5); inputs (a1, b1),
    outputs (a3, b3); all angles 0.
    """
    a1, a2, a3, b1, b2, b3 = range(6)
    edges = [(a1, a2), (a2, a3), (b1, b2), (b2, b3), (a2, b2)]
    return make_graph(6, edges, inputs=[a1, b1], outputs=[a3, b3])


# ---------------------------------------------------------------------------
# file format

_GRAPH_FIELDS = {"n", "edges", "inputs", "outputs", "angles", "planes"}


class GraphFormatError(ValueError):
    """Raised when a graph file does not conform to the documented schema."""


def graph_to_json(graph: OpenGraph) -> str:
    """Serialize to the documented JSON schema (1-based vertex labels)."""
    doc = {
        "n": graph.n_vertices,
        "edges": [[a + 1, b + 1] for a, b in sorted(graph.edges)],
        "inputs": [v + 1 for v in graph.inputs],
        "outputs": [v + 1 for v in graph.outputs],
        "angles": {str(v + 1): graph.angles[v] for v in sorted(graph.angles)},
        "planes": {str(v + 1): graph.planes[v].value for v in sorted(graph.planes)},
    }
    return json.dumps(doc, indent=2)


def graph_from_json(text: str) -> OpenGraph:
    """Parse the JSON graph format; rejects unknown fields and malformed entries."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphFormatError("top level must be an object")
    unknown = set(doc) - _GRAPH_FIELDS
    if unknown:
        raise GraphFormatError(f"unknown fields: {sorted(unknown)}")
    for key in ("n", "edges", "inputs", "outputs", "angles"):
        if key not in doc:
            raise GraphFormatError(f"missing field '{key}'")
    n = doc["n"]
    if not isinstance(n, int) or n <= 0:
        raise GraphFormatError("'n' must be a positive integer")

    def vertex(label: object) -> int:
        if not isinstance(label, int) or not 1 <= label <= n:
            raise GraphFormatError(f"vertex label {label!r} out of range 1..{n}")
        return label - 1

    edges = []
    seen = set()
    for pair in doc["edges"]:
        if not isinstance(pair, list) or len(pair) != 2:
            raise GraphFormatError(f"edge {pair!r} must be a pair")
        a, b = vertex(pair[0]), vertex(pair[1])
        key = (min(a, b), max(a, b))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {pair!r}")
        seen.add(key)
        edges.append(key)
    inputs = [vertex(v) for v in doc["inputs"]]
    outputs = [vertex(v) for v in doc["outputs"]]
    angles = {}
    for label, theta in doc["angles"].items():
        if not isinstance(theta, (int, float)):
            raise GraphFormatError(f"angle for vertex {label} must be a number")
        angles[vertex(int(label))] = float(theta)
    planes = {}
    for label, name in doc.get("planes", {}).items():
        try:
            planes[vertex(int(label))] = Plane(name)
        except ValueError as exc:
            raise GraphFormatError(f"unknown plane {name!r}") from exc
    out_set = set(outputs)
    plane_map = {v: Plane.XY for v in range(n) if v not in out_set}
    plane_map.update(planes)
    angle_map = dict(angles)
    return OpenGraph(
        n, frozenset(edges), tuple(inputs), tuple(outputs), angle_map, plane_map
    )
