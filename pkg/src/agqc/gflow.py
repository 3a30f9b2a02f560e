"""Gflow verification, layer/depth/size accounting, search, and the zig-zag family.

Time convention: layer 0 is measured first, and ``v < w`` means *v is
measured before w*.  Output vertices sit beyond every non-output layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import _gf2
from .graph import OpenGraph, Plane, odd_connectivity

#: Sentinel layer assigned to outputs in comparisons (beyond all real layers).
OUTPUT_LAYER = float("inf")


class GflowStructureError(ValueError):
    """The gflow object does not structurally match the graph."""


@dataclass(frozen=True)
class Gflow:
    """Correcting-set map ``g`` and measurement-layer assignment.

    ``g`` maps every non-output vertex to its correcting set (a subset of
    the non-input vertices); ``layer`` maps every non-output vertex to its
    measurement round, 0 measured first.  Outputs appear in neither map.
    """

    g: dict[int, frozenset[int]]
    layer: dict[int, int]

    def layer_of(self, v: int) -> float:
        """Layer index of ``v``; outputs report the +inf sentinel."""
        return self.layer.get(v, OUTPUT_LAYER)

    @property
    def depth(self) -> int:
        return len(set(self.layer.values()))

    def measurement_order(self) -> tuple[int, ...]:
        """Non-outputs sorted by (layer, vertex index)."""
        return tuple(sorted(self.layer, key=lambda v: (self.layer[v], v)))

    def max_correcting_set_size(self) -> int:
        """Largest raw correcting-set cardinality |g(v)| (not the support size)."""
        return max((len(s) for s in self.g.values()), default=0)


@dataclass(frozen=True)
class GflowReport:
    """Outcome of :func:`verify_gflow`.

    ``max_size`` is the gflow size in the stabilizer-product sense: the
    largest support of ``prod_{w in g(v)} K_w`` over non-outputs v.  The raw
    correcting-set cardinality is deliberately a separate notion, see
    :meth:`Gflow.max_correcting_set_size`.
    """

    valid: bool
    violations: tuple[tuple[int, str, str], ...]
    depth: int
    max_size: int
    layer_sizes: tuple[int, ...]


def _check_structure(graph: OpenGraph, gf: Gflow) -> None:
    # Correcting sets containing inputs are caught when building T_v (no
    # generator exists there), not here: the axioms are still checkable.
    non_outputs = set(graph.non_outputs)
    if set(gf.g) != non_outputs:
        missing = non_outputs - set(gf.g)
        extra = set(gf.g) - non_outputs
        raise GflowStructureError(
            f"g must be defined exactly on non-outputs (missing {sorted(missing)}, "
            f"extra {sorted(extra)})"
        )
    if set(gf.layer) != non_outputs:
        raise GflowStructureError("layer must be defined exactly on non-outputs")
    for v, corr in gf.g.items():
        for w in corr:
            if not 0 <= w < graph.n_vertices:
                raise GflowStructureError(f"g({v}) contains unknown vertex {w}")


def verify_gflow(graph: OpenGraph, gf: Gflow) -> GflowReport:
    """Check the gflow axioms G1-G3 for every non-output vertex.

    G1: every w in g(v), w != v, lies in a strictly later layer.
    G2: every vertex w != v with layer(w) <= layer(v) is evenly connected
    to g(v) (same-layer vertices included).
    G3 depends on the measurement plane of v: XY requires v not in g(v) and
    g(v) oddly connected to v; XZ requires v in g(v) and odd connectivity;
    YZ requires v in g(v) and even connectivity.

    Structural mismatches raise :class:`GflowStructureError`; axiom failures
    are reported, not raised.
    """
    _check_structure(graph, gf)
    violations: list[tuple[int, str, str]] = []
    for v in sorted(gf.g):
        corr = gf.g[v]
        lv = gf.layer_of(v)
        for w in sorted(corr):
            if w != v and gf.layer_of(w) <= lv:
                violations.append(
                    (v, "G1", f"{w} in g({v}) is not in the future of {v}")
                )
        for w in gf.layer:
            if w != v and gf.layer_of(w) <= lv and odd_connectivity(graph, corr, w):
                violations.append(
                    (v, "G2", f"{w} is oddly connected to g({v}) but not after {v}")
                )
        plane = graph.planes.get(v, Plane.XY)
        in_own = v in corr
        odd_self = odd_connectivity(graph, corr, v)
        if plane is Plane.XY:
            if in_own:
                violations.append((v, "G3", f"XY plane requires {v} not in g({v})"))
            if not odd_self:
                violations.append((v, "G3", f"g({v}) must be oddly connected to {v}"))
        elif plane is Plane.XZ:
            if not in_own:
                violations.append((v, "G3", f"XZ plane requires {v} in g({v})"))
            if not odd_self:
                violations.append((v, "G3", f"g({v}) must be oddly connected to {v}"))
        else:
            if not in_own:
                violations.append((v, "G3", f"YZ plane requires {v} in g({v})"))
            if odd_self:
                violations.append((v, "G3", f"g({v}) must be evenly connected to {v}"))
    sizes, depth = layers_and_depth(gf)
    max_size = max((gflow_size(graph, gf, v) for v in gf.g), default=0)
    return GflowReport(not violations, tuple(violations), depth, max_size, sizes)


def layers_and_depth(gf: Gflow) -> tuple[tuple[int, ...], int]:
    """Per-layer vertex counts (ascending layer index) and the depth."""
    counts: dict[int, int] = {}
    for lv in gf.layer.values():
        counts[lv] = counts.get(lv, 0) + 1
    sizes = tuple(counts[k] for k in sorted(counts))
    return sizes, len(sizes)


def gflow_size(graph: OpenGraph, gf: Gflow, v: int) -> int:
    """Support size of ``prod_{w in g(v)} K_w``, the gflow size |g(v)|."""
    if v not in gf.g:
        raise ValueError(f"vertex {v} is an output (or unknown); it has no g(v)")
    x_mask = 0
    z_mask = 0
    for w in gf.g[v]:
        x_mask ^= 1 << w
        z_mask ^= graph.adjacency[w]
    return (x_mask | z_mask).bit_count()


def gflow_lines(gf: Gflow) -> frozenset[tuple[int, int]]:
    """Directed edges (v, w) for every w in g(v)."""
    return frozenset((v, w) for v, corr in gf.g.items() for w in corr)


def find_gflow(graph: OpenGraph) -> Gflow | None:
    """Maximally delayed gflow of an XY-plane open graph, or None.

    Backward construction from the outputs: in each round, a vertex u gets
    a correcting set drawn from the already-processed non-inputs by solving
    the parity condition Odd(S) restricted to unprocessed vertices = {u}
    over GF(2).  The result has the minimum possible number of layers.
    Ties are broken deterministically (free variables zero, columns in
    vertex order).
    """
    for v, plane in graph.planes.items():
        if plane is not Plane.XY:
            raise ValueError(f"find_gflow supports XY-plane graphs only ({v} is {plane.value})")
    n = graph.n_vertices
    processed = set(graph.outputs)
    inputs = set(graph.inputs)
    g: dict[int, frozenset[int]] = {}
    back_layer: dict[int, int] = {}
    k = 0
    while len(processed) < n:
        k += 1
        candidates = sorted(v for v in processed if v not in inputs)
        targets = sorted(v for v in range(n) if v not in processed)
        rows = []
        for w in targets:
            row = 0
            for j, c in enumerate(candidates):
                if graph.adjacency[w] >> c & 1:
                    row |= 1 << j
            rows.append(row)
        found: dict[int, frozenset[int]] = {}
        for u in targets:
            rhs = [1 if w == u else 0 for w in targets]
            sol = _gf2.solve(rows, rhs, len(candidates))
            if sol is not None:
                found[u] = frozenset(
                    candidates[j] for j in range(len(candidates)) if sol >> j & 1
                )
        if not found:
            return None
        for u, corr in found.items():
            g[u] = corr
            back_layer[u] = k
        processed |= set(found)
    if not back_layer:
        return Gflow({}, {})
    k_max = max(back_layer.values())
    layer = {v: k_max - kb for v, kb in back_layer.items()}
    return Gflow(g, layer)


def zigzag_gflow_family(n: int, r: int) -> Gflow:
    """The gflow ``g^r`` on the zig-zag graph of 2n vertices, 1 <= r <= n.

    ``g^r(v)`` is the run of r outputs starting at ``n + v`` (clamped at the
    last vertex), and layers group the inputs into consecutive blocks of r,
    giving depth ``ceil(n / r)``.
    """
    if not 1 <= r <= n:
        raise ValueError(f"r must satisfy 1 <= r <= {n}, got {r}")
    g = {v: frozenset(range(n + v, min(n + v + r, 2 * n))) for v in range(n)}
    layer = {v: v // r for v in range(n)}
    return Gflow(g, layer)


# ---------------------------------------------------------------------------
# file format (1-based labels, non-outputs only)

_GFLOW_FIELDS = {"g", "layer"}


class GflowFormatError(ValueError):
    """Raised when a gflow file does not conform to the documented schema."""


def gflow_to_json(gf: Gflow) -> str:
    doc = {
        "g": {str(v + 1): sorted(w + 1 for w in gf.g[v]) for v in sorted(gf.g)},
        "layer": {str(v + 1): gf.layer[v] for v in sorted(gf.layer)},
    }
    return json.dumps(doc, indent=2)


def gflow_from_json(text: str) -> Gflow:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GflowFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GflowFormatError("top level must be an object")
    unknown = set(doc) - _GFLOW_FIELDS
    if unknown:
        raise GflowFormatError(f"unknown fields: {sorted(unknown)}")
    if "g" not in doc or "layer" not in doc:
        raise GflowFormatError("both 'g' and 'layer' are required")
    try:
        g = {
            int(v) - 1: frozenset(int(w) - 1 for w in ws) for v, ws in doc["g"].items()
        }
        layer = {int(v) - 1: int(k) for v, k in doc["layer"].items()}
    except (TypeError, ValueError) as exc:
        raise GflowFormatError(f"malformed entry: {exc}") from exc
    return Gflow(g, layer)
