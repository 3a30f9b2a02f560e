"""Build adiabatic replacement schedules from a graph + gflow, and compute
the analytic quantities attached to them: ||dH/ds||, analytic gaps, runtime
bounds, Hamiltonian degree, and perturbation-gadget parameters.

Sign convention: every Hamiltonian term carries ``-gamma``; energies are
reported in units of gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import _gf2
from .gflow import Gflow, verify_gflow
from .graph import OpenGraph, Plane, is_clifford_angle
from .pauli import (
    Commutation,
    NonCliffordAngleError,
    PauliString,
    RotatedPauliOp,
    commutes,
    one_step_update,
    single,
    stabilizer_set,
)


class CompileError(ValueError):
    """A schedule cannot be built from the given inputs."""


class InvalidGflowError(CompileError):
    """The supplied gflow fails verification."""


@dataclass(frozen=True)
class ScheduleStep:
    """One adiabatic transition ``H(s) = -gamma [static + (1-s) removed + s introduced]``.

    ``removed`` and ``introduced`` are keyed by the vertex whose replacement
    the entry belongs to.  In strip mode ``removed`` may contain additional
    entries that are deleted with no replacement.
    """

    removed: dict[int, RotatedPauliOp]
    introduced: dict[int, RotatedPauliOp]
    static_terms: tuple[RotatedPauliOp, ...]
    strip: bool = False

    @property
    def replaced_vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self.introduced))

    @property
    def u_size(self) -> int:
        """Number of simultaneous replacements |U|."""
        return len(self.introduced)

    def all_terms(self, s_removed: bool = True, s_introduced: bool = True) -> list[RotatedPauliOp]:
        terms = list(self.static_terms)
        if s_removed:
            terms += list(self.removed.values())
        if s_introduced:
            terms += list(self.introduced.values())
        return terms

    def is_commuting_replacement(self) -> bool:
        """Commuting-replacement form: each removed/introduced pair anticommutes,
        and every other pairing of step terms commutes."""
        if self.strip or set(self.removed) != set(self.introduced):
            return False
        items = sorted(self.removed)
        for v in items:
            if commutes(self.removed[v], self.introduced[v]) is not Commutation.ANTICOMMUTE:
                return False
        movers = [self.removed[v] for v in items] + [self.introduced[v] for v in items]
        for i, v in enumerate(items):
            for j, w in enumerate(items):
                if v != w:
                    if commutes(self.removed[v], self.introduced[w]) is not Commutation.COMMUTE:
                        return False
                    if j > i and commutes(self.removed[v], self.removed[w]) is not Commutation.COMMUTE:
                        return False
        for st in self.static_terms:
            for m in movers:
                if commutes(st, m) is not Commutation.COMMUTE:
                    return False
        return True


@dataclass(frozen=True)
class Schedule:
    """Ordered adiabatic steps over a fixed graph and gflow."""

    steps: tuple[ScheduleStep, ...]
    gamma: float
    graph: OpenGraph
    gflow: Gflow

    @property
    def n_qubits(self) -> int:
        return self.graph.n_vertices


@dataclass(frozen=True)
class AdiabaticBudget:
    """Parameters of the adiabatic runtime bound.

    ``c_delta`` is a configuration constant (the bound's prefactor is not
    known in closed form); all absolute times are multiples of ``tau0``.
    """

    delta: float = 1.0
    epsilon: float = 0.01
    c_delta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.epsilon <= 0 or self.c_delta <= 0 or self.gamma <= 0:
            raise ValueError("epsilon, c_delta and gamma must be positive")

    @property
    def tau0(self) -> float:
        """Reference time for a single replacement: c / (eps 2^{1+d/2} gamma)."""
        return self.c_delta / (self.epsilon * 2 ** (1 + self.delta / 2) * self.gamma)


def _require_valid_gflow(graph: OpenGraph, gf: Gflow) -> None:
    for v, plane in graph.planes.items():
        if plane is not Plane.XY:
            raise CompileError(f"only XY-plane graphs compile (vertex {v} is {plane.value})")
    report = verify_gflow(graph, gf)
    if not report.valid:
        raise InvalidGflowError(f"gflow fails verification: {report.violations[:3]}")


def _x_term(n: int, v: int) -> RotatedPauliOp:
    return RotatedPauliOp.from_pauli(single(n, v, "X"))


def compile_stepwise(graph: OpenGraph, gf: Gflow, gamma: float = 1.0) -> Schedule:
    """One step per non-output vertex, in measurement order: T_v -> X_v."""
    _require_valid_gflow(graph, gf)
    n = graph.n_vertices
    terms = stabilizer_set(graph, gf)
    order = gf.measurement_order()
    steps = []
    for i, v in enumerate(order):
        static = [_x_term(n, u) for u in order[:i]] + [terms[w] for w in order[i + 1:]]
        steps.append(
            ScheduleStep({v: terms[v]}, {v: _x_term(n, v)}, tuple(static))
        )
    return Schedule(tuple(steps), gamma, graph, gf)


def compile_layered(graph: OpenGraph, gf: Gflow, gamma: float = 1.0) -> Schedule:
    """One step per layer; all T_v of a layer are replaced simultaneously.

    The simultaneous replacement is sound only when ``[T_u, X_v] = 0`` for
    u != v inside the layer; each layer is checked and a violation rejects
    the compilation.
    """
    _require_valid_gflow(graph, gf)
    n = graph.n_vertices
    terms = stabilizer_set(graph, gf)
    by_layer: dict[int, list[int]] = {}
    for v in gf.layer:
        by_layer.setdefault(gf.layer[v], []).append(v)
    layers = [sorted(by_layer[k]) for k in sorted(by_layer)]
    for members in layers:
        for u in members:
            for v in members:
                if u != v and commutes(terms[u], _x_term(n, v)) is not Commutation.COMMUTE:
                    raise CompileError(
                        f"layer {sorted(members)} not simultaneously replaceable: "
                        f"[T_{u}, X_{v}] != 0"
                    )
    steps = []
    done: list[int] = []
    for i, members in enumerate(layers):
        later = [w for ms in layers[i + 1:] for w in ms]
        static = [_x_term(n, u) for u in done] + [terms[w] for w in later]
        steps.append(
            ScheduleStep(
                {v: terms[v] for v in members},
                {v: _x_term(n, v) for v in members},
                tuple(static),
            )
        )
        done += members
    return Schedule(tuple(steps), gamma, graph, gf)


def compile_one_step(graph: OpenGraph, gf: Gflow, gamma: float = 1.0) -> Schedule:
    """Single simultaneous replacement of the swept stabilizers T~_v by X_v.

    Requires Clifford angles; see :func:`agqc.pauli.one_step_update`.
    """
    _require_valid_gflow(graph, gf)
    for v, theta in graph.angles.items():
        if not is_clifford_angle(theta):
            raise NonCliffordAngleError(
                f"angle {theta} at vertex {v} is not a multiple of pi/2; the "
                "one-step schedule exists only for Clifford angles"
            )
    n = graph.n_vertices
    updated = one_step_update(stabilizer_set(graph, gf), gf)
    step = ScheduleStep(
        dict(updated), {v: _x_term(n, v) for v in updated}, ()
    )
    return Schedule((step,), gamma, graph, gf)


# ---------------------------------------------------------------------------
# reordered schedules


@dataclass(frozen=True)
class StepFeasibility:
    """Protection analysis of one reordered fixed-term step.

    ``conserved_products`` generates the group of products of the original
    stabilizer terms that commute with every Hamiltonian term of this step
    and of all earlier steps (each product is the vertex set of its
    factors).  ``protecting_product`` names one conserved product that
    certifies the step, when protection holds.
    """

    vertex: int
    frustrated: bool
    protected: bool
    conserved_products: tuple[frozenset[int], ...]
    protecting_product: frozenset[int] | None
    detail: str


@dataclass(frozen=True)
class ReorderReport:
    steps: tuple[StepFeasibility, ...]

    @property
    def feasible(self) -> bool:
        return all(s.protected for s in self.steps)


def _as_permutation(order: Sequence[int], non_outputs: Sequence[int]) -> list[int]:
    if sorted(order) != sorted(non_outputs):
        raise CompileError(
            f"order {list(order)} is not a permutation of the non-outputs "
            f"{sorted(non_outputs)}"
        )
    return list(order)


def compile_reordered_fixed(
    graph: OpenGraph, gf: Gflow, order: Sequence[int], gamma: float = 1.0
) -> tuple[Schedule, ReorderReport]:
    """Replace T_v -> X_v in a caller-chosen order, keeping every term.

    Infeasibility is reported, never raised.  A step is *protected* when the
    tracked eigenvalue of the replaced T_v is still certified (+1) at the
    start of the step and every other certified product survives the step;
    certificates are products of the original stabilizer terms, maintained
    as a GF(2) group filtered by anticommutation with each introduced X.
    The T1 T3 certificate of the out-of-order chain is exactly such a product.

    At non-Clifford angles a term whose twist sits on a replaced vertex is
    in a neither-commuting relation with that X; such terms cannot enter
    any certificate, which makes the symbolic report conservative: a step
    it flags may still be protected by a non-closing gap (the chain's
    second-site replacement with gap ``delta1_gap``) - the spectral scan is
    the authority there.
    """
    _require_valid_gflow(graph, gf)
    n = graph.n_vertices
    terms = stabilizer_set(graph, gf)
    seq = _as_permutation(order, graph.non_outputs)
    vertices = sorted(terms)
    vindex = {v: i for i, v in enumerate(vertices)}

    def to_set(mask: int) -> frozenset[int]:
        return frozenset(vertices[i] for i in range(len(vertices)) if mask >> i & 1)

    # commutation of the original T's against each introduced X_v: products
    # must overlap the anticommuting set evenly and avoid "neither" terms
    anti_mask = {}
    neither_masks: dict[int, list[int]] = {}
    for v in seq:
        xv = _x_term(n, v)
        mask = 0
        neithers = []
        for w in vertices:
            rel = commutes(terms[w], xv)
            if rel is Commutation.ANTICOMMUTE:
                mask |= 1 << vindex[w]
            elif rel is Commutation.NEITHER:
                neithers.append(1 << vindex[w])
        anti_mask[v] = mask
        neither_masks[v] = neithers

    cert_basis = [1 << i for i in range(len(vertices))]
    steps = []
    feas = []
    replaced: list[int] = []
    for k, v in enumerate(seq):
        remaining = [w for w in seq[k + 1:]]
        static = [terms[w] for w in sorted(remaining)] + [_x_term(n, u) for u in replaced]
        step = ScheduleStep({v: terms[v]}, {v: _x_term(n, v)}, tuple(static))
        steps.append(step)

        xv = _x_term(n, v)
        tv = terms[v]
        frustrated = any(
            commutes(st, xv) is not Commutation.COMMUTE
            or commutes(st, tv) is not Commutation.COMMUTE
            for st in static
        )
        tracked_available = _gf2.in_span(cert_basis, 1 << vindex[v])
        new_basis = _gf2.kernel_filter(cert_basis, anti_mask[v])
        for singleton in neither_masks[v]:
            new_basis = _gf2.kernel_filter(new_basis, singleton)
        protecting = None
        if not tracked_available:
            protected = False
            detail = (
                f"the +1 eigenvalue of T_{v + 1} is no longer certified when this "
                "step starts, so the tracked replacement direction is unpinned"
            )
        elif frustrated:
            covering = [b for b in new_basis if b >> vindex[v] & 1]
            protected = bool(covering)
            if protected:
                protecting = to_set(covering[0])
                names = " ".join("T" + str(w + 1) for w in sorted(protecting))
                detail = (
                    "frustrated step: a static term anticommutes with the replacement "
                    f"pair; the conserved product {names} splits the degenerate crossing"
                )
            else:
                detail = (
                    "frustrated step with no conserved product of stabilizer terms "
                    "covering the replaced vertex: the degenerate crossing is unprotected"
                )
        else:
            protected = True
            detail = "clean replacement: all static terms commute with the pair"
        feas.append(
            StepFeasibility(
                vertex=v,
                frustrated=frustrated,
                protected=protected,
                conserved_products=tuple(
                    to_set(b) for b in sorted(new_basis) if b
                ),
                protecting_product=protecting,
                detail=detail,
            )
        )
        cert_basis = new_basis
        replaced.append(v)
    return Schedule(tuple(steps), gamma, graph, gf), ReorderReport(tuple(feas))


def compile_reordered_strip(
    graph: OpenGraph,
    gf: Gflow,
    order: Sequence[int],
    gamma: float = 1.0,
    variant: str = "delete",
) -> Schedule:
    """Reordered schedule that mimics measurement: terms anticommuting with
    the introduced X_v do not survive the step.

    ``variant="delete"`` (canonical) ramps the anticommuting terms out with
    no replacement; the bookkeeping keeps, for each deleted vertex u, the
    conserved product (deleted term) * (replaced term), which is what the
    step for u later ramps out against X_u.  ``variant="rewrite"`` instead
    keeps the terms in the Hamiltonian with their letters at the measured
    site erased (entanglement removal); both end in the same Hamiltonians
    and show the same gap.
    """
    if variant not in ("delete", "rewrite"):
        raise CompileError(f"unknown strip variant {variant!r}")
    _require_valid_gflow(graph, gf)
    n = graph.n_vertices
    seq = _as_permutation(order, graph.non_outputs)
    current = dict(stabilizer_set(graph, gf))
    in_hamiltonian = {v: True for v in current}
    introduced_so_far: list[int] = []
    steps = []
    for v in seq:
        xv = _x_term(n, v)
        target = current.pop(v)
        in_hamiltonian.pop(v)
        if commutes(target, xv) is not Commutation.ANTICOMMUTE:
            raise CompileError(
                f"tracked term for vertex {v + 1} does not anticommute with X_{v + 1}; "
                "strip schedule has no valid replacement ramp"
            )
        removed = {v: target}
        introduced = {v: xv}
        for u in sorted(current):
            if commutes(current[u], xv) is Commutation.COMMUTE:
                continue
            if variant == "delete":
                if in_hamiltonian[u]:
                    removed[u] = current[u]
                    in_hamiltonian[u] = False
                # conserved completion: anticommuting * anticommuting commutes with X_v
                current[u] = current[u].mul(target)
            else:
                old = current[u]
                new = _erase_site(old, v)
                if in_hamiltonian[u]:
                    removed[u] = old
                    introduced[u] = new
                current[u] = new
        static = [
            current[u]
            for u in sorted(current)
            if in_hamiltonian[u] and u not in introduced
        ]
        static += [_x_term(n, u) for u in introduced_so_far]
        steps.append(ScheduleStep(removed, introduced, tuple(static), strip=True))
        introduced_so_far.append(v)
    return Schedule(tuple(steps), gamma, graph, gf)


def _erase_site(op: RotatedPauliOp, v: int) -> RotatedPauliOp:
    """Drop the tensor factor at site v (entanglement removal)."""
    if any(site == v for site, _ in op.twist):
        raise NonCliffordAngleError(
            f"cannot erase site {v + 1}: a non-Clifford twist sits there"
        )
    bit = 1 << v
    p = op.pauli
    stripped = PauliString(p.n, p.x & ~bit, p.z & ~bit, p.phase_exp)
    return RotatedPauliOp(stripped, op.twist)


# ---------------------------------------------------------------------------
# analytic quantities


def step_norm_hdot(step: ScheduleStep, gamma: float = 1.0) -> float:
    """``||dH/ds|| = |U| gamma`` for a commuting-replacement step."""
    if not step.is_commuting_replacement():
        raise CompileError(
            "step is not in commuting-replacement form; use the numerical "
            "bound from the simulator instead"
        )
    return step.u_size * gamma

def step_gap_analytic(step: ScheduleStep, gamma: float = 1.0, s: float = 0.5) -> float:
    """Gap ``2 gamma sqrt((1-s)^2 + s^2)`` of a commuting-replacement step.

    Independent of |U|; minimal (sqrt(2) gamma) at s = 1/2.
    """
    if not step.is_commuting_replacement():
        raise CompileError(
            "step is not in commuting-replacement form; diagonalize numerically"
        )
    return 2.0 * gamma * math.hypot(1.0 - s, s)


def delta1_gap(theta2: float, s: float) -> float:
    """Closed-form gap of the second-site out-of-order replacement on a chain.

    ``Delta_1 = sqrt(2(1-s+s^2) + G) - sqrt(2(1-s+s^2) - G)`` with
    ``G = sqrt(2 s^2 cos(2 theta2) + 4 - 8 s + 6 s^2)``; radicands are
    clamped at zero against rounding.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    g2 = 2.0 * s * s * math.cos(2.0 * theta2) + 4.0 - 8.0 * s + 6.0 * s * s
    g = math.sqrt(max(0.0, g2))
    a = 2.0 * (1.0 - s + s * s)
    return math.sqrt(max(0.0, a + g)) - math.sqrt(max(0.0, a - g))


def delta1_min(theta2: float) -> float:
    """Minimum of :func:`delta1_gap` over s, attained at s = 1 - cos(theta2)/2."""
    return delta1_gap(theta2, 1.0 - 0.5 * math.cos(theta2))


def runtime_bound(
    step: ScheduleStep,
    budget: AdiabaticBudget,
    gap: float | None = None,
    hdot_norm: float | None = None,
) -> float:
    """Adiabatic runtime bound ``c ||dH||^{1+d} / (eps gap^{2+d})``.

    With no explicit gap, the step must be a commuting replacement and the
    bound reduces exactly to ``tau0 * |U|^{1+delta}``.  A non-positive gap
    reports an infinite bound (the reordering failure mode).
    """
    if gap is None:
        if not step.is_commuting_replacement():
            raise CompileError(
                "no analytic gap for a non-commuting step; pass gap= from a "
                "numerical spectral scan"
            )
        return budget.tau0 * step.u_size ** (1.0 + budget.delta)
    if gap <= 0.0:
        return math.inf
    if hdot_norm is None:
        hdot_norm = step_norm_hdot(step, budget.gamma)
    return (
        budget.c_delta
        * hdot_norm ** (1.0 + budget.delta)
        / (budget.epsilon * gap ** (2.0 + budget.delta))
    )


def hamiltonian_degree(schedule: Schedule) -> int:
    """Maximum support size over the initial Hamiltonian's terms (k_max)."""
    if not schedule.steps:
        return 0
    first = schedule.steps[0]
    terms = list(first.static_terms) + list(first.removed.values())
    return max((op.degree for op in terms), default=0)


@dataclass(frozen=True)
class GadgetParameters:
    coefficient: float
    lambda_max: float
    converges: bool


def gadget_parameters(k: int, lam: float) -> GadgetParameters:
    """Perturbation-gadget effective coupling ``-k(-lam)^k / (k-1)!`` and the
    convergence threshold ``lam < (k-1) / (4k)`` for simulating a degree-k term."""
    if k < 2:
        raise ValueError("gadgets require degree k >= 2")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    coefficient = -k * (-lam) ** k / math.factorial(k - 1)
    lambda_max = (k - 1) / (4.0 * k)
    return GadgetParameters(coefficient, lambda_max, lam < lambda_max)
