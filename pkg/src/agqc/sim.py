"""Desk-scale exact numerics for schedules: dense Hamiltonians, spectral
scans, Schrodinger evolution with logical-unitary extraction, conserved
operator certification, leakage sweeps, and an MBQC reference simulation.

Everything here is dense and deterministic.  The basis convention is that
bit v of a state index is the computational basis state of vertex v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .compiler import Schedule
from .gflow import Gflow
from .graph import OpenGraph
from .logical import LogicalFrame, final_frame, initial_frame
from .pauli import (
    Commutation,
    PauliString,
    RotatedPauliOp,
    apply_op,
    commutes,
    correction_operator,
    projector_apply,
    to_matrix,
)

#: Hard cap on dense operators.
MAX_QUBITS = 14

#: Relative tolerance (in units of gamma) for counting degenerate levels.
DEGENERACY_TOL = 1e-9

#: Fixed seed of the reference vector used to pin logical basis states.
_BASIS_SEED = 2010

# Fourth-order commutator-free Magnus coefficients (two exponentials per
# substep, Gauss nodes).  Verified by an order-of-accuracy test.
_CF4_NODE = math.sqrt(3.0) / 6.0
_CF4_A1 = 0.25 + _CF4_NODE
_CF4_A2 = 0.25 - _CF4_NODE


class SizeCapError(ValueError):
    """The request exceeds the dense-simulation qubit cap."""


def _check_cap(n: int) -> None:
    if n > MAX_QUBITS:
        raise SizeCapError(f"{n} qubits exceeds the dense cap of {MAX_QUBITS}")


def _term_matrix_sum(terms: Iterable[RotatedPauliOp], n: int) -> np.ndarray:
    total = np.zeros((1 << n, 1 << n), dtype=complex)
    for op in terms:
        total += to_matrix(op)
    return total


def step_endpoint_matrices(
    schedule: Schedule, step_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) with H(s) = A + s B for the given step, including -gamma."""
    _check_cap(schedule.n_qubits)
    step = schedule.steps[step_index]
    n = schedule.n_qubits
    g = schedule.gamma
    static = _term_matrix_sum(step.static_terms, n)
    removed = _term_matrix_sum(step.removed.values(), n)
    introduced = _term_matrix_sum(step.introduced.values(), n)
    a = -g * (static + removed)
    b = -g * (introduced - removed)
    return a, b


def assemble(schedule: Schedule, step_index: int, s: float) -> np.ndarray:
    """Dense ``H(s) = -gamma [sum static + (1-s) sum removed + s sum introduced]``."""
    a, b = step_endpoint_matrices(schedule, step_index)
    return a + s * b


@dataclass(frozen=True)
class SpectralScan:
    """Exact spectra of one step across an s-grid.

    ``gap`` is the energy above the protected subspace,
    ``E[2^{|I|}] - E[0]``; ``gap_above_degenerate`` is the first gap above
    the measured ground degeneracy, which differs exactly at the degenerate
    crossings of reordered schedules.
    """

    s_grid: tuple[float, ...]
    energies: np.ndarray
    gap: np.ndarray
    gap_above_degenerate: np.ndarray
    ground_degeneracy: tuple[int, ...]


def spectral_scan(
    schedule: Schedule,
    step_index: int,
    s_grid: Sequence[float],
    n_levels: int | None = None,
) -> SpectralScan:
    """Diagonalize the step Hamiltonian on a grid of interpolation points."""
    a, b = step_endpoint_matrices(schedule, step_index)
    dim = a.shape[0]
    logical_dim = 1 << len(schedule.graph.inputs)
    keep = dim if n_levels is None else min(n_levels, dim)
    tol = DEGENERACY_TOL * schedule.gamma
    energies = np.empty((len(s_grid), keep))
    gaps = np.empty(len(s_grid))
    gaps_deg = np.empty(len(s_grid))
    degeneracy = []
    for i, s in enumerate(s_grid):
        evals = np.linalg.eigvalsh(a + s * b)
        energies[i] = evals[:keep]
        deg = int(np.sum(evals - evals[0] < tol))
        degeneracy.append(deg)
        gaps[i] = evals[logical_dim] - evals[0] if logical_dim < dim else 0.0
        gaps_deg[i] = evals[deg] - evals[0] if deg < dim else 0.0
    return SpectralScan(tuple(float(s) for s in s_grid), energies, gaps, gaps_deg, tuple(degeneracy))


# ---------------------------------------------------------------------------
# reference logical bases


def _seeded_vector(dim: int) -> np.ndarray:
    rng = np.random.default_rng(_BASIS_SEED)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v


def logical_basis_from_ops(
    stabilizing: Sequence[RotatedPauliOp | PauliString],
    frame: LogicalFrame,
    n: int,
) -> np.ndarray:
    """Columns |b>_L of the joint +1 eigenspace of ``stabilizing``, labelled
    by the frame: |0...0>_L is the +1 eigenstate of every Z_L, and X_L
    products generate the rest, fixing all relative phases.
    """
    dim = 1 << n
    v = _seeded_vector(dim)
    v = projector_apply(stabilizing, v)
    v = projector_apply([z for _, z in frame.pairs], v)
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        raise ValueError("reference vector annihilated; stabilizing set inconsistent?")
    v = v / norm
    k = len(frame.pairs)
    basis = np.empty((dim, 1 << k), dtype=complex)
    for b in range(1 << k):
        col = v
        for i in range(k):
            if b >> i & 1:
                col = apply_op(frame.pairs[i][0], col)
        basis[:, b] = col
    return basis


def _ground_projector_dense(h: np.ndarray, tol: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(h)
    cols = evecs[:, evals - evals[0] < tol]
    return cols


def _final_terms(schedule: Schedule) -> list[RotatedPauliOp]:
    last = schedule.steps[-1]
    return list(last.static_terms) + list(last.introduced.values())


def _terms_commute(terms: Sequence[RotatedPauliOp]) -> bool:
    return all(
        commutes(a, b) is Commutation.COMMUTE
        for i, a in enumerate(terms)
        for b in terms[i + 1:]
    )


@dataclass(frozen=True)
class EvolutionResult:
    """Outcome of integrating a schedule.

    ``final_states`` holds the evolved logical basis as columns.
    ``overlap_matrix`` is the raw overlap of the evolved basis with the
    reference final basis; its deviation from unitarity carries the
    adiabatic error, so distances computed from it decrease with tau.
    ``logical_unitary`` is its polar-unitary part (None when the final
    Hamiltonian terms do not commute, in which case only leakage is
    meaningful).  ``leakage`` is the mean weight outside the final ground
    subspace and ``fidelity`` its complement.  ``unitarity_defect`` is the
    2-norm distance between the overlap matrix and its unitary part.
    """

    final_states: np.ndarray
    overlap_matrix: np.ndarray | None
    logical_unitary: np.ndarray | None
    leakage: float
    fidelity: float
    tau_used: tuple[float, ...]
    unitarity_defect: float


def _expmi(h: np.ndarray) -> np.ndarray:
    """exp(-i h) for Hermitian h, unitary to roundoff."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _propagate_step(
    a: np.ndarray, b: np.ndarray, psi: np.ndarray, tau: float, dt_max: float
) -> np.ndarray:
    """CF4 Magnus integration of H(s) = A + sB, s ramping 0 -> 1 over tau."""
    n_sub = max(8, int(math.ceil(tau / dt_max)))
    dt = tau / n_sub
    for j in range(n_sub):
        s0 = j / n_sub
        s1 = s0 + (0.5 - _CF4_NODE) / n_sub
        s2 = s0 + (0.5 + _CF4_NODE) / n_sub
        h1 = a + s1 * b
        h2 = a + s2 * b
        psi = _expmi(dt * (_CF4_A2 * h1 + _CF4_A1 * h2)) @ (
            _expmi(dt * (_CF4_A1 * h1 + _CF4_A2 * h2)) @ psi
        )
    return psi


def evolve(
    schedule: Schedule,
    tau_per_step: float | Sequence[float],
    initial: np.ndarray | None = None,
    dt_max: float = 0.25,
) -> EvolutionResult:
    """Integrate the schedule and extract the logical transformation.

    The full initial ground subspace is tracked: an orthonormal logical
    basis is prepared from the initial Hamiltonian's terms and the input
    logical frame, every column is evolved through each step with a linear
    ramp, and the overlap with the reference final basis is polar-corrected
    into a unitary.  ``initial`` optionally right-multiplies the evolved
    basis by a logical state (amplitudes in frame order), in which case
    ``final_states`` has a single column.

    Requires ``|inputs| == |outputs|`` for unitary extraction.
    """
    graph = schedule.graph
    _check_cap(graph.n_vertices)
    if not schedule.steps:
        raise ValueError("empty schedule")
    taus = (
        [float(tau_per_step)] * len(schedule.steps)
        if isinstance(tau_per_step, (int, float))
        else [float(t) for t in tau_per_step]
    )
    if len(taus) != len(schedule.steps):
        raise ValueError("need one tau per step")
    if min(taus) <= 0:
        raise ValueError("tau must be positive")

    frame_in = initial_frame(graph, schedule.gflow)
    first = schedule.steps[0]
    initial_terms = list(first.static_terms) + list(first.removed.values())
    psi = logical_basis_from_ops(initial_terms, frame_in, graph.n_vertices)
    for k in range(len(schedule.steps)):
        a, b = step_endpoint_matrices(schedule, k)
        psi = _propagate_step(a, b, psi, taus[k], dt_max)

    h_final = assemble(schedule, len(schedule.steps) - 1, 1.0)
    ground = _ground_projector_dense(h_final, tol=1e-7 * schedule.gamma)
    weights = np.linalg.norm(ground.conj().T @ psi, axis=0) ** 2
    leakage = float(1.0 - np.mean(weights))

    logical_unitary = None
    overlap = None
    defect = math.nan
    if len(graph.inputs) == len(graph.outputs):
        finals = _final_terms(schedule)
        if _terms_commute(finals):
            frame_out = final_frame(graph)
            ref = logical_basis_from_ops(finals, frame_out, graph.n_vertices)
            overlap = ref.conj().T @ psi
            u, _ = scipy.linalg.polar(overlap)
            logical_unitary = u
            defect = float(np.linalg.norm(overlap - u, 2))
    if initial is not None:
        initial = np.asarray(initial, dtype=complex)
        psi = psi @ initial.reshape(-1, 1)
    return EvolutionResult(
        final_states=psi,
        overlap_matrix=overlap,
        logical_unitary=logical_unitary,
        leakage=leakage,
        fidelity=1.0 - leakage,
        tau_used=tuple(taus),
        unitarity_defect=defect,
    )


# ---------------------------------------------------------------------------
# conserved operators and leakage sweeps


@dataclass(frozen=True)
class ConservedCheck:
    operator: RotatedPauliOp
    symbolic: bool
    max_commutator_norm: float
    conserved: bool


def conserved_operator_check(
    schedule: Schedule,
    step_index: int,
    candidates: Sequence[RotatedPauliOp],
    s_grid: Sequence[float] = tuple(i / 10 for i in range(11)),
) -> list[ConservedCheck]:
    """Certify candidate conserved operators for one step.

    Symbolic: the candidate commutes with every term of the interpolation
    (term-by-term, which covers both endpoints and all s).  Numeric: the
    spectral norm of ``[C, H(s)]`` on the grid.
    """
    step = schedule.steps[step_index]
    terms = step.all_terms()
    a, b = step_endpoint_matrices(schedule, step_index)
    out = []
    for cand in candidates:
        symbolic = all(commutes(cand, t) is Commutation.COMMUTE for t in terms)
        c = to_matrix(cand)
        worst = 0.0
        for s in s_grid:
            h = a + s * b
            worst = max(worst, float(np.linalg.norm(c @ h - h @ c, 2)))
        tol = 1e-9 * schedule.gamma * max(1, len(terms))
        out.append(ConservedCheck(cand, symbolic, worst, worst < tol))
    return out


def leakage_experiment(
    schedule: Schedule,
    tau_list: Sequence[float],
    dt_max: float = 0.25,
) -> list[tuple[float, float, float]]:
    """Rows (tau_per_step, leakage, fidelity) for each requested tau."""
    rows = []
    for tau in tau_list:
        res = evolve(schedule, tau, dt_max=dt_max)
        rows.append((float(tau), res.leakage, res.fidelity))
    return rows


# ---------------------------------------------------------------------------
# MBQC reference simulation


@dataclass(frozen=True)
class MbqcRun:
    """Output of one measurement-pattern simulation.

    ``output_state`` is indexed over the output vertices in output-list
    order (bit i of the index = outputs[i]).
    """

    output_state: np.ndarray
    outcomes: tuple[int, ...]


def mbqc_reference_run(
    graph: OpenGraph,
    gf: Gflow,
    input_state: np.ndarray,
    outcomes: str | Sequence[int] = "zeros",
    seed: int | None = None,
) -> MbqcRun:
    """Measure the open graph state qubit-by-qubit with gflow corrections.

    The input state (dimension ``2^{|inputs|}``, bit i = inputs[i]) is
    entangled into the graph, every non-output is measured in layer order
    at its adapted angle, byproducts accumulate through
    :func:`agqc.pauli.correction_operator`, and the surviving output state
    is returned with final corrections applied.  The result is independent
    of the outcome sequence; ``outcomes`` may be "zeros", "random", or an
    explicit bit sequence.
    """
    _check_cap(graph.n_vertices)
    n = graph.n_vertices
    dim = 1 << n
    inputs = graph.inputs
    input_state = np.asarray(input_state, dtype=complex).reshape(-1)
    if input_state.shape[0] != 1 << len(inputs):
        raise ValueError(f"input state must have dimension 2**{len(inputs)}")

    idx = np.arange(dim, dtype=np.int64)
    in_bits = np.zeros(dim, dtype=np.int64)
    for i, v in enumerate(inputs):
        in_bits |= ((idx >> v) & 1) << i
    state = input_state[in_bits] * (2.0 ** (-0.5 * (n - len(inputs))))
    for a, b in sorted(graph.edges):
        both = ((idx >> a) & 1) & ((idx >> b) & 1)
        state = np.where(both, -state, state)

    order = gf.measurement_order()
    if isinstance(outcomes, str):
        if outcomes == "zeros":
            planned = [0] * len(order)
        elif outcomes == "random":
            rng = np.random.default_rng(seed)
            planned = [int(b) for b in rng.integers(0, 2, size=len(order))]
        else:
            raise ValueError(f"unknown outcome mode {outcomes!r}")
    else:
        planned = [int(b) for b in outcomes]
        if len(planned) != len(order):
            raise ValueError(f"need {len(order)} outcomes, got {len(planned)}")

    byproduct = PauliString(n)
    observed = []
    for v, r_obs in zip(order, planned):
        theta = graph.angles[v]
        if byproduct.x >> v & 1:
            theta = -theta
        if byproduct.z >> v & 1:
            theta += math.pi
        observed.append(r_obs)
        # Measurement basis |±_theta> = (|0> ± e^{-i theta}|1>)/sqrt(2): the
        # phase sign that makes one measured qubit implement H exp(-i theta Z/2),
        # matching the rotated-generator Hamiltonian picture exactly.
        bit_v = (idx >> v) & 1
        amp0 = state[bit_v == 0]
        amp1 = state[bit_v == 1]
        sign = -1.0 if r_obs else 1.0
        reduced = (amp0 + sign * np.exp(1j * theta) * amp1) / math.sqrt(2.0)
        state = np.zeros_like(state)
        state[bit_v == 0] = reduced
        norm = np.linalg.norm(state)
        if norm < 1e-12:
            raise RuntimeError("measurement branch has zero weight")
        state = state / norm
        # Adapted basis vectors are byproduct * (ideal basis), so the observed
        # outcome already labels the ideal branch; no relabeling.
        if r_obs:
            byproduct = byproduct.mul(correction_operator(graph, gf, v, 1))

    out_mask = 0
    for v in graph.outputs:
        out_mask |= 1 << v
    final_fix = PauliString(n, byproduct.x & out_mask, byproduct.z & out_mask)
    state = apply_op(final_fix, state)

    non_out = [v for v in range(n) if not (out_mask >> v & 1)]
    keep = np.ones(dim, dtype=bool)
    for v in non_out:
        keep &= ((idx >> v) & 1) == 0
    sub = state[keep]
    # reindex by output bits in output-list order
    kept_idx = idx[keep]
    out_bits = np.zeros(kept_idx.shape[0], dtype=np.int64)
    for i, v in enumerate(graph.outputs):
        out_bits |= ((kept_idx >> v) & 1) << i
    output_state = np.zeros(1 << len(graph.outputs), dtype=complex)
    output_state[out_bits] = sub
    output_state = output_state / np.linalg.norm(output_state)
    return MbqcRun(output_state, tuple(observed))


def mbqc_logical_unitary(
    graph: OpenGraph, gf: Gflow, outcomes: str | Sequence[int] = "zeros", seed: int | None = None
) -> np.ndarray:
    """Columns = MBQC outputs for computational-basis inputs (|I| == |O|)."""
    k = len(graph.inputs)
    if len(graph.outputs) != k:
        raise ValueError("logical unitary needs |inputs| == |outputs|")
    cols = []
    for b in range(1 << k):
        e = np.zeros(1 << k, dtype=complex)
        e[b] = 1.0
        cols.append(mbqc_reference_run(graph, gf, e, outcomes, seed).output_state)
    return np.stack(cols, axis=1)
