"""Symbolic tracking of encoded information: logical operator frames,
Heisenberg updates through replacement steps, and the predicted net unitary
for 1D chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .compiler import ScheduleStep
from .gflow import Gflow
from .graph import OpenGraph
from .pauli import (
    Commutation,
    PauliString,
    RotatedPauliOp,
    commutes,
    single,
    to_matrix,
)


class NestedExponentError(ValueError):
    """Propagation would need exp(-i theta Z T) bookkeeping; use the
    numerical extraction in :mod:`agqc.sim` instead."""


@dataclass(frozen=True)
class LogicalFrame:
    """One (X_L, Z_L) pair per encoded qubit; Y_L is derived as i Z_L X_L."""

    pairs: tuple[tuple[RotatedPauliOp, RotatedPauliOp], ...]

    @property
    def carriers(self) -> frozenset[int]:
        """Vertices currently carrying any logical operator."""
        out: set[int] = set()
        for x_l, z_l in self.pairs:
            out |= x_l.support | z_l.support
        return frozenset(out)


def initial_frame(graph: OpenGraph, gf: Gflow) -> LogicalFrame:
    """Input-site logical operators: X_L(i) = X_i prod_{w~i} Z_w, Z_L(i) = Z_i.

    The X_L take the shape of the (absent) input stabilizer generator, which
    is what makes them commute with every Hamiltonian term T_v.
    """
    n = graph.n_vertices
    pairs = []
    for i in graph.inputs:
        x_l = RotatedPauliOp.from_pauli(PauliString(n, x=1 << i, z=graph.adjacency[i]))
        z_l = RotatedPauliOp.from_pauli(single(n, i, "Z"))
        pairs.append((x_l, z_l))
    return LogicalFrame(tuple(pairs))


def final_frame(graph: OpenGraph) -> LogicalFrame:
    """Bare output-site frame: X_L(i) = X at outputs[i], Z_L(i) = Z there."""
    n = graph.n_vertices
    pairs = tuple(
        (
            RotatedPauliOp.from_pauli(single(n, o, "X")),
            RotatedPauliOp.from_pauli(single(n, o, "Z")),
        )
        for o in graph.outputs
    )
    return LogicalFrame(pairs)


def _commute_out(op: RotatedPauliOp, step: ScheduleStep) -> RotatedPauliOp:
    for v in sorted(step.introduced):
        x_v = step.introduced[v]
        rel = commutes(op, x_v)
        if rel is Commutation.COMMUTE:
            continue
        if any(site == v for site, _ in op.twist):
            raise NestedExponentError(
                f"logical operator carries a twist at replaced vertex {v + 1}; "
                "symbolic propagation would need a nested exponent "
                "(exp(-i theta Z T) form) - extract the unitary numerically"
            )
        if rel is Commutation.NEITHER:
            raise NestedExponentError(
                f"logical operator neither commutes nor anticommutes with the "
                f"replacement at vertex {v + 1}"
            )
        op = op.mul(step.removed[v])
        if commutes(op, x_v) is not Commutation.COMMUTE:
            raise NestedExponentError(
                f"multiplying by the removed term at vertex {v + 1} did not "
                "restore commutation; the step is not gflow-ordered"
            )
    return op


def _erase_introduced(op: RotatedPauliOp, step: ScheduleStep) -> RotatedPauliOp:
    mask = 0
    for v in step.introduced:
        mask |= 1 << v
    p = op.pauli
    if p.z & mask or any(site_bit & mask for site_bit in (1 << s for s, _ in op.twist)):
        raise NestedExponentError(
            "cannot set a replaced vertex to identity: residual Z/twist present"
        )
    return RotatedPauliOp(PauliString(p.n, p.x & ~mask, p.z, p.phase_exp), op.twist)


def propagate(frame: LogicalFrame, step: ScheduleStep) -> LogicalFrame:
    """Heisenberg update of the frame through one replacement step.

    Each logical operator is multiplied by removed terms until it commutes
    with every introduced X_v, then the X_v themselves are set to identity
    (the evolved state is their +1 eigenstate).  Exact for Clifford angles;
    at general angles it works as long as no twist lands on a replaced
    vertex (one substitution deep), otherwise it raises
    :class:`NestedExponentError`.
    """
    new_pairs = []
    for x_l, z_l in frame.pairs:
        x_new = _erase_introduced(_commute_out(x_l, step), step)
        z_new = _erase_introduced(_commute_out(z_l, step), step)
        new_pairs.append((x_new, z_new))
    return LogicalFrame(tuple(new_pairs))


def propagate_schedule(frame: LogicalFrame, steps: Sequence[ScheduleStep]) -> LogicalFrame:
    """Fold :func:`propagate` over a whole schedule."""
    for step in steps:
        frame = propagate(frame, step)
    return frame


# ---------------------------------------------------------------------------
# chain prediction and comparisons

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)


def _u_z(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def chain_unitary(angles: Sequence[float]) -> np.ndarray:
    """Net logical unitary of an in-order chain computation.

    ``angles`` are the measurement angles of the non-output vertices in
    measurement order (length n-1 for an n-vertex chain); the first must be
    0 by convention.  Each replacement contributes one H Uz(theta) factor,
    composed in measurement order; validated against the dense simulation
    rather than any printed index range.
    """
    if len(angles) < 1:
        raise ValueError("a chain has at least one measured vertex")
    if abs(math.remainder(angles[0], 2 * math.pi)) > 1e-12:
        raise ValueError("the first chain angle must be 0 (convention)")
    u = np.eye(2, dtype=complex)
    for theta in angles:
        u = _HADAMARD @ _u_z(theta) @ u
    return u


def compare(candidate: np.ndarray, target: np.ndarray) -> float:
    """Phase-quotiented operator-2-norm distance min_phi ||A - e^{i phi} B||."""
    a = np.asarray(candidate, dtype=complex)
    b = np.asarray(target, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    # coarse scan + golden-section refinement; the objective is smooth in phi
    phis = np.linspace(-math.pi, math.pi, 256, endpoint=False)
    dists = [np.linalg.norm(a - np.exp(1j * p) * b, 2) for p in phis]
    i0 = int(np.argmin(dists))
    lo = phis[i0] - 2 * math.pi / 256
    hi = phis[i0] + 2 * math.pi / 256
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(60):
        m1 = hi - golden * (hi - lo)
        m2 = lo + golden * (hi - lo)
        d1 = np.linalg.norm(a - np.exp(1j * m1) * b, 2)
        d2 = np.linalg.norm(a - np.exp(1j * m2) * b, 2)
        if d1 < d2:
            hi = m2
        else:
            lo = m1
    phi = 0.5 * (lo + hi)
    return float(np.linalg.norm(a - np.exp(1j * phi) * b, 2))


def frame_unitary(frame: LogicalFrame, graph: OpenGraph) -> np.ndarray:
    """Unitary (up to phase) whose conjugation realises a propagated frame.

    The frame's operators must be supported on the outputs and twist-free
    (Clifford); the returned matrix U satisfies U sigma U+ = image for every
    logical X/Z, solved as the one-dimensional nullspace of the stacked
    conjugation constraints.
    """
    k = len(frame.pairs)
    outs = graph.outputs
    if len(outs) != k:
        raise ValueError("frame-to-unitary needs |inputs| == |outputs|")
    out_index = {o: i for i, o in enumerate(outs)}

    def op_matrix(op: RotatedPauliOp) -> np.ndarray:
        if op.twist:
            raise NestedExponentError("frame is not Clifford; no Pauli conjugation table")
        if not op.support <= set(outs):
            raise ValueError("frame operator not supported on the outputs")
        small_x = 0
        small_z = 0
        for o in outs:
            if op.pauli.x >> o & 1:
                small_x |= 1 << out_index[o]
            if op.pauli.z >> o & 1:
                small_z |= 1 << out_index[o]
        return to_matrix(PauliString(k, small_x, small_z, op.pauli.phase_exp))

    dim = 1 << k
    rows = []
    for i, (x_img, z_img) in enumerate(frame.pairs):
        for base, img in ((single(k, i, "X"), x_img), (single(k, i, "Z"), z_img)):
            a = to_matrix(base)
            b = op_matrix(img)
            # column-major vec: vec(U A) = (A^T x I) vec(U), vec(B U) = (I x B) vec(U)
            rows.append(np.kron(a.T, np.eye(dim)) - np.kron(np.eye(dim), b))
    m = np.vstack(rows)
    _, svals, vh = np.linalg.svd(m)
    if svals[-1] > 1e-9:
        raise ValueError("frame images are not a consistent Pauli-map; no unitary")
    u = vh[-1].conj().reshape(dim, dim, order="F")
    u = u * math.sqrt(dim) / np.linalg.norm(u)
    return u
