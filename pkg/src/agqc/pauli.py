"""Exact algebra of Pauli strings and rotated-Pauli operators.

A :class:`PauliString` is ``i**phase_exp`` times a tensor product of
single-site letters I/X/Y/Z encoded in two bitmasks.  A
:class:`RotatedPauliOp` extends it with per-site Z-rotations
``exp(-i a_v Z_v)`` kept to the *left* of the Pauli string (canonical
form).  This class is closed under multiplication, so products of twisted
stabilizer generators, the operators T_v built from a correcting set, and
their one-step updates can all be manipulated exactly, without matrices.

Canonical form of the twist angles: each angle is reduced modulo pi into
the open interval (-pi/2, pi/2), the removed multiples of pi becoming a
sign, and angles within 1e-12 of 0 or +-pi/2 are folded away entirely
(``exp(-i pi/2 Z) = -iZ``).  Equality of rotated operators therefore
compares bitmasks and phases exactly and twist angles to 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .gflow import Gflow
from .graph import CLIFFORD_TOL, OpenGraph

_PHASES = (1, 1j, -1, -1j)
_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


class NonCliffordAngleError(ValueError):
    """A symbolic routine that requires Clifford angles met a general one."""


class Commutation(Enum):
    COMMUTE = "commute"
    ANTICOMMUTE = "anticommute"
    NEITHER = "neither"


@dataclass(frozen=True)
class PauliString:
    """``i**phase_exp`` times a product of single-site Pauli letters.

    Site letters come from the bit pairs ``(x, z)``: (0,0) I, (1,0) X,
    (1,1) Y, (0,1) Z.  The phase exponent is reduced mod 4, keeping the
    group {+1, +i, -1, -i} closed under multiplication.
    """

    n: int
    x: int = 0
    z: int = 0
    phase_exp: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @property
    def phase(self) -> complex:
        return _PHASES[self.phase_exp]

    def letter(self, v: int) -> str:
        return _LETTERS[(self.x >> v & 1, self.z >> v & 1)]

    @property
    def support(self) -> frozenset[int]:
        mask = self.x | self.z
        return frozenset(v for v in range(self.n) if mask >> v & 1)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def mul(self, other: PauliString) -> PauliString:
        if self.n != other.n:
            raise ValueError("vertex universes differ")
        x3 = self.x ^ other.x
        z3 = self.z ^ other.z
        exp = (
            self.phase_exp
            + other.phase_exp
            + (self.x & self.z).bit_count()
            + (other.x & other.z).bit_count()
            + 2 * (self.z & other.x).bit_count()
            - (x3 & z3).bit_count()
        )
        return PauliString(self.n, x3, z3, exp)

    def __mul__(self, other: PauliString) -> PauliString:
        return self.mul(other)

    def anticommutes(self, other: PauliString) -> bool:
        """Symplectic parity: True when the two strings anticommute."""
        return bool(
            ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) & 1
        )

    def negated(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, self.phase_exp + 2)

    def render(self) -> str:
        """Canonical text form, 1-based sites, e.g. ``+1 . Z1 X2 Z3``."""
        sign = {0: "+1", 1: "+i", 2: "-1", 3: "-i"}[self.phase_exp]
        letters = " ".join(
            f"{self.letter(v)}{v + 1}" for v in range(self.n) if self.letter(v) != "I"
        )
        return f"{sign} . {letters}" if letters else f"{sign} . I"


def identity(n: int) -> PauliString:
    return PauliString(n)


def single(n: int, v: int, letter: str, phase_exp: int = 0) -> PauliString:
    """Single-site Pauli: X, Y, Z (or I) at vertex ``v``."""
    letter = letter.upper()
    if letter == "I":
        return PauliString(n, 0, 0, phase_exp)
    x = 1 << v if letter in ("X", "Y") else 0
    z = 1 << v if letter in ("Z", "Y") else 0
    if not x and not z:
        raise ValueError(f"unknown Pauli letter {letter!r}")
    return PauliString(n, x, z, phase_exp)


def _fold_twist(items: Mapping[int, float]) -> tuple[tuple[tuple[int, float], ...], int, int]:
    """Reduce twist angles to canonical residues.

    Returns (kept twists sorted by site, Z-mask to left-multiply, extra
    phase exponent); the mask and phase collect the ``-iZ`` / ``+iZ``
    factors of angles at odd multiples of pi/2 and the signs of removed
    multiples of pi.
    """
    kept: list[tuple[int, float]] = []
    fold_z = 0
    extra = 0
    for v in sorted(items):
        a = items[v]
        k = round(a / math.pi)
        r = a - k * math.pi
        if k % 2:
            extra += 2  # exp(-i pi Z) = -1
        if abs(r) < CLIFFORD_TOL:
            continue
        if abs(r - math.pi / 2) < CLIFFORD_TOL:
            fold_z |= 1 << v
            extra += 3  # exp(-i pi/2 Z) = -i Z
        elif abs(r + math.pi / 2) < CLIFFORD_TOL:
            fold_z |= 1 << v
            extra += 1  # exp(+i pi/2 Z) = +i Z
        else:
            kept.append((v, r))
    return tuple(kept), fold_z, extra % 4


@dataclass(frozen=True, eq=False)
class RotatedPauliOp:
    """Canonical ``phase * prod_v exp(-i a_v Z_v) * PauliString``.

    Closed under multiplication: moving a Z-rotation left past an X or Y
    letter flips the sign of its angle, and Clifford residues fold into the
    Pauli part.  Use :meth:`from_parts` to construct with folding applied.
    """

    pauli: PauliString
    twist: tuple[tuple[int, float], ...] = ()

    @classmethod
    def from_parts(
        cls, pauli: PauliString, twist: Mapping[int, float] | None = None
    ) -> RotatedPauliOp:
        if not twist:
            return cls(pauli, ())
        kept, fold_z, extra = _fold_twist(twist)
        p = pauli
        if fold_z:
            p = PauliString(p.n, 0, fold_z).mul(p)
        if extra:
            p = PauliString(p.n, p.x, p.z, p.phase_exp + extra)
        return cls(p, kept)

    @classmethod
    def from_pauli(cls, pauli: PauliString) -> RotatedPauliOp:
        return cls(pauli, ())

    @property
    def n(self) -> int:
        return self.pauli.n

    @property
    def twist_map(self) -> dict[int, float]:
        return dict(self.twist)

    @property
    def support(self) -> frozenset[int]:
        mask = self.pauli.x | self.pauli.z
        for v, _ in self.twist:
            mask |= 1 << v
        return frozenset(v for v in range(self.n) if mask >> v & 1)

    @property
    def degree(self) -> int:
        return len(self.support)

    def is_identity(self) -> bool:
        return self.pauli.is_identity() and not self.twist and self.pauli.phase_exp == 0

    def mul(self, other: RotatedPauliOp) -> RotatedPauliOp:
        """Canonical-form product with exact phase tracking."""
        if self.n != other.n:
            raise ValueError("vertex universes differ")
        combined = dict(self.twist)
        for v, a in other.twist:
            adj = -a if self.pauli.x >> v & 1 else a
            combined[v] = combined.get(v, 0.0) + adj
        return RotatedPauliOp.from_parts(self.pauli.mul(other.pauli), combined)

    def __mul__(self, other: RotatedPauliOp) -> RotatedPauliOp:
        return self.mul(other)

    def negated(self) -> RotatedPauliOp:
        return RotatedPauliOp(self.pauli.negated(), self.twist)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RotatedPauliOp):
            return NotImplemented
        if (
            self.pauli.n != other.pauli.n
            or self.pauli.x != other.pauli.x
            or self.pauli.z != other.pauli.z
            or self.pauli.phase_exp != other.pauli.phase_exp
        ):
            return False
        if len(self.twist) != len(other.twist):
            return False
        return all(
            va == vb and abs(aa - ab) < CLIFFORD_TOL
            for (va, aa), (vb, ab) in zip(self.twist, other.twist)
        )

    def render(self) -> str:
        """Canonical text form, e.g. ``+1 . Z1 X2 Z3 . twist{2: 0.7854}``."""
        base = self.pauli.render()
        if not self.twist:
            return base
        tw = ", ".join(f"{v + 1}: {a:.4f}" for v, a in self.twist)
        return f"{base} . twist{{{tw}}}"


def multiply(a: RotatedPauliOp, b: RotatedPauliOp) -> RotatedPauliOp:
    """Product ``a * b`` in canonical form."""
    return a.mul(b)


def commutes(a: RotatedPauliOp, b: RotatedPauliOp) -> Commutation:
    """Classify the commutator of two rotated operators.

    Exact: compares ``ab`` with ``ba`` in canonical form.  ``NEITHER`` can
    occur only when a twist overlaps an anticommuting support.
    """
    ab = a.mul(b)
    ba = b.mul(a)
    if ab == ba:
        return Commutation.COMMUTE
    if ab == ba.negated():
        return Commutation.ANTICOMMUTE
    return Commutation.NEITHER


def stabilizer_generator(graph: OpenGraph, v: int) -> PauliString:
    """Graph-state generator ``K_v = X_v prod_{w ~ v} Z_w`` (non-inputs only)."""
    if v in graph.inputs:
        raise ValueError(f"vertex {v} is an input; generators exist on non-inputs only")
    if not 0 <= v < graph.n_vertices:
        raise ValueError(f"unknown vertex {v}")
    return PauliString(graph.n_vertices, x=1 << v, z=graph.adjacency[v])


def twisted_generator(graph: OpenGraph, v: int) -> RotatedPauliOp:
    """``K_v`` with ``X_v`` replaced by ``exp(-i theta_v Z_v) X_v``."""
    if v not in graph.angles:
        raise ValueError(f"vertex {v} has no measurement angle")
    return RotatedPauliOp.from_parts(
        stabilizer_generator(graph, v), {v: graph.angles[v]}
    )


def _generator_for_correction(graph: OpenGraph, w: int) -> RotatedPauliOp:
    # Outputs carry no measurement angle; their generators enter untwisted.
    theta = graph.angles.get(w, 0.0)
    return RotatedPauliOp.from_parts(stabilizer_generator(graph, w), {w: theta})


def build_T(graph: OpenGraph, gf: Gflow, v: int) -> RotatedPauliOp:
    """``T_v``: product of twisted generators over the correcting set g(v)."""
    if v not in gf.g:
        raise ValueError(f"vertex {v} is an output (or unknown); no T_v exists")
    op = RotatedPauliOp.from_pauli(identity(graph.n_vertices))
    for w in sorted(gf.g[v]):
        op = op.mul(_generator_for_correction(graph, w))
    return op


def stabilizer_set(graph: OpenGraph, gf: Gflow) -> dict[int, RotatedPauliOp]:
    """All ``T_v`` keyed by vertex, in measurement order (layer, then index)."""
    return {v: build_T(graph, gf, v) for v in gf.measurement_order()}


def support(op: RotatedPauliOp | PauliString) -> frozenset[int]:
    """Sites acted on non-trivially (letter != I or twist present)."""
    return op.support


def one_step_update(
    stabs: Mapping[int, RotatedPauliOp], gf: Gflow
) -> dict[int, RotatedPauliOp]:
    """Sweep every T_v forward through later layers until it commutes with
    all other replacement targets, producing the one-step set T~_v.

    For each vertex v and each later layer in time order: whenever the
    current operator carries a Z or Y letter on a vertex w of that layer it
    is multiplied by T_w, then the sweep proceeds to the next layer until
    the outputs are reached.

    Requires Clifford angles: at general angles each sweep would trade one
    Z letter for an exponential pile of terms, so the update is refused.
    The Clifford case is recognised by all inputs being twist-free (general
    angles fold away exactly when they are multiples of pi/2).
    """
    for v, op in stabs.items():
        if op.twist:
            raise NonCliffordAngleError(
                f"T_{v} carries a non-Clifford twist {op.twist_map}; the symbolic "
                "one-step update takes exponential time at general angles"
            )
    by_layer: dict[int, list[int]] = {}
    for v in stabs:
        by_layer.setdefault(gf.layer[v], []).append(v)
    layers = sorted(by_layer)
    updated: dict[int, RotatedPauliOp] = {}
    for v in sorted(stabs, key=lambda u: (gf.layer[u], u)):
        op = stabs[v]
        for lk in layers:
            if lk <= gf.layer[v]:
                continue
            for w in sorted(by_layer[lk]):
                if op.pauli.z >> w & 1:
                    op = op.mul(stabs[w])
        updated[v] = op
    return updated


def correction_operator(
    graph: OpenGraph, gf: Gflow, v: int, outcome: int
) -> PauliString:
    """Byproduct ``(prod_{u in g(v)} K_u)**outcome`` for measurement result of v."""
    if v not in gf.g:
        raise ValueError(f"vertex {v} is an output (or unknown); no correction exists")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    op = identity(graph.n_vertices)
    if outcome:
        for u in sorted(gf.g[v]):
            op = op.mul(stabilizer_generator(graph, u))
    return op


# ---------------------------------------------------------------------------
# dense representations (used by the simulator and as a test oracle)


def _parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


def apply_op(op: RotatedPauliOp | PauliString, state: np.ndarray) -> np.ndarray:
    """Apply the operator to a state vector (or stacked columns) in O(2^n).

    Basis convention: bit v of the index is the computational state of
    vertex v.
    """
    if isinstance(op, PauliString):
        op = RotatedPauliOp.from_pauli(op)
    p = op.pauli
    dim = 1 << p.n
    if state.shape[0] != dim:
        raise ValueError(f"state dimension {state.shape[0]} != 2**{p.n}")
    idx = np.arange(dim, dtype=np.int64)
    coeff = np.full(dim, p.phase * (1j) ** ((p.x & p.z).bit_count()), dtype=complex)
    coeff *= 1.0 - 2.0 * _parity(idx & p.z)
    rows = idx ^ p.x
    for v, a in op.twist:
        bit = rows >> v & 1
        coeff = coeff * np.where(bit, np.exp(1j * a), np.exp(-1j * a))
    out = np.zeros_like(state, dtype=complex)
    out[rows] = (coeff[:, None] * state) if state.ndim == 2 else coeff * state
    return out


def to_matrix(op: RotatedPauliOp | PauliString) -> np.ndarray:
    """Dense matrix of the operator (exact, one nonzero per column)."""
    if isinstance(op, PauliString):
        op = RotatedPauliOp.from_pauli(op)
    p = op.pauli
    dim = 1 << p.n
    idx = np.arange(dim, dtype=np.int64)
    coeff = np.full(dim, p.phase * (1j) ** ((p.x & p.z).bit_count()), dtype=complex)
    coeff *= 1.0 - 2.0 * _parity(idx & p.z)
    rows = idx ^ p.x
    for v, a in op.twist:
        bit = rows >> v & 1
        coeff = coeff * np.where(bit, np.exp(1j * a), np.exp(-1j * a))
    mat = np.zeros((dim, dim), dtype=complex)
    mat[rows, idx] = coeff
    return mat


def projector_apply(ops: Iterable[RotatedPauliOp | PauliString], state: np.ndarray) -> np.ndarray:
    """Apply ``prod (1 + W)/2`` over the given involutions to a state."""
    out = state.astype(complex)
    for w in ops:
        out = 0.5 * (out + apply_op(w, out))
    return out
