"""Tiny GF(2) linear algebra on int bitmasks."""

from __future__ import annotations


def solve(rows: list[int], rhs: list[int], n_cols: int) -> int | None:
    """Solve ``A x = b`` over GF(2).

    ``rows[i]`` is the bitmask of row *i* of ``A`` (bit *j* = column *j*),
    ``rhs[i]`` the right-hand side bit.  Returns one solution bitmask with
    free variables set to 0, or ``None`` when inconsistent.  Deterministic:
    columns are eliminated in ascending order.
    """
    aug = [(rows[i] << 1) | (rhs[i] & 1) for i in range(len(rows))]
    pivot_row_of_col: dict[int, int] = {}
    r = 0
    for c in range(n_cols):
        bit = 1 << (c + 1)
        pivot = next((i for i in range(r, len(aug)) if aug[i] & bit), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        for i in range(len(aug)):
            if i != r and aug[i] & bit:
                aug[i] ^= aug[r]
        pivot_row_of_col[c] = r
        r += 1
    for i in range(r, len(aug)):
        if aug[i] & 1:
            return None
    x = 0
    for c, i in pivot_row_of_col.items():
        if aug[i] & 1:
            x |= 1 << c
    return x


def kernel_filter(basis: list[int], constraint: int) -> list[int]:
    """Basis of ``{v in span(basis) : parity(v & constraint) == 0}``.

    Standard one-constraint reduction: pick one basis vector with odd
    overlap as pivot, fold it into the others, drop it.
    """
    odd = [v for v in basis if (v & constraint).bit_count() & 1]
    even = [v for v in basis if not (v & constraint).bit_count() & 1]
    if not odd:
        return list(basis)
    pivot = odd[0]
    return even + [v ^ pivot for v in odd[1:]]


def in_span(basis: list[int], target: int) -> bool:
    """Membership of ``target`` in the GF(2) span of ``basis``."""
    work = list(basis)
    x = target
    for c in range(max((v.bit_length() for v in work + [x]), default=0)):
        bit = 1 << c
        pivot = next((v for v in work if v & bit), None)
        if pivot is None:
            continue
        work = [v ^ pivot if (v & bit and v is not pivot) else v for v in work]
        if x & bit:
            x ^= pivot
        work.remove(pivot)
    return x == 0
