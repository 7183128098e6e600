"""Small GF(2) linear-algebra helpers on Python-int bit vectors."""

from __future__ import annotations

from typing import Iterable, Sequence


def _low(v: int) -> int:
    return (v & -v).bit_length() - 1


class Eliminator:
    """Incremental row reduction that remembers how each row was formed.

    Rows are keyed by their lowest set bit. ``add`` returns ``None`` for an
    independent vector, or the set of earlier input indices (plus the new
    one) whose sum is zero.
    """

    def __init__(self) -> None:
        self.rows: dict[int, tuple[int, int]] = {}
        self.count = 0

    def add(self, v: int) -> list[int] | None:
        idx = self.count
        self.count += 1
        combo = 1 << idx
        while v:
            piv = _low(v)
            row = self.rows.get(piv)
            if row is None:
                self.rows[piv] = (v, combo)
                return None
            v ^= row[0]
            combo ^= row[1]
        return bits_of(combo)

    def contains(self, v: int) -> bool:
        while v:
            row = self.rows.get(_low(v))
            if row is None:
                return False
            v ^= row[0]
        return True

    def express(self, v: int) -> list[int] | None:
        """Input indices summing to ``v``, or ``None`` if ``v`` is outside the span."""
        combo = 0
        while v:
            row = self.rows.get(_low(v))
            if row is None:
                return None
            v ^= row[0]
            combo ^= row[1]
        return bits_of(combo)

    def residue(self, v: int) -> int:
        """Canonical representative of ``v`` modulo the span."""
        out = 0
        while v:
            piv = _low(v)
            row = self.rows.get(piv)
            if row is None:
                out ^= 1 << piv
                v ^= 1 << piv
            else:
                v ^= row[0]
        return out

    @property
    def rank(self) -> int:
        return len(self.rows)


def bits_of(v: int) -> list[int]:
    out = []
    while v:
        low = v & -v
        out.append(low.bit_length() - 1)
        v ^= low
    return out


def rank(vectors: Iterable[int]) -> int:
    e = Eliminator()
    for v in vectors:
        e.add(v)
    return e.rank


def nullspace(columns: Sequence[int]) -> list[int]:
    """Basis of ``{c : sum_k c_k columns[k] = 0}`` as bitmasks over ``k``."""
    e = Eliminator()
    out = []
    for v in columns:
        rel = e.add(v)
        if rel is not None:
            mask = 0
            for k in rel:
                mask ^= 1 << k
            out.append(mask)
    return out
