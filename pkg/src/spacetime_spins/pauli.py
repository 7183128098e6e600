"""Phase-free Pauli operators on the spacetime grid.

A spacetime qubit sits at ``(qubit, layer)`` where ``layer`` is the integer
error-layer index and the physical half-integer time is ``layer + 0.5``.
Operators are stored as two Python-int bitsets (x and z) indexed by
``layer * N + qubit``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

__all__ = [
    "GridMismatch",
    "SpacetimeCoord",
    "SpacetimePauli",
    "scalar_commutator",
    "multiply",
    "support",
    "format_time",
    "parse_time",
]

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


class GridMismatch(ValueError):
    """Operands live on different spacetime grids."""


class SpacetimeCoord(NamedTuple):
    qubit: int
    layer: int

    @property
    def tau(self) -> float:
        return self.layer + 0.5

    def __str__(self) -> str:
        return f"{self.qubit}@{format_time(self.layer)}"


def format_time(layer: int) -> str:
    return f"{layer}.5"


def parse_time(token: str) -> int:
    """Convert a rendered half-integer time like ``2.5`` into a layer index."""
    head, dot, tail = token.partition(".")
    if dot != "." or tail != "5" or not head.lstrip("-").isdigit():
        raise ValueError(f"time must look like '<layer>.5', got {token!r}")
    return int(head)


@dataclass(frozen=True)
class SpacetimePauli:
    """Pauli operator modulo phase on an ``num_qubits x num_layers`` grid."""

    num_qubits: int
    num_layers: int
    x: int = 0
    z: int = 0

    # -- construction -----------------------------------------------------
    @classmethod
    def identity(cls, num_qubits: int, num_layers: int) -> "SpacetimePauli":
        return cls(num_qubits, num_layers)

    @classmethod
    def from_sites(
        cls,
        num_qubits: int,
        num_layers: int,
        sites: Iterable[tuple[str, int, int]],
    ) -> "SpacetimePauli":
        """Build from ``(letter, qubit, layer)`` triples; repeated sites multiply."""
        x = z = 0
        for letter, q, layer in sites:
            if not (0 <= q < num_qubits and 0 <= layer < num_layers):
                raise ValueError(f"site {q}@{layer}.5 outside {num_qubits}x{num_layers} grid")
            bx, bz = _BITS[letter.upper()]
            bit = 1 << (layer * num_qubits + q)
            if bx:
                x ^= bit
            if bz:
                z ^= bit
        return cls(num_qubits, num_layers, x, z)

    @classmethod
    def parse(cls, num_qubits: int, num_layers: int, text: str) -> "SpacetimePauli":
        """Parse whitespace separated ``P q@tau`` token pairs, e.g. ``"X 3@2.5 Z 0@0.5"``."""
        toks = text.split()
        if len(toks) % 2:
            raise ValueError(f"unpaired Pauli token in {text!r}")
        sites = []
        for letter, where in zip(toks[::2], toks[1::2]):
            if letter.upper() not in _BITS:
                raise ValueError(f"unknown Pauli letter {letter!r}")
            q, _, t = where.partition("@")
            sites.append((letter, int(q), parse_time(t)))
        return cls.from_sites(num_qubits, num_layers, sites)

    # -- queries ----------------------------------------------------------
    @property
    def size(self) -> int:
        return self.num_qubits * self.num_layers

    def _check(self, other: "SpacetimePauli") -> None:
        if (self.num_qubits, self.num_layers) != (other.num_qubits, other.num_layers):
            raise GridMismatch(
                f"grid {self.num_qubits}x{self.num_layers} vs {other.num_qubits}x{other.num_layers}"
            )

    def coord(self, index: int) -> SpacetimeCoord:
        return SpacetimeCoord(index % self.num_qubits, index // self.num_qubits)

    def index(self, qubit: int, layer: int) -> int:
        return layer * self.num_qubits + qubit

    def site(self, qubit: int, layer: int) -> str:
        i = self.index(qubit, layer)
        return _LETTERS[((self.x >> i) & 1, (self.z >> i) & 1)]

    def indices(self) -> list[int]:
        """Bit positions in the support, ascending (layer-major order)."""
        bits = self.x | self.z
        out = []
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out

    def sites(self) -> Iterator[tuple[str, int, int]]:
        for i in self.indices():
            c = self.coord(i)
            yield _LETTERS[((self.x >> i) & 1, (self.z >> i) & 1)], c.qubit, c.layer

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return not (self.x or self.z)

    def is_pure_x(self) -> bool:
        return self.z == 0

    def is_pure_z(self) -> bool:
        return self.x == 0

    def layers(self) -> list[int]:
        return sorted({self.coord(i).layer for i in self.indices()})

    def commutes(self, other: "SpacetimePauli") -> bool:
        self._check(other)
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def __mul__(self, other: "SpacetimePauli") -> "SpacetimePauli":
        self._check(other)
        return SpacetimePauli(self.num_qubits, self.num_layers, self.x ^ other.x, self.z ^ other.z)

    def render(self) -> str:
        return " ".join(f"{p} {q}@{format_time(t)}" for p, q, t in self.sites())

    def __str__(self) -> str:
        return self.render() or "I"


def scalar_commutator(a: SpacetimePauli, b: SpacetimePauli) -> int:
    """Return +1 if ``a`` and ``b`` commute and -1 otherwise."""
    return 1 if a.commutes(b) else -1


def multiply(a: SpacetimePauli, b: SpacetimePauli) -> SpacetimePauli:
    return a * b


def support(a: SpacetimePauli) -> set[SpacetimeCoord]:
    return {a.coord(i) for i in a.indices()}
