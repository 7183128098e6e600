"""Spacetime gauge generators of a circuit and related GF(2) bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .circuit import Circuit, conjugate_local
from .gf2 import Eliminator, bits_of, nullspace
from .pauli import SpacetimePauli

__all__ = [
    "Blocked",
    "GaugeBasis",
    "gauge_candidates",
    "build_gauge_generators",
    "reduce_to_basis",
    "gauge_basis",
    "find_gauge_symmetries",
    "localize_relations",
    "stabilizer_generators",
    "in_gauge_group",
    "observable_problems",
    "propagate",
    "flavor_tag",
]


class Blocked(ValueError):
    """A Pauli cannot be pushed past an intervening measurement or reset."""


def flavor_tag(p: SpacetimePauli) -> str:
    if p.z == 0:
        return "pureX"
    if p.x == 0:
        return "pureZ"
    return "mixed"


def _vec(p: SpacetimePauli) -> int:
    return p.x | (p.z << p.size)


def _unvec(v: int, n: int, t: int) -> SpacetimePauli:
    size = n * t
    return SpacetimePauli(n, t, v & ((1 << size) - 1), v >> size)


# -- generators ---------------------------------------------------------------

def _piece(n: int, t_layers: int, layer: int, qubits: Sequence[int], letters: Sequence[str]):
    if not 0 <= layer < t_layers:
        return []
    return [(a, q, layer) for q, a in zip(qubits, letters) if a != "I"]


def _letter(bits: tuple[int, int]) -> str:
    return {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[bits]


def gauge_candidates(circuit: Circuit) -> list[tuple[SpacetimePauli, str]]:
    """Generators in emission order with a short human-readable label.

    Emission runs over timesteps in order; inside a timestep, measurement and
    reset generators come first, then propagators, each group in qubit order.
    """
    n, t_max = circuit.num_qubits, circuit.duration
    out: list[tuple[SpacetimePauli, str]] = []

    def emit(sites, label):
        if sites:
            out.append((SpacetimePauli.from_sites(n, t_max, sites), label))

    for t, ops in enumerate(circuit.by_time()):
        pre, post = t - 1, t  # error layers just before and after timestep t
        for op in ops:
            if op.kind not in ("M", "R"):
                continue
            letters = list(op.name) if len(op.name) == len(op.qubits) else [op.name] * len(op.qubits)
            tag = f"{op.kind} {op.name} {' '.join(map(str, op.qubits))} t={t}"
            if op.kind == "M":
                emit(_piece(n, t_max, pre, op.qubits, letters), tag + " pre")
            emit(_piece(n, t_max, post, op.qubits, letters), tag + " post")
        for op in ops:
            tag = f"{op.text()} t={t}"
            if op.kind == "R" or (op.kind == "M" and len(op.qubits) == 1):
                continue
            if op.kind == "M":
                i, j = op.qubits
                same = op.name[0]
                other = "X" if same == "Z" else "Z"
                for label, qs, letters in (
                    (f"{same}{i}", (i,), (same,)),
                    (f"{same}{j}", (j,), (same,)),
                    (f"{other}{other}", (i, j), (other, other)),
                ):
                    emit(_piece(n, t_max, pre, qs, letters) + _piece(n, t_max, post, qs, letters),
                         f"{tag} prop {label}")
                continue
            k = len(op.qubits)
            for slot in range(k):
                for letter, bits in (("X", (1, 0)), ("Z", (0, 1))):
                    before = [(0, 0)] * k
                    before[slot] = bits
                    after = conjugate_local(op.name, before)
                    emit(_piece(n, t_max, pre, (op.qubits[slot],), (letter,))
                         + _piece(n, t_max, post, op.qubits, [_letter(b) for b in after]),
                         f"{tag} prop {letter}{op.qubits[slot]}")
    return out


def build_gauge_generators(circuit: Circuit) -> list[SpacetimePauli]:
    return [g for g, _ in gauge_candidates(circuit)]


@dataclass(frozen=True)
class GaugeBasis:
    """Gauge generators plus the relations found while reducing them.

    ``redundancies`` index into ``candidates``. When ``overcomplete`` is set,
    ``generators`` equals ``candidates`` so the same indices label spins.
    """

    candidates: tuple[SpacetimePauli, ...]
    kept: tuple[int, ...]
    redundancies: tuple[tuple[int, ...], ...]
    overcomplete: bool
    labels: tuple[str, ...] = ()

    @property
    def generators(self) -> tuple[SpacetimePauli, ...]:
        if self.overcomplete:
            return self.candidates
        return tuple(self.candidates[i] for i in self.kept)

    @property
    def generator_labels(self) -> tuple[str, ...]:
        if not self.labels:
            return ()
        if self.overcomplete:
            return self.labels
        return tuple(self.labels[i] for i in self.kept)

    @property
    def flavors(self) -> tuple[str, ...]:
        return tuple(flavor_tag(g) for g in self.generators)

    @property
    def rank(self) -> int:
        return len(self.kept)

    @property
    def num_qubits(self) -> int:
        return self.candidates[0].num_qubits if self.candidates else 0

    @property
    def num_layers(self) -> int:
        return self.candidates[0].num_layers if self.candidates else 0

    def is_css(self) -> bool:
        return all(f != "mixed" for f in self.flavors)


def reduce_to_basis(
    generators: Sequence[SpacetimePauli],
    keep_redundant: bool = False,
    labels: Sequence[str] = (),
) -> GaugeBasis:
    """Gaussian elimination keeping the earliest independent candidates."""
    elim = Eliminator()
    kept, rels = [], []
    for g in generators:
        rel = elim.add(_vec(g))
        if rel is None:
            kept.append(elim.count - 1)
        else:
            rels.append(tuple(rel))
    if keep_redundant:
        rels = localize_relations(rels)
    return GaugeBasis(tuple(generators), tuple(kept), tuple(rels), keep_redundant, tuple(labels))


def localize_relations(relations: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Shrink a relation basis by greedy pairwise sums until no sum helps.

    Elimination records each relation against whatever happened to be kept
    earlier, which makes them long; summing overlapping relations recovers
    the short local ones without changing the span.
    """
    rels = [sum(1 << k for k in r) for r in relations]
    changed = True
    while changed:
        changed = False
        where: dict[int, set[int]] = {}
        for i, r in enumerate(rels):
            for k in bits_of(r):
                where.setdefault(k, set()).add(i)
        for i in range(len(rels)):
            best, weight = rels[i], rels[i].bit_count()
            near = set().union(*(where[k] for k in bits_of(rels[i])))
            for j in sorted(near - {i}):
                trial = rels[i] ^ rels[j]
                if trial.bit_count() < weight:
                    best, weight = trial, trial.bit_count()
            if best != rels[i]:
                rels[i] = best
                changed = True
    return sorted((tuple(bits_of(r)) for r in rels), key=lambda r: (r[0], len(r)))


def gauge_basis(circuit: Circuit, keep_redundant: bool | None = None) -> GaugeBasis:
    """Basis for ``circuit``; toric families keep the overcomplete set by default."""
    if keep_redundant is None:
        keep_redundant = bool(circuit.family and circuit.family.startswith("toric"))
    cands = gauge_candidates(circuit)
    return reduce_to_basis([g for g, _ in cands], keep_redundant, [lab for _, lab in cands])


def find_gauge_symmetries(basis: GaugeBasis) -> list[frozenset[int]]:
    """Spin subsets whose joint flip leaves every interaction invariant.

    Spins are indexed like ``basis.generators``; a fully reduced basis has none.
    """
    if not basis.overcomplete:
        return []
    return [frozenset(r) for r in basis.redundancies]


# -- stabilizers and observables ------------------------------------------------

def _site_index(gens: Sequence[SpacetimePauli]) -> dict[int, list[int]]:
    where: dict[int, list[int]] = {}
    for k, g in enumerate(gens):
        for i in g.indices():
            where.setdefault(i, []).append(k)
    return where


def stabilizer_generators(basis: GaugeBasis) -> list[SpacetimePauli]:
    """Generators of the gauge group's center (the spacetime stabilizers)."""
    gens = [basis.candidates[i] for i in basis.kept]
    if not gens:
        return []
    where = _site_index(gens)
    cols = []
    for k, g in enumerate(gens):
        col = 0
        near = {j for i in g.indices() for j in where[i]}
        for j in near:
            if not g.commutes(gens[j]):
                col |= 1 << j
        cols.append(col)
    out = []
    for mask in nullspace(cols):
        prod = SpacetimePauli.identity(gens[0].num_qubits, gens[0].num_layers)
        for k in bits_of(mask):
            prod = prod * gens[k]
        out.append(prod)
    return out


def in_gauge_group(basis: GaugeBasis, p: SpacetimePauli) -> bool:
    elim = Eliminator()
    for i in basis.kept:
        elim.add(_vec(basis.candidates[i]))
    return elim.contains(_vec(p))


def observable_problems(circuit: Circuit, basis: GaugeBasis | None = None) -> list[str]:
    """Reasons the declared observables are not usable logical representatives.

    The center of the gauge group holds both the detectors and the
    unmeasured logical readouts. A representative flips some of the latter, so
    it must anticommute with at least one stabilizer; more precisely, the
    commutation signatures of the declared representatives against the
    stabilizer group must be linearly independent (which also excludes gauge
    operators). A further check reports logical classes that exist in the
    circuit but are not spanned by the declarations.
    """
    if not circuit.observables:
        return []
    basis = basis or gauge_basis(circuit, keep_redundant=False)
    stabs = stabilizer_generators(basis)
    problems = []
    sig = Eliminator()
    for obs in circuit.observables:
        rep = obs.representative
        mask = 0
        for j, s in enumerate(stabs):
            if not rep.commutes(s):
                mask |= 1 << j
        if mask == 0:
            problems.append(f"observable {obs.name} commutes with every stabilizer "
                            "(it is a gauge operator or an undetectable logical)")
        elif sig.add(mask) is not None:
            problems.append(f"observable {obs.name} flips the same stabilizers as a "
                            "product of earlier observables")
    if problems:
        return problems
    k = len(circuit.observables)
    size = circuit.num_qubits * circuit.duration
    extra = 2 * size - (len(stabs) - k) - (basis.rank + k)
    if extra:
        problems.append(f"{extra} independent logical class(es) are not spanned "
                        "by the declared observables")
    return problems


# -- propagation -----------------------------------------------------------------

def _step(local: dict[int, tuple[int, int]], ops, forward: bool, t: int) -> None:
    for op in ops:
        bits = [local.get(q, (0, 0)) for q in op.qubits]
        if not any(x or z for x, z in bits):
            continue
        if op.kind == "U":
            # every supported gate is its own inverse up to phase
            for q, b in zip(op.qubits, conjugate_local(op.name, bits)):
                local[q] = b
        elif op.kind == "M":
            mx = 1 if "X" in op.name else 0
            mz = 1 - mx
            anti = sum(x * mz + z * mx for x, z in bits) % 2
            if anti:
                raise Blocked(f"anticommutes with {op.text()} at t={t}")
        else:
            # only the post-reset side is gauge, so a reset can only absorb
            # its own basis when moving backwards
            rx = 1 if op.name == "X" else 0
            (x, z), = bits
            if forward or (x, z) != (rx, 1 - rx):
                raise Blocked(f"cannot pass {op.text()} at t={t}")
            local[op.qubits[0]] = (0, 0)


def propagate(p: SpacetimePauli, circuit: Circuit, to_layer: int) -> SpacetimePauli:
    """Move a single-layer Pauli to ``to_layer`` keeping it gauge-equivalent."""
    layers = p.layers()
    if len(layers) > 1:
        raise ValueError("propagate expects a single-layer Pauli")
    if not 0 <= to_layer < circuit.duration:
        raise ValueError(f"layer {to_layer} outside grid")
    if not layers:
        return p
    layer = layers[0]
    local = {q: ((p.x >> p.index(q, layer)) & 1, (p.z >> p.index(q, layer)) & 1)
             for _, q, _ in p.sites()}
    by_t = circuit.by_time()
    if to_layer >= layer:
        for t in range(layer + 1, to_layer + 1):
            _step(local, by_t[t], True, t)
    else:
        for t in range(layer, to_layer, -1):
            _step(local, by_t[t], False, t)
    sites = [(_letter(b), q, to_layer) for q, b in local.items() if b != (0, 0)]
    return SpacetimePauli.from_sites(p.num_qubits, p.num_layers, sites)
