"""Gauge-spin Hamiltonians built from a gauge basis and a Pauli channel.

Every interaction is stored with its flip probability ``p`` as well as the
coupling ``K = 1/2 ln((1-p)/p)``. The factor an interaction contributes to a
coset probability is ``(1-p)`` when ``eta * prod(sigma) = +1`` and ``p``
otherwise, which equals ``exp(K eta prod sigma) / (2 cosh K)``. Summing such
factors over a spin that touches one interaction gives exactly 1, and over a
spin touching two interactions gives one factor with
``1 - 2p = (1 - 2p1)(1 - 2p2)``; :func:`simplify` relies on both facts, so it
preserves coset probabilities themselves and not just their ratios.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .spacetime import GaugeBasis

__all__ = [
    "DegenerateChannel",
    "UnsupportedDegree",
    "IndependentXZ",
    "GeneralPauli",
    "Interaction",
    "SpinModel",
    "nishimori_couplings",
    "effective_probability",
    "effective_coupling",
    "coupling_from_probability",
    "walsh_integrate",
    "build_hamiltonian",
    "simplify",
    "energy",
    "model_symmetries",
]


class DegenerateChannel(ValueError):
    """A channel probability is zero and limit handling was not requested."""


class UnsupportedDegree(ValueError):
    pass


# -- channels -------------------------------------------------------------------

@dataclass(frozen=True)
class IndependentXZ:
    p_x: float
    p_z: float

    def __post_init__(self):
        for p in (self.p_x, self.p_z):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")

    def probabilities(self) -> dict[str, float]:
        px, pz = self.p_x, self.p_z
        return {"I": (1 - px) * (1 - pz), "X": px * (1 - pz), "Y": px * pz, "Z": (1 - px) * pz}


@dataclass(frozen=True)
class GeneralPauli:
    p_i: float
    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self):
        ps = (self.p_i, self.p_x, self.p_y, self.p_z)
        if min(ps) < 0 or abs(sum(ps) - 1.0) > 1e-12:
            raise ValueError(f"probabilities {ps} must be nonnegative and sum to 1")

    def probabilities(self) -> dict[str, float]:
        return {"I": self.p_i, "X": self.p_x, "Y": self.p_y, "Z": self.p_z}


# commutator sign [[alpha, Q]] for single-qubit Paulis
def _comm(a: str, b: str) -> int:
    if a == "I" or b == "I" or a == b:
        return 1
    return -1


def nishimori_couplings(channel, allow_limits: bool = False) -> dict[str, float]:
    """K(alpha) = 1/4 sum_Q ln P(Q) [[alpha, Q]] for alpha in I, X, Y, Z.

    Zero probabilities raise :class:`DegenerateChannel` unless ``allow_limits``
    is set, in which case the infinite limits are returned.
    """
    probs = channel.probabilities()
    if min(probs.values()) <= 0.0 and not allow_limits:
        raise DegenerateChannel(f"zero probability in {probs}")
    if isinstance(channel, IndependentXZ):
        px, pz = channel.p_x, channel.p_z
        logs = [math.log(v) if v > 0 else -math.inf for v in (px, 1 - px, pz, 1 - pz)]
        return {"I": 0.5 * sum(logs), "X": coupling_from_probability(pz), "Y": 0.0,
                "Z": coupling_from_probability(px)}
    logs = {q: (math.log(p) if p > 0 else -math.inf) for q, p in probs.items()}
    out = {}
    for a in "IXYZ":
        with np.errstate(invalid="ignore"):
            val = 0.25 * float(np.sum([logs[q] * _comm(a, q) for q in "IXYZ"]))
        if math.isnan(val):
            raise DegenerateChannel(f"coupling K({a}) undefined for {probs}")
        out[a] = val
    return out


def effective_probability(x: int, z: int, p_x: float, p_z: float) -> float:
    """Probability that an odd number of ``x`` X-sites and ``z`` Z-sites flipped."""
    if x + z < 1:
        raise ValueError("component needs at least one location")
    return 0.5 * (1.0 - (1.0 - 2.0 * p_x) ** x * (1.0 - 2.0 * p_z) ** z)


def coupling_from_probability(p: float) -> float:
    """K = 1/2 ln((1-p)/p), with +-inf at p = 0 or 1."""
    if p <= 0.0:
        return math.inf
    if p >= 1.0:
        return -math.inf
    return 0.5 * (math.log1p(-p) - math.log(p))


def effective_coupling(x: int, z: int, p_x: float, p_z: float) -> float:
    return coupling_from_probability(effective_probability(x, z, p_x, p_z))


def _log_cosh(v: float) -> float:
    v = abs(v)
    return v + math.log1p(math.exp(-2.0 * v)) - math.log(2.0)


def walsh_integrate(couplings: Sequence[float]) -> list[float]:
    """Couplings left after summing out one spin touching ``couplings``.

    One interaction disappears; two merge into
    ``1/2 ln[cosh(K1+K2)/cosh(K1-K2)]``.
    """
    r = len(couplings)
    if r == 1:
        return []
    if r == 2:
        k1, k2 = couplings
        if math.isinf(k1) or math.isinf(k2):
            if math.isinf(k1) and math.isinf(k2):
                return [math.copysign(math.inf, k1 * k2)]
            finite, inf = (k2, k1) if math.isinf(k1) else (k1, k2)
            return [math.copysign(1.0, inf) * finite]
        return [0.5 * (_log_cosh(k1 + k2) - _log_cosh(k1 - k2))]
    raise UnsupportedDegree(f"cannot integrate out a spin in {r} interactions")


# -- model types ----------------------------------------------------------------

Location = tuple[str, int, int]  # (error flavor, qubit, layer)


@dataclass(frozen=True)
class Interaction:
    """One term ``-K eta prod_{k in spins} sigma_k``.

    ``p`` is the probability that the term is frustrated at the Nishimori
    point; ``members`` are the spacetime error locations whose flips toggle
    ``eta``.
    """

    spins: tuple[int, ...]
    p: float
    members: tuple[Location, ...]
    weights: tuple[int, int]

    @property
    def coupling(self) -> float:
        return coupling_from_probability(self.p)

    @property
    def log_agree(self) -> float:
        return math.log1p(-self.p) if self.p < 1 else -math.inf

    @property
    def log_disagree(self) -> float:
        return math.log(self.p) if self.p > 0 else -math.inf

    @property
    def flavor(self) -> str:
        kinds = {m[0] for m in self.members}
        return kinds.pop() if len(kinds) == 1 else "mixed"

    def is_constant(self) -> bool:
        return not self.spins


@dataclass(frozen=True)
class SpinModel:
    """Spins, interactions and the bookkeeping needed for exact coset sums.

    ``exp(log_offset) * sum_sigma prod_c factor_c`` equals the coset
    probability, where ``factor_c`` is ``1-p`` or ``p``.
    """

    num_spins: int
    interactions: tuple[Interaction, ...]
    num_qubits: int
    num_layers: int
    log_offset: float = 0.0
    spin_origin: tuple[int, ...] = ()
    spin_flavors: tuple[str, ...] = ()
    channel: object = None
    simplified: bool = False
    _index: dict = field(default=None, compare=False, repr=False)

    @property
    def location_index(self) -> dict[Location, int]:
        if self._index is None:
            idx = {}
            for c, inter in enumerate(self.interactions):
                for loc in inter.members:
                    idx[loc] = c
            object.__setattr__(self, "_index", idx)
        return self._index

    @property
    def css_split(self) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
        """Interaction indices of ``H_X`` and ``H_Z`` when the model is CSS."""
        hx, hz = [], []
        for c, inter in enumerate(self.interactions):
            f = inter.flavor
            if f == "X":
                hx.append(c)
            elif f == "Z":
                hz.append(c)
            else:
                return None
        xs = {s for c in hx for s in self.interactions[c].spins}
        zs = {s for c in hz for s in self.interactions[c].spins}
        if xs & zs:
            return None
        return tuple(hx), tuple(hz)

    @property
    def couplings(self) -> np.ndarray:
        return np.array([i.coupling for i in self.interactions])

    def constant_terms(self) -> list[int]:
        return [c for c, i in enumerate(self.interactions) if i.is_constant()]

    def extensive_terms(self) -> list[int]:
        """Constant terms spanning at least a full time slice of locations."""
        return [c for c in self.constant_terms()
                if len(self.interactions[c].members) >= max(self.num_qubits, 2)]

    def spin_degrees(self) -> list[int]:
        deg = [0] * self.num_spins
        for inter in self.interactions:
            for s in inter.spins:
                deg[s] += 1
        return deg

    def restrict(self, indices: Iterable[int]) -> "SpinModel":
        """Sub-model on the given interactions, spins renumbered compactly.

        Dropped interactions must be independent of the kept spins (as in a
        CSS half); ``log_offset`` is not carried over.
        """
        keep = list(indices)
        spins = sorted({s for c in keep for s in self.interactions[c].spins})
        remap = {s: i for i, s in enumerate(spins)}
        inters = tuple(
            Interaction(tuple(remap[s] for s in self.interactions[c].spins),
                        self.interactions[c].p, self.interactions[c].members,
                        self.interactions[c].weights)
            for c in keep)
        origin = tuple(self.spin_origin[s] for s in spins) if self.spin_origin else tuple(spins)
        flav = tuple(self.spin_flavors[s] for s in spins) if self.spin_flavors else ()
        return SpinModel(len(spins), inters, self.num_qubits, self.num_layers, 0.0,
                         origin, flav, self.channel, self.simplified)

    def summary(self) -> dict:
        weights: dict[str, int] = {}
        for inter in self.interactions:
            key = f"{inter.weights[0]},{inter.weights[1]}"
            weights[key] = weights.get(key, 0) + 1
        return {
            "spins": self.num_spins,
            "interactions": len(self.interactions),
            "constant_terms": len(self.constant_terms()),
            "extensive_terms": len(self.extensive_terms()),
            "css": self.css_split is not None,
            "weights": dict(sorted(weights.items())),
            "log_offset": self.log_offset,
        }


# -- construction -----------------------------------------------------------------

# error flavor -> probe Pauli whose commutator with the error gives eta
PROBE = {"X": "Z", "Z": "X", "Y": "Y"}


def _flavor_probabilities(channel) -> dict[str, float]:
    """Frustration probability of a single-location term of each flavor."""
    if isinstance(channel, IndependentXZ):
        return {"X": channel.p_x, "Z": channel.p_z}
    k = nishimori_couplings(channel)
    # flavor alpha is probed by PROBE[alpha] with coupling K(PROBE[alpha])
    return {f: 1.0 / (1.0 + math.exp(2.0 * k[PROBE[f]])) for f in "XYZ"}


def _site_offset(channel) -> float:
    if isinstance(channel, IndependentXZ):
        return 0.0
    k = nishimori_couplings(channel)
    return k["I"] + sum(math.log(2.0) + _log_cosh(k[a]) for a in "XYZ")


def build_hamiltonian(basis: GaugeBasis, channel, include_constants: bool = True) -> SpinModel:
    """One spin per generator and one interaction per (flavor, qubit, layer).

    The interaction of flavor ``X`` at a site collects the generators with X or
    Y there (they anticommute with a Z probe); flavor ``Z`` collects Z or Y.
    General channels add a ``Y`` flavor collecting generators with X or Z.
    """
    gens = basis.generators
    n, t = basis.num_qubits, basis.num_layers
    probs = _flavor_probabilities(channel)
    flavors = ("X", "Z") if isinstance(channel, IndependentXZ) else ("X", "Y", "Z")
    touching: dict[tuple[str, int], list[int]] = {}
    for k, g in enumerate(gens):
        for i in g.indices():
            bx, bz = (g.x >> i) & 1, (g.z >> i) & 1
            if bx:
                touching.setdefault(("X", i), []).append(k)
            if bz:
                touching.setdefault(("Z", i), []).append(k)
            if bx != bz and "Y" in flavors:
                touching.setdefault(("Y", i), []).append(k)
    inters = []
    for i in range(n * t):
        q, layer = i % n, i // n
        for f in flavors:
            spins = tuple(touching.get((f, i), ()))
            if not spins and not include_constants:
                continue
            w = (1 if f == "X" else 0, 1 if f == "Z" else 0)
            inters.append(Interaction(spins, probs[f], ((f, q, layer),), w))
    return SpinModel(
        num_spins=len(gens),
        interactions=tuple(inters),
        num_qubits=n,
        num_layers=t,
        # each group element is counted 2^(redundancies) times by an overcomplete spin set
        log_offset=n * t * _site_offset(channel)
        - (len(basis.redundancies) * math.log(2.0) if basis.overcomplete else 0.0),
        spin_origin=tuple(range(len(gens))),
        spin_flavors=basis.flavors,
        channel=channel,
    )


def _merge_p(p1: float, p2: float) -> float:
    return p1 + p2 - 2.0 * p1 * p2


def simplify(model: SpinModel) -> SpinModel:
    """Integrate out every spin of degree <= 2 until none remain.

    A spin in one interaction removes that interaction together with all its
    locations (they are gauge-trivial); a spin in two interactions fuses them
    into one whose spin set is the symmetric difference and whose locations
    are the union. Free spins contribute ``ln 2`` to ``log_offset``.
    """
    inters: dict[int, list] = {}
    owners: dict[int, set[int]] = {s: set() for s in range(model.num_spins)}
    for c, inter in enumerate(model.interactions):
        inters[c] = [set(inter.spins), inter.p, list(inter.members), list(inter.weights)]
        for s in inter.spins:
            owners[s].add(c)
    next_id = len(model.interactions)
    offset = model.log_offset
    alive = set(range(model.num_spins))
    heap = [s for s in alive if len(owners[s]) <= 2]
    heapq.heapify(heap)
    while heap:
        s = heapq.heappop(heap)
        if s not in alive or len(owners[s]) > 2:
            continue
        cs = sorted(owners[s])
        alive.discard(s)
        del owners[s]
        if not cs:
            offset += math.log(2.0)
            continue
        if len(cs) == 1:
            spins = inters.pop(cs[0])[0]
            spins.discard(s)
            for other in spins:
                owners[other].discard(cs[0])
                if len(owners[other]) <= 2:
                    heapq.heappush(heap, other)
            continue
        a, b = inters.pop(cs[0]), inters.pop(cs[1])
        spins = (a[0] ^ b[0]) - {s}
        for other in (a[0] | b[0]) - {s}:
            owners[other].discard(cs[0])
            owners[other].discard(cs[1])
        merged = [spins, _merge_p(a[1], b[1]), a[2] + b[2], [a[3][0] + b[3][0], a[3][1] + b[3][1]]]
        inters[next_id] = merged
        for other in spins:
            owners[other].add(next_id)
        for other in (a[0] | b[0]) - {s}:
            if len(owners[other]) <= 2:
                heapq.heappush(heap, other)
        next_id += 1
    order = sorted(alive)
    remap = {s: i for i, s in enumerate(order)}
    out = []
    for spins, p, members, w in inters.values():
        members = sorted(members, key=lambda m: (m[2], m[1], m[0]))
        out.append(Interaction(tuple(sorted(remap[s] for s in spins)), p, tuple(members), tuple(w)))
    out.sort(key=lambda i: (i.members[0][2], i.members[0][1], i.members[0][0]))
    origin = model.spin_origin or tuple(range(model.num_spins))
    flav = model.spin_flavors
    return SpinModel(
        num_spins=len(order),
        interactions=tuple(out),
        num_qubits=model.num_qubits,
        num_layers=model.num_layers,
        log_offset=offset,
        spin_origin=tuple(origin[s] for s in order),
        spin_flavors=tuple(flav[s] for s in order) if flav else (),
        channel=model.channel,
        simplified=True,
    )


def energy(model: SpinModel, eta: Sequence[int], sigma: Sequence[int]) -> float:
    """-sum_c K_c eta_c prod_{k in c} sigma_k, constants included."""
    eta = np.asarray(eta)
    sigma = np.asarray(sigma)
    if eta.shape != (len(model.interactions),) or sigma.shape != (model.num_spins,):
        raise ValueError("eta/sigma sizes do not match the model")
    total = 0.0
    for c, inter in enumerate(model.interactions):
        prod = int(eta[c])
        for s in inter.spins:
            prod *= int(sigma[s])
        k = inter.coupling
        if k == 0.0:
            continue
        total -= k * prod
    return total


def model_symmetries(model: SpinModel, basis: GaugeBasis) -> list[frozenset[int]]:
    """Gauge symmetries of ``basis`` expressed in ``model``'s spin numbering.

    Spins eliminated by :func:`simplify` are dropped from each flip set; the
    remaining set is still a symmetry of the simplified interactions.
    """
    from .spacetime import find_gauge_symmetries

    where = {g: i for i, g in enumerate(model.spin_origin)}
    out = []
    for sym in find_gauge_symmetries(basis):
        kept = frozenset(where[g] for g in sym if g in where)
        if kept:
            out.append(kept)
    return out
