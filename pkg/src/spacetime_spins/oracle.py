"""Exact reference computations for small instances.

Three brute-force enumerations (spin configurations, gauge-group elements and
whole error patterns) walk their configurations in Gray-code order so that
each step touches one variable. :class:`EliminationPlan` is an exact
variable-elimination contraction for models of small treewidth, batched over
disorder realizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .circuit import Circuit
from .gf2 import Eliminator
from .pauli import SpacetimePauli
from .spacetime import GaugeBasis, _vec, gauge_basis
from .spinmodel import GeneralPauli, IndependentXZ, SpinModel

__all__ = [
    "TooLarge",
    "ExactResult",
    "exact_partition",
    "log_coset_probability",
    "coset_probability",
    "exact_ml_success",
    "exact_class_log_partitions",
    "EliminationPlan",
    "letter_log_probabilities",
]

MAX_SPINS = 24
MAX_ERROR_BITS = 26


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ExactResult:
    log_z: tuple[float, ...]
    labels: tuple[str, ...]
    enumerated: int


# -- shared Gray-code kernels -------------------------------------------------------

@numba.njit(cache=True)
def _gray_spins(m, indptr, members, la, ld, agree0):
    """log sum over 2^m spin states of prod_c (agree ? e^la : e^ld)."""
    agree = agree0.copy()
    logw = 0.0
    dead = 0
    for c in range(agree.size):
        if agree[c]:
            if la[c] == -np.inf:
                dead += 1
            else:
                logw += la[c]
        else:
            if ld[c] == -np.inf:
                dead += 1
            else:
                logw += ld[c]
    ref = logw if dead == 0 else -np.inf
    acc = 1.0 if dead == 0 else 0.0
    for i in range(1, 1 << m):
        s = 0
        while not (i >> s) & 1:
            s += 1
        for j in range(indptr[s], indptr[s + 1]):
            c = members[j]
            old = la[c] if agree[c] else ld[c]
            new = ld[c] if agree[c] else la[c]
            agree[c] = not agree[c]
            if old == -np.inf:
                dead -= 1
            else:
                logw -= old
            if new == -np.inf:
                dead += 1
            else:
                logw += new
        if dead == 0:
            if ref == -np.inf:
                ref = logw
                acc = 1.0
            elif logw > ref:
                acc = acc * math.exp(ref - logw) + 1.0
                ref = logw
            else:
                acc += math.exp(logw - ref)
    if acc == 0.0:
        return -np.inf
    return ref + math.log(acc)


@numba.njit(cache=True)
def _gray_letters(nvars, var_site, var_mask, var_label, letter0, logp, table):
    """Accumulate prob of every variable assignment into ``table[label]``.

    Each variable toggles bits ``var_mask`` of the letter at ``var_site``;
    letters index ``logp`` (I=0, X=1, Z=2, Y=3). Returns the log reference
    scale of ``table``.
    """
    letter = letter0.copy()
    logw = 0.0
    dead = 0
    for s in range(letter.size):
        v = logp[letter[s]]
        if v == -np.inf:
            dead += 1
        else:
            logw += v
    label = 0
    ref = logw if dead == 0 else 0.0
    if dead == 0:
        table[label] += 1.0
    for i in range(1, 1 << nvars):
        k = 0
        while not (i >> k) & 1:
            k += 1
        s = var_site[k]
        old = logp[letter[s]]
        letter[s] ^= var_mask[k]
        new = logp[letter[s]]
        if old == -np.inf:
            dead -= 1
        else:
            logw -= old
        if new == -np.inf:
            dead += 1
        else:
            logw += new
        label ^= var_label[k]
        if dead == 0:
            table[label] += math.exp(logw - ref)
    return ref


# -- spin-model partition function ---------------------------------------------------

def _csr(num_spins: int, interactions) -> tuple[np.ndarray, np.ndarray]:
    lists: list[list[int]] = [[] for _ in range(num_spins)]
    for c, inter in enumerate(interactions):
        for s in inter.spins:
            lists[s].append(c)
    indptr = np.zeros(num_spins + 1, dtype=np.int64)
    for s, lst in enumerate(lists):
        indptr[s + 1] = indptr[s] + len(lst)
    flat = np.array([c for lst in lists for c in lst], dtype=np.int64)
    return indptr, flat


def exact_partition(model: SpinModel, eta: Sequence[int], form: str = "probability") -> float:
    """Exact ``log Z`` by enumerating all ``2^m`` spin states.

    ``form="probability"`` uses the normalized factors and adds the model's
    ``log_offset`` so the result is the log coset probability;
    ``form="boltzmann"`` returns ``log sum exp(-H)`` with
    ``H = -sum_c K_c eta_c prod sigma`` (constant terms included).
    """
    m = model.num_spins
    if m > MAX_SPINS:
        raise TooLarge(f"{m} spins exceeds the enumeration limit of {MAX_SPINS}")
    eta = np.asarray(eta)
    if eta.shape != (len(model.interactions),):
        raise ValueError("eta size does not match the model")
    if not model.interactions:
        return m * math.log(2.0) + (model.log_offset if form == "probability" else 0.0)
    indptr, flat = _csr(m, model.interactions)
    agree0 = eta > 0
    if form == "probability":
        la = np.array([i.log_agree for i in model.interactions])
        ld = np.array([i.log_disagree for i in model.interactions])
        return float(_gray_spins(m, indptr, flat, la, ld, agree0)) + model.log_offset
    if form == "boltzmann":
        k = np.array([i.coupling for i in model.interactions])
        if not np.all(np.isfinite(k)):
            raise ValueError("boltzmann form needs finite couplings")
        return float(_gray_spins(m, indptr, flat, k, -k, agree0))
    raise ValueError(f"unknown form {form!r}")


# -- gauge-group enumeration ---------------------------------------------------------

def letter_log_probabilities(channel) -> np.ndarray:
    """log P of I, X, Z, Y (letter code ``x + 2z``) at one site."""
    if isinstance(channel, IndependentXZ):
        px, pz = channel.p_x, channel.p_z
        probs = [(1 - px) * (1 - pz), px * (1 - pz), (1 - px) * pz, px * pz]
    elif isinstance(channel, GeneralPauli):
        d = channel.probabilities()
        probs = [d["I"], d["X"], d["Z"], d["Y"]]
    else:
        raise TypeError(f"unsupported channel {channel!r}")
    with np.errstate(divide="ignore"):
        return np.log(np.array(probs, dtype=np.float64))


def _letters_of(p: SpacetimePauli) -> np.ndarray:
    out = np.zeros(p.size, dtype=np.int64)
    for i in p.indices():
        out[i] = ((p.x >> i) & 1) | (((p.z >> i) & 1) << 1)
    return out


def log_coset_probability(error: SpacetimePauli, basis: GaugeBasis, channel) -> float:
    gens = [basis.candidates[i] for i in basis.kept]
    if len(gens) > MAX_SPINS:
        raise TooLarge(f"{len(gens)} independent generators exceeds {MAX_SPINS}")
    # one enumeration variable per (generator, site) toggle, grouped so a
    # generator flips all of its sites at once
    letter0 = _letters_of(error)
    logp = letter_log_probabilities(channel)
    if not gens:
        return float(np.sum(logp[letter0]))
    return _coset_kernel(gens, letter0, logp)


def _coset_kernel(gens, letter0, logp) -> float:
    indptr = [0]
    sites, masks = [], []
    for g in gens:
        for i in g.indices():
            sites.append(i)
            masks.append(((g.x >> i) & 1) | (((g.z >> i) & 1) << 1))
        indptr.append(len(sites))
    return float(_gray_group(len(gens), np.array(indptr, dtype=np.int64),
                             np.array(sites, dtype=np.int64), np.array(masks, dtype=np.int64),
                             letter0, logp))


@numba.njit(cache=True)
def _gray_group(m, indptr, sites, masks, letter0, logp):
    letter = letter0.copy()
    logw = 0.0
    dead = 0
    for s in range(letter.size):
        v = logp[letter[s]]
        if v == -np.inf:
            dead += 1
        else:
            logw += v
    ref = logw if dead == 0 else -np.inf
    acc = 1.0 if dead == 0 else 0.0
    for i in range(1, 1 << m):
        k = 0
        while not (i >> k) & 1:
            k += 1
        for j in range(indptr[k], indptr[k + 1]):
            s = sites[j]
            old = logp[letter[s]]
            letter[s] ^= masks[j]
            new = logp[letter[s]]
            if old == -np.inf:
                dead -= 1
            else:
                logw -= old
            if new == -np.inf:
                dead += 1
            else:
                logw += new
        if dead == 0:
            if ref == -np.inf:
                ref = logw
                acc = 1.0
            elif logw > ref:
                acc = acc * math.exp(ref - logw) + 1.0
                ref = logw
            else:
                acc += math.exp(logw - ref)
    if acc == 0.0:
        return -np.inf
    return ref + math.log(acc)


def coset_probability(error: SpacetimePauli, basis: GaugeBasis, channel) -> float:
    """Sum of ``P(E g)`` over every element ``g`` of the gauge group."""
    return math.exp(log_coset_probability(error, basis, channel))


# -- maximum-likelihood success ---------------------------------------------------------

def _half(circuit: Circuit, basis: GaugeBasis, channel) -> str | None:
    """``"x"``/``"z"`` when the decoding problem reduces to one CSS half."""
    if not isinstance(channel, IndependentXZ) or not basis.is_css():
        return None
    reps = [o.representative for o in circuit.observables]
    if reps and all(r.is_pure_x() for r in reps):
        return "x"
    if reps and all(r.is_pure_z() for r in reps):
        return "z"
    return None


def _quotient_labels(gauge_vecs, num_vars, logical_vecs):
    """Compact coset labels of unit vectors and logicals modulo the gauge span."""
    elim = Eliminator()
    for v in gauge_vecs:
        elim.add(v)
    free = [j for j in range(num_vars) if j not in elim.rows]
    pos = {j: b for b, j in enumerate(free)}

    def compact(v: int) -> int:
        r = elim.residue(v)
        out = 0
        while r:
            low = r & -r
            out |= 1 << pos[low.bit_length() - 1]
            r ^= low
        return out

    units = [compact(1 << j) for j in range(num_vars)]
    return len(free), units, [compact(v) for v in logical_vecs]


def _class_table(circuit: Circuit, channel, basis: GaugeBasis | None, max_bits: int):
    basis = basis or gauge_basis(circuit, keep_redundant=False)
    n, t = circuit.num_qubits, circuit.duration
    size = n * t
    half = _half(circuit, basis, channel)
    reps = [o.representative for o in circuit.observables]
    gens = [basis.candidates[i] for i in basis.kept]
    if half == "x":
        gvecs = [g.x for g in gens if g.z == 0]
        lvecs = [r.x for r in reps]
        nvars = size
        var_site = np.arange(size)
        var_mask = np.ones(size, dtype=np.int64)
        px = channel.p_x
        with np.errstate(divide="ignore"):
            logp = np.log(np.array([1 - px, px, 1.0, 1.0]))
    elif half == "z":
        gvecs = [g.z for g in gens if g.x == 0]
        lvecs = [r.z for r in reps]
        nvars = size
        var_site = np.arange(size)
        var_mask = np.ones(size, dtype=np.int64)
        pz = channel.p_z
        with np.errstate(divide="ignore"):
            logp = np.log(np.array([1 - pz, pz, 1.0, 1.0]))
    else:
        gvecs = [_vec(g) for g in gens]
        lvecs = [_vec(r) for r in reps]
        nvars = 2 * size
        var_site = np.concatenate([np.arange(size), np.arange(size)])
        var_mask = np.concatenate([np.ones(size, dtype=np.int64), np.full(size, 2, dtype=np.int64)])
        logp = letter_log_probabilities(channel)
    if nvars > max_bits:
        raise TooLarge(f"{nvars} error bits exceeds the enumeration limit of {max_bits}")
    dim, units, labels = _quotient_labels(gvecs, nvars, lvecs)
    table = np.zeros(1 << dim)
    ref = _gray_letters(nvars, var_site.astype(np.int64), var_mask,
                        np.array(units, dtype=np.int64), np.zeros(size, dtype=np.int64),
                        logp, table)
    return table, ref, labels


def exact_ml_success(circuit: Circuit, channel, basis: GaugeBasis | None = None,
                     max_bits: int = MAX_ERROR_BITS) -> float:
    """Exact ML success probability ``sum_s max_L P(C_s L)`` over every error.

    With an IndependentXZ channel, a CSS basis and observables of one Pauli
    type only that half of the errors is enumerated (the other half factors
    out and sums to one).
    """
    if not circuit.observables:
        return 1.0
    table, ref, labels = _class_table(circuit, channel, basis, max_bits)
    shifts = [0]
    for lab in labels:
        if lab == 0:
            raise ValueError("an observable lies in the gauge group")
        shifts = shifts + [s ^ lab for s in shifts]
    if len(set(shifts)) != len(shifts):
        raise ValueError("observable representatives are not independent")
    q = np.arange(table.size, dtype=np.int64)
    stacked = np.stack([table[q ^ s] for s in shifts])
    orbit_min = np.min(np.stack([q ^ s for s in shifts]), axis=0)
    best = stacked.max(axis=0)[orbit_min == q].sum()
    total = table.sum()
    return float(best / total)


def exact_class_log_partitions(model: SpinModel, etas: Sequence[Sequence[int]]) -> np.ndarray:
    return np.array([exact_partition(model, e) for e in etas])


# -- exact contraction -------------------------------------------------------------------

class EliminationPlan:
    """Exact ``log Z`` by eliminating spins one at a time (min-fill order).

    The plan depends only on the model's structure, so it is built once and
    then evaluated on batches of sign vectors. Cost grows as ``2^width``.
    """

    def __init__(self, model: SpinModel, max_width: int = 20):
        self.model = model
        self.la = np.array([i.log_agree for i in model.interactions])
        self.ld = np.array([i.log_disagree for i in model.interactions])
        scopes = [tuple(sorted(i.spins)) for i in model.interactions]
        self.scopes = scopes
        adj: dict[int, set[int]] = {s: set() for s in range(model.num_spins)}
        holds: dict[int, set[int]] = {s: set() for s in range(model.num_spins)}
        for f, sc in enumerate(scopes):
            for s in sc:
                holds[s].add(f)
                adj[s].update(sc)
        for s in adj:
            adj[s].discard(s)
        factor_scope = {f: sc for f, sc in enumerate(scopes) if sc}
        self.constant = [f for f, sc in enumerate(scopes) if not sc]
        steps = []
        next_id = len(scopes)
        width = 0
        alive = set(range(model.num_spins))
        while alive:
            def fill(v):
                nb = list(adj[v])
                missing = 0
                for a in range(len(nb)):
                    for b in range(a + 1, len(nb)):
                        if nb[b] not in adj[nb[a]]:
                            missing += 1
                return missing, len(nb), v
            v = min(alive, key=fill)
            fs = sorted(holds[v])
            union = sorted(set().union(*(factor_scope[f] for f in fs)) if fs else {v})
            width = max(width, len(union))
            out_scope = tuple(s for s in union if s != v)
            steps.append((v, tuple(fs), tuple(union), out_scope, next_id))
            for f in fs:
                for s in factor_scope.pop(f):
                    holds[s].discard(f)
            factor_scope[next_id] = out_scope
            for s in out_scope:
                holds[s].add(next_id)
            nb = adj.pop(v)
            for a in nb:
                adj[a].discard(v)
                adj[a].update(x for x in nb if x != a)
            alive.discard(v)
            next_id += 1
        if width > max_width:
            raise TooLarge(f"elimination width {width} exceeds {max_width}")
        self.width = width
        self.steps = steps

    def _initial(self, f: int, eta: np.ndarray) -> np.ndarray:
        k = len(self.scopes[f])
        par = np.indices((2,) * k).sum(axis=0) % 2 if k else np.zeros(())
        agree = (par[None, ...] == 0) == (eta[:, f].reshape((-1,) + (1,) * k) > 0)
        return np.where(agree, self.la[f], self.ld[f])

    def log_partition(self, etas, chunk: int | None = None) -> np.ndarray:
        """``log Z`` (probability form, offset included) for each row of ``etas``."""
        etas = np.atleast_2d(np.asarray(etas))
        if chunk is None:
            chunk = max(1, (1 << 22) >> self.width)
        out = [self._run(etas[i:i + chunk]) for i in range(0, len(etas), chunk)]
        return np.concatenate(out) if out else np.zeros(0)

    def _run(self, eta: np.ndarray) -> np.ndarray:
        # tables hold linear weights rescaled to a per-row maximum of one;
        # the logs of the scale factors accumulate in ``total``
        b = eta.shape[0]
        tables: dict[int, np.ndarray] = {}
        scopes = dict(enumerate(self.scopes))
        total = np.zeros(b)
        for f in self.constant:
            total += self._initial(f, eta)
        with np.errstate(divide="ignore", invalid="ignore"):
            for v, fs, union, out_scope, new_id in self.steps:
                if not fs:
                    total += math.log(2.0)
                    continue
                acc = None
                for f in fs:
                    tab = tables.pop(f) if f in tables else np.exp(self._initial(f, eta))
                    sc = scopes[f]
                    tab = tab.reshape((b,) + tuple(2 if s in sc else 1 for s in union))
                    acc = tab if acc is None else acc * tab
                red = acc.sum(axis=1 + union.index(v))
                top = red.reshape(b, -1).max(axis=1)
                total += np.log(top)
                if out_scope:
                    scale = np.where(top > 0, top, 1.0)
                    tables[new_id] = red / scale.reshape((b,) + (1,) * (red.ndim - 1))
                    scopes[new_id] = out_scope
        return total + self.model.log_offset
