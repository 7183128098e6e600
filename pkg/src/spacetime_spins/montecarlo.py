"""Free-energy Monte Carlo: Metropolis, replica exchange, multi-step Bennett
acceptance ratios and population annealing.

Energies are ``H = -sum_c K_c eta_c prod_{k in c} sigma_k`` over non-constant
interactions. Constant interactions never change under spin flips, so their
contribution to free energies is added in closed form. All estimates are in
the Boltzmann convention ``F = -ln sum exp(-H)`` with constants included;
``FreeEnergyEstimate.log_norm`` converts to log coset probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .disorder import make_rng
from .pauli import SpacetimePauli
from .spinmodel import SpinModel

__all__ = [
    "NonAdjacentChain",
    "PopulationCollapse",
    "TemperatureSchedule",
    "FreeEnergyEstimate",
    "LadderState",
    "MCModel",
    "metropolis_sweep",
    "replica_exchange",
    "bennett_delta_f",
    "decompose_logical",
    "population_annealing_f",
    "block_jackknife",
]


class NonAdjacentChain(ValueError):
    """A Bennett step flips more interaction signs than allowed."""


class PopulationCollapse(RuntimeError):
    pass


# -- schedules and results -----------------------------------------------------------

@dataclass(frozen=True)
class TemperatureSchedule:
    betas: tuple[float, ...]

    def __post_init__(self):
        b = self.betas
        if not b or b[-1] != 1.0:
            raise ValueError("schedule must end at beta = 1")
        if any(x > y for x, y in zip(b, b[1:])):
            raise ValueError("schedule must be ascending")
        if b[0] < 0:
            raise ValueError("negative beta")

    @classmethod
    def geometric(cls, count: int, beta_min: float = 0.1) -> "TemperatureSchedule":
        if count == 1:
            return cls((1.0,))
        b = beta_min * (1.0 / beta_min) ** (np.arange(count) / (count - 1))
        b[-1] = 1.0
        return cls(tuple(float(x) for x in b))

    @classmethod
    def linear(cls, count: int, beta_min: float = 0.0) -> "TemperatureSchedule":
        b = np.linspace(beta_min, 1.0, count)
        b[-1] = 1.0
        return cls(tuple(float(x) for x in b))

    def __len__(self) -> int:
        return len(self.betas)


@dataclass(frozen=True)
class FreeEnergyEstimate:
    value: float
    variance: float
    method: str
    sweeps: int = 0
    population: int = 0
    seed: int | None = None
    log_norm: float = 0.0  # ln Z_prob = -F + log_norm (cancels in differences)

    @property
    def sigma(self) -> float:
        return math.sqrt(max(self.variance, 0.0))


# -- model arrays ------------------------------------------------------------------------

class MCModel:
    """Flat arrays for the sampling kernels; constant terms are split off."""

    def __init__(self, model: SpinModel):
        inters = model.interactions
        self.model = model
        self.active = np.array([c for c, i in enumerate(inters) if i.spins], dtype=np.int64)
        self.constant = np.array([c for c, i in enumerate(inters) if not i.spins], dtype=np.int64)
        k = np.array([i.coupling for i in inters])
        if not np.all(np.isfinite(k)):
            raise ValueError("Monte Carlo needs finite couplings (0 < p < 1)")
        self.k_all = k
        self.K = k[self.active]
        self.m = model.num_spins
        per_spin: list[list[int]] = [[] for _ in range(self.m)]
        cptr, cidx = [0], []
        for a, c in enumerate(self.active):
            for s in inters[c].spins:
                per_spin[s].append(a)
                cidx.append(s)
            cptr.append(len(cidx))
        self.sptr = np.cumsum([0] + [len(x) for x in per_spin]).astype(np.int64)
        self.sidx = np.array([a for x in per_spin for a in x], dtype=np.int64)
        self.cptr = np.array(cptr, dtype=np.int64)
        self.cidx = np.array(cidx, dtype=np.int64)
        self.log_norm = model.log_offset - float(np.sum(np.logaddexp(k, -k)))

    def active_eta(self, eta) -> np.ndarray:
        return np.asarray(eta, dtype=np.float64)[..., self.active]

    def constant_energy(self, eta) -> float:
        eta = np.asarray(eta, dtype=np.float64)
        return float(-np.sum(self.k_all[self.constant] * eta[self.constant]))

    def products(self, sigma: np.ndarray) -> np.ndarray:
        return _products(sigma.astype(np.int8), self.cptr, self.cidx)

    def energies(self, sigma: np.ndarray, eta_active: np.ndarray) -> np.ndarray:
        prod = self.products(np.atleast_2d(sigma))
        return -np.sum(self.K * eta_active * prod, axis=-1)


@numba.njit(cache=True)
def _products(sigma, cptr, cidx):
    rows = sigma.shape[0]
    nc = cptr.size - 1
    out = np.ones((rows, nc), dtype=np.int8)
    for r in range(rows):
        for c in range(nc):
            v = 1
            for j in range(cptr[c], cptr[c + 1]):
                v *= sigma[r, cidx[j]]
            out[r, c] = v
    return out


@numba.njit(cache=True)
def _sweep(sigma, prod, eta, K, sptr, sidx, beta, energy, u):
    rows, m = sigma.shape
    accepted = 0
    for r in range(rows):
        b = beta[r]
        for s in range(m):
            d = 0.0
            for j in range(sptr[s], sptr[s + 1]):
                c = sidx[j]
                d += K[c] * eta[r, c] * prod[r, c]
            de = 2.0 * d
            if de <= 0.0 or u[r, s] < math.exp(-b * de):
                sigma[r, s] = -sigma[r, s]
                for j in range(sptr[s], sptr[s + 1]):
                    c = sidx[j]
                    prod[r, c] = -prod[r, c]
                energy[r] += de
                accepted += 1
    return accepted


@numba.njit(cache=True)
def _exchange(sigma, prod, energy, beta, ladders, size, u):
    accepted = 0
    for l in range(ladders):
        base = l * size
        for i in range(size - 1):
            a, b = base + i, base + i + 1
            x = (beta[b] - beta[a]) * (energy[b] - energy[a])
            if x >= 0.0 or u[l, i] < math.exp(x):
                for s in range(sigma.shape[1]):
                    t = sigma[a, s]
                    sigma[a, s] = sigma[b, s]
                    sigma[b, s] = t
                for c in range(prod.shape[1]):
                    t = prod[a, c]
                    prod[a, c] = prod[b, c]
                    prod[b, c] = t
                t2 = energy[a]
                energy[a] = energy[b]
                energy[b] = t2
                accepted += 1
    return accepted


# -- ladder state ----------------------------------------------------------------------

@dataclass
class LadderState:
    """Replica configurations for one or more lockstep ladders.

    Row ``l * size + i`` holds replica ``i`` (at ``betas[i]``) of ladder ``l``.
    """

    mc: MCModel
    eta: np.ndarray  # (rows, active interactions)
    beta: np.ndarray
    sigma: np.ndarray
    prod: np.ndarray
    energy: np.ndarray
    ladders: int = 1
    size: int = 1
    debug: bool = False
    sweeps: int = 0
    accepted: int = 0
    swaps: int = 0

    @classmethod
    def create(cls, mc: MCModel, etas: Sequence[Sequence[int]], schedule: TemperatureSchedule,
               rng: np.random.Generator, debug: bool = False) -> "LadderState":
        etas = np.atleast_2d(np.asarray(etas))
        ladders, size = etas.shape[0], len(schedule)
        eta = np.repeat(mc.active_eta(etas), size, axis=0)
        beta = np.tile(np.asarray(schedule.betas, dtype=np.float64), ladders)
        sigma = np.where(rng.random((ladders * size, mc.m)) < 0.5, -1, 1).astype(np.int8)
        prod = mc.products(sigma)
        energy = -np.sum(mc.K * eta * prod, axis=1)
        return cls(mc, eta, beta, sigma, prod, energy, ladders, size, debug)

    def check(self) -> None:
        exact = -np.sum(self.mc.K * self.eta * self.mc.products(self.sigma), axis=1)
        if not np.allclose(exact, self.energy, atol=1e-8):
            raise AssertionError("stored energies drifted from the configurations")

    def refresh(self) -> None:
        self.prod = self.mc.products(self.sigma)
        self.energy = -np.sum(self.mc.K * self.eta * self.prod, axis=1)

    def physical_rows(self) -> np.ndarray:
        return np.arange(self.ladders) * self.size + self.size - 1

    def rng_state(self, rng: np.random.Generator) -> dict:
        return {"rng": rng.bit_generator.state, "sigma": self.sigma.tolist(), "sweeps": self.sweeps}


def metropolis_sweep(state: LadderState, rng: np.random.Generator, beta=None) -> int:
    """One sequential single-spin Metropolis sweep over every row of ``state``."""
    mc = state.mc
    b = state.beta if beta is None else np.broadcast_to(np.asarray(beta, dtype=np.float64),
                                                         state.beta.shape).copy()
    u = rng.random(state.sigma.shape)
    acc = _sweep(state.sigma, state.prod, state.eta, mc.K, mc.sptr, mc.sidx, b, state.energy, u)
    state.sweeps += 1
    state.accepted += acc
    if state.debug:
        state.check()
    elif state.sweeps % 256 == 0:
        state.refresh()
    return int(acc)


def replica_exchange(state: LadderState, rng: np.random.Generator) -> int:
    """Attempt swaps between every adjacent temperature pair of every ladder."""
    if state.size < 2:
        return 0
    u = rng.random((state.ladders, state.size - 1))
    acc = _exchange(state.sigma, state.prod, state.energy, state.beta, state.ladders, state.size, u)
    state.swaps += acc
    return int(acc)


# -- jackknife ---------------------------------------------------------------------------

def block_jackknife(series: np.ndarray, estimator, blocks: int = 20) -> tuple[float, float]:
    """Estimate and jackknife variance over contiguous blocks of the first axis."""
    n = len(series)
    blocks = max(2, min(blocks, n))
    edges = np.linspace(0, n, blocks + 1).astype(int)
    full = estimator(series)
    loo = np.array([estimator(np.concatenate([series[:edges[i]], series[edges[i + 1]:]]))
                    for i in range(blocks)])
    var = (blocks - 1) / blocks * float(np.sum((loo - loo.mean()) ** 2))
    return float(full), var


# -- Bennett chains ----------------------------------------------------------------------

def decompose_logical(logical: SpacetimePauli) -> list[SpacetimePauli]:
    """Single-site factors of ``logical`` in (layer, qubit) order."""
    n, t = logical.num_qubits, logical.num_layers
    return [SpacetimePauli.from_sites(n, t, [site]) for site in logical.sites()]


def bennett_delta_f(
    model: SpinModel,
    eta_chain: Sequence[Sequence[int]],
    schedule: TemperatureSchedule,
    sweeps: int = 2000,
    seed: int = 0,
    thermalize: int = 1000,
    max_flips: int = 4,
    blocks: int = 20,
    exchange_every: int = 1,
    mc: MCModel | None = None,
) -> FreeEnergyEstimate:
    """``F(eta_M) - F(eta_0)`` from a telescoped chain of Bennett ratios.

    One replica-exchange ladder per chain element runs in lockstep. After
    ``thermalize`` sweeps, each step's physical (beta = 1) replicas are
    cross-scored under the neighbouring disorder every sweep, and the
    Metropolis-function ratio of the two averages gives that step's
    free-energy difference.
    """
    etas = np.atleast_2d(np.asarray(eta_chain, dtype=np.int64))
    mc = mc or MCModel(model)
    steps = len(etas) - 1
    const = mc.constant_energy(etas[-1]) - mc.constant_energy(etas[0])
    if steps == 0:
        return FreeEnergyEstimate(0.0, 0.0, "bennett", 0, 0, seed, mc.log_norm)
    act = mc.active_eta(etas)
    diffs = []
    for k in range(1, len(etas)):
        d = np.flatnonzero(act[k] != act[k - 1])
        if len(d) + np.count_nonzero(etas[k][mc.constant] != etas[k - 1][mc.constant]) > max_flips:
            raise NonAdjacentChain(f"step {k} flips {len(d)} signs, more than {max_flips}")
        diffs.append(d)
    if all(len(d) == 0 for d in diffs):
        return FreeEnergyEstimate(const, 0.0, "bennett", 0, 0, seed, mc.log_norm)
    rng = make_rng(seed, 0)
    state = LadderState.create(mc, etas, schedule, rng)
    for _ in range(thermalize):
        metropolis_sweep(state, rng)
        if state.sweeps % exchange_every == 0:
            replica_exchange(state, rng)
    fwd = np.zeros((sweeps, steps))
    bwd = np.zeros((sweeps, steps))
    phys = state.physical_rows()
    for t in range(sweeps):
        metropolis_sweep(state, rng)
        if state.sweeps % exchange_every == 0:
            replica_exchange(state, rng)
        for k, d in enumerate(diffs, start=1):
            if len(d) == 0:
                fwd[t, k - 1] = bwd[t, k - 1] = 1.0
                continue
            kk = mc.K[d]
            delta = act[k][d] - act[k - 1][d]
            # E_k - E_{k-1} on ladder k-1, and E_{k-1} - E_k on ladder k
            up = -np.sum(kk * delta * state.prod[phys[k - 1], d])
            down = np.sum(kk * delta * state.prod[phys[k], d])
            fwd[t, k - 1] = min(1.0, math.exp(-up))
            bwd[t, k - 1] = min(1.0, math.exp(-down))
    series = np.concatenate([fwd, bwd], axis=1)

    def estimate(block: np.ndarray) -> float:
        a = block[:, :steps].mean(axis=0)
        b = block[:, steps:].mean(axis=0)
        return float(-np.sum(np.log(a) - np.log(b)))

    value, var = block_jackknife(series, estimate, blocks)
    return FreeEnergyEstimate(value + const, var, "bennett", sweeps, len(schedule), seed, mc.log_norm)


# -- population annealing ----------------------------------------------------------------

def population_annealing_f(
    model: SpinModel,
    eta: Sequence[int],
    schedule: TemperatureSchedule,
    population: int = 1000,
    sweeps_per_step: int = 5,
    seed: int = 0,
    blocks: int = 10,
    min_ess: float = 0.05,
    mc: MCModel | None = None,
) -> FreeEnergyEstimate:
    """Free energy at beta = 1 from annealing a population upward from ``betas[0]``.

    The start must be beta = 0, where the reference ``-m ln 2`` is exact. The
    population is split into ``blocks`` independent sub-populations that
    resample separately; the jackknife runs over those blocks.
    """
    if schedule.betas[0] != 0.0:
        raise ValueError("population annealing starts at beta = 0")
    mc = mc or MCModel(model)
    eta = np.asarray(eta, dtype=np.int64)
    const = mc.constant_energy(eta)
    blocks = max(2, min(blocks, population))
    per = population // blocks
    rows = per * blocks
    rng = make_rng(seed, 1)
    ea = np.broadcast_to(mc.active_eta(eta), (rows, len(mc.active))).copy()
    state = LadderState(mc, ea, np.zeros(rows), np.ones((rows, mc.m), dtype=np.int8),
                        np.ones((rows, len(mc.active)), dtype=np.int8), np.zeros(rows))
    state.sigma = np.where(rng.random((rows, mc.m)) < 0.5, -1, 1).astype(np.int8)
    state.refresh()
    log_means = np.zeros((len(schedule) - 1, blocks))
    for k in range(len(schedule) - 1):
        db = schedule.betas[k + 1] - schedule.betas[k]
        logw = (-db * state.energy).reshape(blocks, per)
        top = logw.max(axis=1, keepdims=True)
        w = np.exp(logw - top)
        log_means[k] = np.log(w.mean(axis=1)) + top[:, 0]
        ess = w.sum(axis=1) ** 2 / np.sum(w * w, axis=1)
        if np.min(ess) < min_ess * per:
            raise PopulationCollapse(f"effective sample size {np.min(ess):.1f} at beta={schedule.betas[k + 1]}")
        pick = np.concatenate([
            b * per + rng.choice(per, size=per, p=w[b] / w[b].sum()) for b in range(blocks)])
        state.sigma = state.sigma[pick]
        state.prod = state.prod[pick]
        state.energy = state.energy[pick]
        state.beta[:] = schedule.betas[k + 1]
        for _ in range(sweeps_per_step):
            metropolis_sweep(state, rng)
    base = -mc.m * math.log(2.0) + const

    def estimate(idx: np.ndarray) -> float:
        # pooled mean of the weights over the chosen blocks at every step
        lm = log_means[:, idx]
        top = lm.max(axis=1, keepdims=True)
        return float(-np.sum(np.log(np.exp(lm - top).mean(axis=1)) + top[:, 0]))

    full = estimate(np.arange(blocks))
    loo = np.array([estimate(np.delete(np.arange(blocks), b)) for b in range(blocks)])
    var = (blocks - 1) / blocks * float(np.sum((loo - loo.mean()) ** 2))
    return FreeEnergyEstimate(base + full, var, "population_annealing",
                              sweeps_per_step * (len(schedule) - 1), rows, seed, mc.log_norm)
