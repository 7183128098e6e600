import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spacetime_spins.circuit import builtin
from spacetime_spins.disorder import make_rng
from spacetime_spins.experiment import setup_point
from spacetime_spins.montecarlo import (
    LadderState,
    MCModel,
    NonAdjacentChain,
    PopulationCollapse,
    TemperatureSchedule,
    bennett_delta_f,
    block_jackknife,
    decompose_logical,
    metropolis_sweep,
    population_annealing_f,
    replica_exchange,
)
from spacetime_spins.oracle import exact_partition
from spacetime_spins.pauli import SpacetimePauli
from spacetime_spins.spinmodel import IndependentXZ, energy
from conftest import bond_model, mc_fixtures


def test_schedules():
    g = TemperatureSchedule.geometric(5, 0.1)
    assert g.betas[0] == pytest.approx(0.1) and g.betas[-1] == 1.0
    ratios = np.diff(np.log(g.betas))
    assert np.allclose(ratios, ratios[0])
    lin = TemperatureSchedule.linear(11)
    assert lin.betas[0] == 0.0 and len(lin) == 11
    for bad in ((0.5,), (1.0, 0.5, 1.0), (-0.1, 1.0)):
        with pytest.raises(ValueError):
            TemperatureSchedule(bad)


def test_energies_stay_consistent():
    model = mc_fixtures()[2][1]
    mc = MCModel(model)
    rng = make_rng(0)
    etas = np.where(rng.random((3, len(model.interactions))) < 0.2, -1, 1)
    state = LadderState.create(mc, etas, TemperatureSchedule.geometric(4), rng, debug=True)
    for _ in range(50):
        metropolis_sweep(state, rng)
        replica_exchange(state, rng)
    state.check()
    row = 5
    ladder = row // state.size
    full = energy(model, etas[ladder], state.sigma[row]) - mc.constant_energy(etas[ladder])
    assert state.energy[row] == pytest.approx(full)


def test_metropolis_samples_boltzmann():
    model = bond_model()
    mc = MCModel(model)
    eta = np.array([1, -1, 1])
    rng = make_rng(1)
    state = LadderState.create(mc, np.tile(eta, (64, 1)), TemperatureSchedule((1.0,)), rng)
    counts = {}
    for t in range(1500):
        metropolis_sweep(state, rng)
        if t >= 100:
            for s in map(tuple, state.sigma):
                counts[s] = counts.get(s, 0) + 1
    total = sum(counts.values())
    states = list(itertools.product((1, -1), repeat=2))
    w = np.array([math.exp(-energy(model, eta, s)) for s in states])
    w /= w.sum()
    for s, p in zip(states, w):
        # correlated samples; the tolerance is loose on purpose
        assert counts.get(s, 0) / total == pytest.approx(p, abs=0.01)


def test_block_jackknife_iid_mean():
    x = np.random.default_rng(3).normal(size=20000)
    val, var = block_jackknife(x, np.mean, 20)
    assert val == pytest.approx(x.mean())
    assert math.sqrt(var) == pytest.approx(1 / math.sqrt(len(x)), rel=0.4)


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_decompose_logical(n, seed):
    r = np.random.default_rng(seed)
    p = SpacetimePauli(n, 3, int(r.integers(1 << (3 * n))), int(r.integers(1 << (3 * n))))
    parts = decompose_logical(p)
    prod = SpacetimePauli.identity(n, 3)
    for q in parts:
        assert q.weight == 1
        prod = prod * q
    assert prod == p and len(parts) == p.weight


def exact_delta(model, a, b):
    return -(exact_partition(model, b) - exact_partition(model, a))


def test_bennett_single_bond():
    name, model, eta, chain = mc_fixtures()[-1]
    est = bennett_delta_f(model, chain, TemperatureSchedule((1.0,)), sweeps=20000, thermalize=200, seed=2)
    want = exact_delta(model, chain[0], chain[-1])
    assert abs(est.value - want) < max(4 * est.sigma, 0.02)


def test_bennett_trivial_and_rejects_long_steps():
    model = bond_model()
    eta = np.array([1, 1, 1])
    assert bennett_delta_f(model, [eta], TemperatureSchedule((1.0,))).value == 0.0
    with pytest.raises(NonAdjacentChain):
        bennett_delta_f(model, [eta, -eta], TemperatureSchedule((1.0,)), max_flips=2)


def test_population_annealing_small():
    name, model, eta, chain = mc_fixtures()[0]
    est = population_annealing_f(model, eta, TemperatureSchedule.linear(30), population=2000, seed=5)
    # Boltzmann-form free energy converts to the log coset probability
    assert -est.value + est.log_norm == pytest.approx(exact_partition(model, eta), abs=max(4 * est.sigma, 0.03))


def test_population_collapse():
    c = builtin("rep_standard", d=3)
    model = setup_point(c, IndependentXZ(0.001, 0.0)).model
    with pytest.raises(PopulationCollapse):
        population_annealing_f(model, np.ones(len(model.interactions)), TemperatureSchedule((0.0, 1.0)),
                               population=20, blocks=2, min_ess=0.5)


def test_pa_needs_zero_start():
    with pytest.raises(ValueError):
        population_annealing_f(bond_model(), [1, 1, 1], TemperatureSchedule.geometric(3))
