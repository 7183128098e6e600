import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spacetime_spins.circuit import builtin
from spacetime_spins.disorder import (
    SignMap,
    load_realizations,
    make_rng,
    sample_error,
    sample_error_bits,
    sample_signs_direct,
    save_realizations,
    signs_from_error,
)
from spacetime_spins.oracle import exact_partition
from spacetime_spins.pauli import SpacetimePauli, scalar_commutator
from spacetime_spins.spacetime import gauge_basis
from spacetime_spins.spinmodel import GeneralPauli, IndependentXZ, build_hamiltonian, simplify
from conftest import random_circuit, random_error

PROBE = {"X": "Z", "Z": "X", "Y": "Y"}


def test_streams_are_keyed():
    a = make_rng(5, 3).random(4)
    assert np.array_equal(a, make_rng(5, 3).random(4))
    assert not np.array_equal(a, make_rng(5, 4).random(4))
    assert not np.array_equal(a, make_rng(6, 3).random(4))
    c = builtin("rep_memory", d=3)
    ch = IndependentXZ(0.2, 0.1)
    assert sample_error(c, ch, 1, 7) == sample_error(c, ch, 1, 7)
    assert sample_error(c, ch, 1, 7) == sample_error(c.N, ch, 1, 7, num_layers=c.T)


def test_bit_frequencies():
    n = 200_000
    x, z = sample_error_bits(n, IndependentXZ(0.1, 0.3), make_rng(0))
    for bits, p in ((x, 0.1), (z, 0.3)):
        assert abs(bits.mean() - p) < 5 * np.sqrt(p * (1 - p) / n)
    ch = GeneralPauli(0.7, 0.1, 0.05, 0.15)
    x, z = sample_error_bits(n, ch, make_rng(1))
    freq = {"X": np.mean(x & ~z), "Y": np.mean(x & z), "Z": np.mean(~x & z)}
    for k, v in freq.items():
        p = ch.probabilities()[k]
        assert abs(v - p) < 5 * np.sqrt(p * (1 - p) / n)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_signs_are_probe_commutators(seed, general):
    r = random.Random(seed)
    c = random_circuit(r, r.randint(1, 3), r.randint(1, 3))
    ch = GeneralPauli(0.7, 0.1, 0.1, 0.1) if general else IndependentXZ(0.1, 0.1)
    model = build_hamiltonian(gauge_basis(c), ch)
    err = random_error(r, c.N, c.T)
    eta = signs_from_error(model, err).eta
    for e, inter in zip(eta, model.interactions):
        (flavor, q, layer), = inter.members
        probe = SpacetimePauli.from_sites(c.N, c.T, [(PROBE[flavor], q, layer)])
        assert e == scalar_commutator(err, probe)


def test_batch_parities_match_single():
    c = builtin("rep_standard", d=3)
    model = simplify(build_hamiltonian(gauge_basis(c), GeneralPauli(0.7, 0.1, 0.1, 0.1)))
    sm = SignMap(model)
    rng = np.random.default_rng(2)
    x = rng.random((6, sm.size)) < 0.3
    z = rng.random((6, sm.size)) < 0.3
    batch = sm.parities(x, z)
    for i in range(6):
        assert np.array_equal(batch[i], sm.parities(x[i], z[i]))


def test_gauge_equivalent_errors_share_partition():
    c = builtin("rep_memory", d=3, T=3)
    basis = gauge_basis(c)
    model = build_hamiltonian(basis, IndependentXZ(0.1, 0.05))
    err = sample_error(c, IndependentXZ(0.2, 0.2), seed=3)
    moved = err * basis.generators[2] * basis.generators[5]
    a = exact_partition(model, signs_from_error(model, err).eta)
    b = exact_partition(model, signs_from_error(model, moved).eta)
    assert a == pytest.approx(b, rel=1e-12)


def test_direct_signs_follow_component_probabilities():
    c = builtin("rep_standard", d=3)
    ch = IndependentXZ(0.08, 0.0)
    model = simplify(build_hamiltonian(gauge_basis(c), ch))
    model = model.restrict(model.css_split[0])
    n = 4000
    direct = np.array([sample_signs_direct(model, 9, r).eta for r in range(n)])
    via_errors = np.array([signs_from_error(model, sample_error(c, ch, 9, r)).eta for r in range(n)])
    p = np.array([i.p for i in model.interactions])
    tol = 5 * np.sqrt(p * (1 - p) / n) + 1e-9
    assert np.all(np.abs((direct == -1).mean(axis=0) - p) < tol)
    assert np.all(np.abs((via_errors == -1).mean(axis=0) - p) < tol)
    with pytest.raises(TypeError):
        sample_signs_direct(build_hamiltonian(gauge_basis(c), GeneralPauli(0.7, 0.1, 0.1, 0.1)), 0)


def test_save_load_round_trip(tmp_path):
    c = builtin("rep_memory", d=3)
    model = build_hamiltonian(gauge_basis(c), IndependentXZ(0.1, 0.1))
    reals = [signs_from_error(model, sample_error(c, IndependentXZ(0.1, 0.1), 4, r)) for r in range(3)]
    reals.append(sample_signs_direct(model, 4, 9))
    path = tmp_path / "eta.json"
    save_realizations(path, reals)
    back = load_realizations(path, grid=(c.N, c.T))
    for a, b in zip(reals, back):
        assert np.array_equal(a.eta, b.eta)
    assert back[0].source == reals[0].source
    assert back[3].realization == 9


def test_grid_mismatch():
    model = build_hamiltonian(gauge_basis(builtin("rep_memory", d=3)), IndependentXZ(0.1, 0.1))
    with pytest.raises(ValueError):
        signs_from_error(model, SpacetimePauli.identity(2, 2))
