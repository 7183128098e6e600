import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spacetime_spins.circuit import builtin, parse
from spacetime_spins.gf2 import Eliminator, nullspace, rank
from spacetime_spins.pauli import SpacetimePauli
from spacetime_spins.spacetime import (
    Blocked,
    gauge_basis,
    gauge_candidates,
    in_gauge_group,
    localize_relations,
    observable_problems,
    propagate,
    reduce_to_basis,
    stabilizer_generators,
)
from conftest import random_circuit


def vec(p):
    return p.x | (p.z << p.size)


def test_gf2_helpers():
    assert rank([0b011, 0b110, 0b101]) == 2
    cols = [0b01, 0b10, 0b11]
    for mask in nullspace(cols):
        acc = 0
        for k in range(3):
            if mask >> k & 1:
                acc ^= cols[k]
        assert acc == 0
    e = Eliminator()
    assert e.add(0b11) is None and e.add(0b01) is None
    # the relation names the new vector too
    assert sorted(e.add(0b10)) == [0, 1, 2]
    assert e.contains(0b10) and not e.contains(0b100)


def test_single_measurement_generators():
    c = parse("QUBITS 1\nR Z 0\nTICK\nM X 0\nTICK\nM Z 0")
    texts = sorted(g.render() for g, _ in gauge_candidates(c))
    # reset post-side, then MX pre/post, then MZ pre (no layer after T)
    assert texts == sorted(["Z 0@0.5", "X 0@0.5", "X 0@1.5", "Z 0@1.5"])


def test_measurement_only_memory_counts():
    c = builtin("rep_memory", d=3)
    b = gauge_basis(c)
    assert not b.overcomplete and len(b.generators) == b.rank
    # 8 detectors (2 + 4 repeated ZZ checks + 2 final) plus the XL readout
    assert len(stabilizer_generators(b)) == 9


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_stabilizers_are_central(seed, n, t):
    c = random_circuit(random.Random(seed), n, t)
    b = gauge_basis(c)
    gens = b.generators
    assert rank(vec(g) for g in gens) == b.rank == len(gens)
    for s in stabilizer_generators(b):
        assert all(s.commutes(g) for g in gens)
        assert in_gauge_group(b, s)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 4))
def test_relations_hold(seed, n, t):
    c = random_circuit(random.Random(seed), n, t)
    cands = [g for g, _ in gauge_candidates(c)]
    b = reduce_to_basis(cands, keep_redundant=True)
    assert len(b.redundancies) == len(cands) - b.rank
    for rel in b.redundancies:
        prod = SpacetimePauli.identity(c.N, c.T)
        for k in rel:
            prod = prod * cands[k]
        assert prod.is_identity()
    span = Eliminator()
    for rel in b.redundancies:
        assert span.add(sum(1 << k for k in rel)) is None


def test_localize_keeps_span_and_shrinks():
    raw = [(0, 1, 2, 3), (2, 3, 4), (0, 1, 4, 5)]
    out = localize_relations(raw)
    assert sum(map(len, out)) <= sum(map(len, raw))
    a, b = Eliminator(), Eliminator()
    for r in raw:
        a.add(sum(1 << k for k in r))
    for r in out:
        assert a.contains(sum(1 << k for k in r))
        b.add(sum(1 << k for k in r))
    assert a.rank == b.rank


def test_toric_is_overcomplete_by_default():
    c = builtin("toric_standard", d=2)
    assert gauge_basis(c).overcomplete
    assert not gauge_basis(c, keep_redundant=False).overcomplete


@pytest.mark.parametrize("name", ["rep_memory", "rep_standard", "rep_wiggling"])
def test_propagated_observables_are_equivalent(name):
    c = builtin(name, d=3)
    b = gauge_basis(c)
    obs = c.observables[0].representative
    layer = obs.layers()[0]
    for target in range(c.T):
        try:
            moved = propagate(obs, c, target)
        except Blocked:
            continue
        assert in_gauge_group(b, obs * moved)
        assert observable_problems(c.__class__(c.N, c.T, c.ops, (c.observables[0].__class__("XL", moved),))) == []
    assert propagate(obs, c, layer) == obs


def test_propagate_blocked_by_measurement():
    c = parse("QUBITS 1\nR Z 0\nTICK\nM Z 0\nTICK\nM Z 0")
    x = SpacetimePauli.parse(1, 2, "X 0@0.5")
    with pytest.raises(Blocked):
        propagate(x, c, 1)


def test_observable_problems_detects_duplicates():
    c = builtin("rep_memory", d=3)
    rep = c.observables[0]
    twice = c.__class__(c.N, c.T, c.ops, (rep, rep.__class__("XL2", rep.representative)))
    assert any("XL2" in m for m in observable_problems(twice))
    none = c.__class__(c.N, c.T, c.ops, ())
    assert observable_problems(none) == []
