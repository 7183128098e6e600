import pytest
from hypothesis import given
from hypothesis import strategies as st

from spacetime_spins.pauli import (
    GridMismatch,
    SpacetimeCoord,
    SpacetimePauli,
    multiply,
    scalar_commutator,
    support,
)

N, T = 4, 3
SIZE = N * T
paulis = st.builds(lambda x, z: SpacetimePauli(N, T, x, z),
                   st.integers(0, (1 << SIZE) - 1), st.integers(0, (1 << SIZE) - 1))


def one(letter, q, layer, n=N, t=T):
    return SpacetimePauli.from_sites(n, t, [(letter, q, layer)])


def brute_commutator(a, b):
    # count anticommuting sites letter by letter
    anti = 0
    for i in range(SIZE):
        ax, az = (a.x >> i) & 1, (a.z >> i) & 1
        bx, bz = (b.x >> i) & 1, (b.z >> i) & 1
        anti += (ax and bz) ^ (az and bx)
    return -1 if anti % 2 else 1


def test_single_site_cases():
    assert scalar_commutator(one("X", 0, 0), one("Z", 0, 0)) == -1
    assert scalar_commutator(one("X", 0, 0), one("Z", 1, 0)) == 1
    xz = SpacetimePauli.parse(N, T, "X 0@0.5 Z 1@0.5")
    zx = SpacetimePauli.parse(N, T, "Z 0@0.5 X 1@0.5")
    assert scalar_commutator(xz, zx) == 1


def test_multiplication_table():
    ident = SpacetimePauli.identity(N, T)
    assert multiply(one("X", 2, 1), one("X", 2, 1)) == ident
    assert multiply(one("X", 2, 1), one("Z", 2, 1)) == one("Y", 2, 1)
    a = SpacetimePauli.parse(N, T, "X 0@0.5 Y 3@2.5")
    assert a * ident == a


def test_support_and_render():
    assert support(SpacetimePauli.identity(N, T)) == set()
    y = SpacetimePauli.parse(N, 4, "Y 3@2.5")
    assert support(y) == {SpacetimeCoord(3, 2)}
    assert SpacetimeCoord(3, 2).tau == 2.5
    xx = SpacetimePauli.parse(N, T, "X 0@0.5 X 1@0.5")
    assert support(xx) == {SpacetimeCoord(0, 0), SpacetimeCoord(1, 0)}
    assert SpacetimePauli.parse(N, T, xx.render()) == xx


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        scalar_commutator(one("X", 0, 0), one("X", 0, 0, n=5))
    with pytest.raises(GridMismatch):
        multiply(one("X", 0, 0), one("X", 0, 0, t=4))


def test_bad_tokens():
    with pytest.raises(ValueError):
        SpacetimePauli.parse(N, T, "X 9@0.5")
    with pytest.raises(ValueError):
        SpacetimePauli.parse(N, T, "X 0@1.0")


@given(paulis, paulis)
def test_commutator_symmetric_and_matches_brute_force(a, b):
    assert scalar_commutator(a, b) == scalar_commutator(b, a) == brute_commutator(a, b)


@given(paulis, paulis, paulis)
def test_commutator_bilinear(a, b, c):
    assert scalar_commutator(a, b * c) == scalar_commutator(a, b) * scalar_commutator(a, c)


@given(paulis, paulis)
def test_product_commutative_and_self_inverse(a, b):
    assert a * b == b * a
    assert (a * b) * b == a
    assert (a * a).is_identity()


@given(paulis)
def test_render_round_trip(a):
    assert SpacetimePauli.parse(N, T, a.render()) == a
    assert a.weight == len(support(a))
