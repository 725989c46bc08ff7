"""Property-based invariants (hypothesis)."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from stabsim import pauli, verify
from stabsim.graph import ClusterGraph, local_complement
from stabsim.pauli import PauliString, commutes, format_pauli, multiply, parse
from stabsim.tableau import Tableau


@st.composite
def pauli_strings(draw, n=None):
    width = n if n is not None else draw(st.integers(1, 8))
    return PauliString(
        width,
        draw(st.integers(0, 2**width - 1)),
        draw(st.integers(0, 2**width - 1)),
        draw(st.integers(0, 3)),
    )


@st.composite
def pauli_pairs(draw):
    n = draw(st.integers(1, 8))
    return draw(pauli_strings(n)), draw(pauli_strings(n))


@st.composite
def pauli_triples(draw):
    n = draw(st.integers(1, 6))
    return tuple(draw(pauli_strings(n)) for _ in range(3))


@given(pauli_triples())
def test_multiply_associative(triple):
    a, b, c = triple
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))


@given(pauli_pairs())
def test_commutes_iff_products_match(pair):
    a, b = pair
    ab, ba = multiply(a, b), multiply(b, a)
    assert commutes(a, b) == (ab == ba)


@given(pauli_pairs())
def test_product_phase_parity(pair):
    # commuting factors give an even power of i, anticommuting an odd one
    a, b = pair
    prod = multiply(a.with_phase(0), b.with_phase(0))
    assert (prod.phase % 2 == 0) == commutes(a, b)


@given(pauli_strings())
def test_parse_format_roundtrip(p):
    assert parse(format_pauli(p)) == p


@given(pauli_strings())
def test_self_product_is_scalar(p):
    prod = multiply(p, p)
    assert prod.x == 0 and prod.z == 0


@given(st.integers(0, 2**32), st.integers(1, 5), st.integers(0, 20))
@settings(max_examples=40, deadline=None)
def test_random_circuits_keep_tableau_invariants(seed, n, gates):
    import random

    rng = random.Random(seed)
    t = Tableau.new_computational(n, rng_seed=seed)
    for gate, qs in verify.random_circuit(rng, n, gates):
        t.apply_gate(gate, qs)
    t.validate()
    assert Tableau.deserialize(t.serialize()) == t


@given(st.integers(0, 2**32), st.integers(2, 7))
@settings(max_examples=40, deadline=None)
def test_local_complement_involution(seed, n):
    import random

    rng = random.Random(seed)
    g = ClusterGraph(nodes=range(1, n + 1), edges=verify.random_connected_graph(rng, n))
    v = rng.randint(1, n)
    assert local_complement(local_complement(g, v), v) == g


@given(st.integers(0, 2**32), st.integers(1, 5))
@settings(max_examples=25, deadline=None)
def test_dense_oracle_satisfies_all_stabilizers(seed, n):
    import random

    t = verify.random_tableau(random.Random(seed), n)
    state = verify.dense_from_tableau(t)
    for s in t.stabilizers():
        assert abs(state.expectation(s) - 1.0) < 1e-9
