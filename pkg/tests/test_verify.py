"""Dense oracle behavior and the check-suite harness."""

import random

import numpy as np
import pytest

from stabsim import verify
from stabsim.pauli import parse
from stabsim.tableau import Tableau
from stabsim.verify import DenseState, check_suite, dense_from_tableau


def test_dense_from_bell_tableau():
    t = Tableau.new_computational(2).apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    state = dense_from_tableau(t)
    want = np.zeros(4, dtype=complex)
    want[0b00] = want[0b11] = 1 / np.sqrt(2)
    phase = state.vector[0] / want[0]
    assert np.allclose(state.vector, phase * want)


def test_dense_from_single_z():
    t = Tableau.new_computational(1)
    assert np.allclose(dense_from_tableau(t).vector, [1, 0])


def test_dense_plus_seed_fallback():
    # |1> has stabilizer -Z; projector kills |0...0>, needs the |+> seed
    t = Tableau.new_computational(1).apply_gate("X", 1)
    assert np.allclose(np.abs(dense_from_tableau(t).vector), [0, 1])


def test_dense_random_tableaux_self_check():
    rng = random.Random(5)
    for _ in range(20):
        t = verify.random_tableau(rng, 4)
        state = dense_from_tableau(t)
        for s in t.stabilizers():
            assert abs(state.expectation(s) - 1.0) < 1e-9


def test_dense_pauli_application_matches_matrices():
    rng = random.Random(9)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    Z = np.diag([1, -1]).astype(complex)
    I2 = np.eye(2, dtype=complex)
    mats = {"I": I2, "X": X, "Y": Y, "Z": Z}
    for _ in range(40):
        n = rng.randint(1, 4)
        p = verify.random_tableau(rng, n).row(rng.randrange(1, 2 * n + 1))
        vec = np.random.default_rng(1).normal(size=2**n) + 1j * np.random.default_rng(
            2
        ).normal(size=2**n)
        state = DenseState(n, vec.copy())
        m = np.array([[1j**p.phase]], dtype=complex)
        for q in range(1, n + 1):
            m = np.kron(m, mats[p.literal(q)])
        assert np.allclose(state.apply_pauli(p).vector, m @ vec)


def test_gates_suite_clean():
    report = check_suite("gates", trials=60, n_max=5, seed=1)
    assert report.ok, report.summary()


def test_measurements_suite_clean():
    report = check_suite("measurements", trials=60, n_max=5, seed=2)
    assert report.ok, report.summary()


def test_suite_determinism():
    a = check_suite("gates", trials=10, n_max=4, seed=3)
    b = check_suite("gates", trials=10, n_max=4, seed=3)
    assert a.to_json() == b.to_json()


def test_harness_detects_mutation(monkeypatch):
    # break a gate rule and require the suite to notice with an instance
    from stabsim import kmap

    good = kmap.rule_for("H")
    bad_tables = dict(good.tables)
    bad_tables["r"] = tuple(0 for _ in good.tables["r"])  # drop H's Y sign flip
    bad = kmap.BooleanUpdateRule("H", 1, good.var_names, bad_tables, good.cubes)
    monkeypatch.setattr(kmap, "rule_for", lambda g: bad if kmap.normalize_gate_id(g) == "H" else kmap.builtin_rule(g))
    report = check_suite("gates", trials=40, n_max=3, seed=4)
    assert not report.ok
    assert report.failures[0].instance["n"] >= 1
    assert "stabilizer" in report.failures[0].message


def test_unknown_suite():
    with pytest.raises(KeyError):
        check_suite("nonsense")
