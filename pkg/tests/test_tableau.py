"""Tableau gates, measurements, joint (fusion) measurements, canonical form."""

import itertools
import random

import pytest

from stabsim import pauli, verify
from stabsim.pauli import PauliString, parse
from stabsim.tableau import (
    ConsistencyError,
    MeasurementRecord,
    PreconditionError,
    Tableau,
    groups_equal,
    restricted_stabilizers,
)


def stab_strings(t):
    return [str(p) for p in t.stabilizers()]


def line_cluster(n, seed=0):
    t = Tableau.new_plus(n, rng_seed=seed)
    for q in range(1, n):
        t.apply_gate("CZ", (q, q + 1))
    return t


def star_cluster(n, center=1, seed=0):
    t = Tableau.new_plus(n, rng_seed=seed)
    for q in range(1, n + 1):
        if q != center:
            t.apply_gate("CZ", (center, q))
    return t


def group_of(t_or_gens, n=None):
    if isinstance(t_or_gens, Tableau):
        return t_or_gens.stabilizers(), t_or_gens.n
    return [parse(s) for s in t_or_gens], n


def assert_same_group(t, expected_strings, with_signs=False):
    gens = [parse(s) for s in expected_strings]
    assert groups_equal(t.stabilizers(), gens, t.n, with_signs=with_signs)


def test_new_states():
    assert stab_strings(Tableau.new_plus(2)) == ["XI", "IX"]
    assert stab_strings(Tableau.new_computational(1)) == ["Z"]
    t = Tableau.new_computational(3)
    assert [str(p) for p in t.destabilizers()] == ["XII", "IXI", "IIX"]
    with pytest.raises(pauli.DimensionError):
        Tableau.new_computational(0)


def test_hadamard_on_bell():
    t = Tableau.new_computational(2)
    t.apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    assert stab_strings(t) == ["XX", "ZZ"]
    t.apply_gate("H", 2)
    assert stab_strings(t) == ["XZ", "ZX"]
    t.validate()


def test_z_twice_is_identity():
    t = verify.random_tableau(random.Random(1), 4)
    before = t.copy()
    t.apply_gate("Z", 2).apply_gate("Z", 2)
    assert t == before


def test_cz_on_plus_pair():
    t = Tableau.new_plus(2).apply_gate("CZ", (1, 2))
    assert stab_strings(t) == ["XZ", "ZX"]


def test_all_gates_preserve_invariants():
    rng = random.Random(2)
    for _ in range(50):
        t = verify.random_tableau(rng, rng.randint(1, 5))
        t.validate()


def test_rowsum_bell_rows():
    t = Tableau.new_computational(2).apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    # stabilizer rows are rows 3 and 4; X1X2 * Z1Z2 = -Y1Y2
    t.rowsum(4, 3)
    assert str(t.row(4)) == "-YY"
    # the stabilizer rows still generate the Bell group
    assert_same_group(t, ["XX", "ZZ"], with_signs=True)


def test_rowsum_identity_row_is_noop():
    t = line_cluster(3)
    before = t.row(4)
    t.rowsum(4, 7)  # scratch row is the identity
    assert t.row(4) == before


def test_rowsum_matches_pauli_multiply():
    rng = random.Random(3)
    for _ in range(300):
        t = verify.random_tableau(rng, rng.randint(2, 5))
        n = t.n
        h, k = rng.sample(range(n + 1, 2 * n + 1), 2)
        want = pauli.multiply(t.row(k), t.row(h))
        t.rowsum(h, k)
        assert t.row(h) == want


def test_measure_z_on_line_cluster():
    t = line_cluster(5)
    rec = t.measure(3, "Z")
    assert not rec.deterministic
    assert_same_group(t, ["XZIII", "ZXIII", "IIZII", "IIIXZ", "IIIZX"])
    t.validate()


def test_measure_x_on_star():
    t = star_cluster(4, center=1)
    rec = t.measure(1, "X")
    assert not rec.deterministic
    assert_same_group(t, ["XIII", "IZZZ", "IXXI", "IXIX"])


def test_measure_x_plus_state_deterministic():
    t = Tableau.new_plus(1)
    before = t.copy()
    rec = t.measure(1, "X")
    assert rec == MeasurementRecord(parse("X"), 1, True)
    assert t == before


def test_measure_y_eigenstate():
    t = Tableau.new_computational(1).apply_gate("H", 1).apply_gate("P", 1)
    rec = t.measure(1, "Y")
    assert rec.deterministic and rec.outcome == 1


def test_forced_outcomes():
    t = line_cluster(3, seed=9)
    rec = t.measure(2, "Z", forced_outcome=-1)
    assert rec.outcome == -1 and not rec.deterministic
    t2 = Tableau.new_plus(1)
    with pytest.raises(PreconditionError):
        t2.measure(1, "X", forced_outcome=-1)


def test_measurement_outcomes_are_fair():
    counts = 0
    reps = 10_000
    t0 = Tableau.new_plus(1)
    for k in range(reps):
        t = Tableau.new_plus(1, rng_seed=k)
        if t.measure(1, "Z").outcome == 1:
            counts += 1
    assert abs(counts / reps - 0.5) < 0.02
    assert t0.measure(1, "Z").deterministic is False


def test_joint_measure_fusion_example_two_stars():
    # fusion between leaf qubits 2 and 4 of two 3-qubit stars
    t = Tableau.new_plus(6, rng_seed=5)
    for a, b in [(1, 2), (1, 3)]:
        t.apply_gate("CZ", (a, b))
    for a, b in [(4, 5), (4, 6)]:
        t.apply_gate("CZ", (a, b))
    recs = t.joint_measure([parse("IXIXII"), parse("IZIZII")])
    assert len(recs) == 2 and not any(r.deterministic for r in recs)
    assert_same_group(
        t,
        ["IXIXII", "IZIZII", "ZIXIII", "ZIIIZZ", "XIZIXI", "XIZIIX"],
    )
    t.validate()


def test_joint_measure_three_fusion_bell_pairs():
    t = Tableau.new_computational(6, rng_seed=11)
    for c, tgt in [(1, 2), (3, 4), (5, 6)]:
        t.apply_gate("H", c).apply_gate("CNOT", (c, tgt))
    ops = [parse("XIXIXI"), parse("ZIZIII"), parse("ZIIIZI")]
    recs = t.joint_measure(ops)
    assert len(recs) == 3
    assert_same_group(
        t,
        ["XIXIXI", "ZIZIII", "ZIIIZI", "IXIXIX", "IZIZII", "IZIIIZ"],
    )


def test_joint_measure_bell_state_measurement():
    # BSM on qubits 1,3 of two Bell pairs leaves a Bell pair on 2,4
    t = Tableau.new_computational(4, rng_seed=3)
    for c, tgt in [(1, 2), (3, 4)]:
        t.apply_gate("H", c).apply_gate("CNOT", (c, tgt))
    recs = t.joint_measure([parse("XIXI"), parse("ZIZI")])
    m1, m3 = (r.outcome for r in recs)
    rest = restricted_stabilizers(t, [2, 4])
    want = [
        parse("XX").with_phase(0 if m1 == 1 else 2),
        parse("ZZ").with_phase(0 if m3 == 1 else 2),
    ]
    assert groups_equal(rest, want, 2, with_signs=True)


def test_joint_measure_matches_measure_bitwise():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 5)
        seed = rng.getrandbits(40)
        circuit = verify.random_circuit(rng, n, 15)
        q, basis = rng.randrange(1, n + 1), rng.choice("XYZ")
        t1 = Tableau.new_computational(n, rng_seed=seed)
        t2 = Tableau.new_computational(n, rng_seed=seed)
        for gate, qs in circuit:
            t1.apply_gate(gate, qs)
            t2.apply_gate(gate, qs)
        r1 = t1.measure(q, basis)
        r2 = t2.joint_measure([PauliString.single(n, q, basis)])[0]
        assert r1 == r2
        assert t1 == t2


def test_joint_measure_preconditions():
    t = Tableau.new_computational(2)
    with pytest.raises(PreconditionError):
        t.joint_measure([parse("XI"), parse("ZI")])  # anticommuting
    with pytest.raises(PreconditionError):
        t.joint_measure([parse("XX"), parse("XX")])  # dependent
    with pytest.raises(PreconditionError):
        t.joint_measure([parse("iXX")])  # non-Hermitian


def test_joint_measure_deterministic_signed_operator():
    t = Tableau.new_computational(2)
    rec = t.joint_measure([parse("-ZI")])[0]
    assert rec.deterministic and rec.outcome == -1


def test_canonical_generators_same_state_different_circuits():
    a = Tableau.new_computational(2).apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    b = Tableau.new_computational(2).apply_gate("H", 2).apply_gate("CNOT", (2, 1))
    assert a.canonical_generators() == b.canonical_generators()


def test_canonical_generators_alternate_generating_set():
    bell = Tableau.new_computational(2).apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    other = Tableau.deserialize("n=2\n+YI\n+IX\n+XX\n-YY")
    assert bell.canonical_generators(with_signs=True) == other.canonical_generators(
        with_signs=True
    )
    # oracle: enumerate all group elements of both generator pairs
    def elements(gens):
        out = set()
        for k in range(4):
            p = PauliString.identity(2)
            for i, g in enumerate(gens):
                if (k >> i) & 1:
                    p = pauli.multiply(p, g)
            out.add((p.x, p.z, p.phase))
        return out

    assert elements(bell.stabilizers()) == elements(other.stabilizers())


def test_canonical_generators_subgroup_mismatch():
    bell = Tableau.new_computational(2).apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    comp = Tableau.new_computational(2)  # shares the element Z1Z2 only
    assert bell.canonical_generators() != comp.canonical_generators()
    assert not groups_equal(
        bell.stabilizers(), comp.stabilizers(), 2, with_signs=False
    )


def test_serialize_bell():
    t = Tableau.new_computational(2).apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    assert t.serialize() == "n=2\n+ZI\n+IX\n+XX\n+ZZ\n"


def test_deserialize_mixed_sign_state():
    text = "n=2\n+XI\n+IX\n-ZX\n+XZ\n"
    t = Tableau.deserialize(text)
    t.validate()
    assert t.serialize() == text
    # the dense oracle agrees this is (|+0> - |-1>)/sqrt(2)
    state = verify.dense_from_tableau(t)
    for s in t.stabilizers():
        assert abs(state.expectation(s) - 1.0) < 1e-9


def test_serialize_roundtrip_random():
    rng = random.Random(17)
    for _ in range(100):
        t = verify.random_tableau(rng, rng.randint(1, 6))
        assert Tableau.deserialize(t.serialize()) == t
        assert Tableau.from_json(t.to_json()) == t


def test_deserialize_errors_carry_line_numbers():
    with pytest.raises(ValueError, match="line 1"):
        Tableau.deserialize("m=2\n+XI\n+IX\n+XX\n+ZZ")
    with pytest.raises(ValueError, match="line 3"):
        Tableau.deserialize("n=2\n+XI\n+IQ\n+XX\n+ZZ")
    with pytest.raises(ValueError, match="line 2"):
        Tableau.deserialize("n=2\niXI\n+IX\n+XX\n+ZZ")


def test_normalize_signs():
    t = line_cluster(5, seed=21)
    t.measure(3, "Z", forced_outcome=-1)
    group_before = t.canonical_generators(with_signs=False)
    fixups = t.normalize_signs()
    assert all(p.phase == 0 for p in t.stabilizers())
    assert fixups, "forced -1 outcome must need a fixup"
    assert t.canonical_generators(with_signs=False) == group_before
    t.validate()


def test_scratch_row_never_serialized():
    t = line_cluster(3)
    t.measure(1, "Z")
    assert len(t.serialize().strip().splitlines()) == 2 * t.n + 1


def test_measurements_preserve_invariants():
    rng = random.Random(23)
    for _ in range(40):
        n = rng.randint(1, 5)
        t = verify.random_tableau(rng, n)
        for _ in range(4):
            t.measure(rng.randrange(1, n + 1), rng.choice("XYZ"))
            t.validate()
