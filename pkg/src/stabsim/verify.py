"""Dense oracles, random instance generators, and cross-check suites.

The dense simulator (n <= 10) is the ground truth for the tableau: it
rebuilds states from stabilizer projectors, applies gates as explicit
matrices, and classifies measurement determinism from outcome
probabilities. Check suites package the module-level equivalence
properties into deterministic, seedable trials with greedy shrinking of
failing instances.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .pauli import PauliString
from .tableau import Tableau

MAX_DENSE_QUBITS = 10

_GATE_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "P": np.array([[1, 0], [0, 1j]], dtype=complex),
    "PDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}
_GATE_2Q = {
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}


class DenseState:
    """Explicit complex state vector on n <= 10 qubits.

    Index convention: basis state |b_1 b_2 ... b_n> sits at integer
    index with qubit 1 as the most significant bit, matching the
    left-to-right literal order of Pauli text.
    """

    def __init__(self, n: int, vector: np.ndarray | None = None):
        if n > MAX_DENSE_QUBITS:
            raise ValueError(f"dense oracle capped at {MAX_DENSE_QUBITS} qubits")
        self.n = n
        if vector is None:
            vector = np.zeros(2**n, dtype=complex)
            vector[0] = 1.0
        self.vector = np.asarray(vector, dtype=complex)

    def copy(self) -> "DenseState":
        return DenseState(self.n, self.vector.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def apply_pauli(self, p: PauliString) -> "DenseState":
        """Apply a Pauli string (phase included) to the vector."""
        n = self.n
        idx = np.arange(2**n)
        # qubit q occupies bit (n - q) of the index
        xmask = 0
        for q in range(1, n + 1):
            if (p.x >> (q - 1)) & 1:
                xmask |= 1 << (n - q)
        phases = np.ones(2**n, dtype=complex) * (1j**p.phase)
        for q in range(1, n + 1):
            bit = (idx >> (n - q)) & 1
            lit = p.literal(q)
            if lit == "Z":
                phases = phases * np.where(bit, -1.0, 1.0)
            elif lit == "Y":
                # Y = i X Z: phase from Z part, X part via index flip
                phases = phases * 1j * np.where(bit, -1.0, 1.0)
        out = np.zeros_like(self.vector)
        out[idx ^ xmask] = phases * self.vector
        return DenseState(n, out)

    def apply_gate(self, gate: str, qubits: tuple[int, ...]) -> "DenseState":
        from .kmap import normalize_gate_id

        g = normalize_gate_id(gate)
        if g in _GATE_1Q:
            (q,) = qubits
            return self._apply_matrix(_GATE_1Q[g], (q,))
        if g in _GATE_2Q:
            return self._apply_matrix(_GATE_2Q[g], tuple(qubits))
        raise KeyError(f"dense oracle has no gate {gate!r}")

    def _apply_matrix(self, u: np.ndarray, qubits: tuple[int, ...]) -> "DenseState":
        n = self.n
        k = len(qubits)
        tensor = self.vector.reshape((2,) * n)
        axes = [q - 1 for q in qubits]
        tensor = np.moveaxis(tensor, axes, range(k))
        tensor = (u @ tensor.reshape(2**k, -1)).reshape((2,) * n)
        tensor = np.moveaxis(tensor, range(k), axes)
        return DenseState(n, tensor.reshape(-1))

    def expectation(self, p: PauliString) -> complex:
        return complex(np.vdot(self.vector, self.apply_pauli(p).vector))

    def measurement_probabilities(self, p: PauliString) -> tuple[float, float]:
        """(P(+1), P(-1)) for measuring the Pauli observable p."""
        applied = self.apply_pauli(p).vector
        plus = (self.vector + applied) / 2.0
        minus = (self.vector - applied) / 2.0
        return float(np.vdot(plus, plus).real), float(np.vdot(minus, minus).real)

    def project(self, p: PauliString, outcome: int) -> "DenseState":
        """Project onto the outcome eigenspace of p, unnormalized."""
        applied = self.apply_pauli(p).vector
        return DenseState(self.n, (self.vector + outcome * applied) / 2.0)


def dense_from_tableau(t: Tableau) -> DenseState:
    """State vector from the stabilizer projector product.

    Applies (I+S_i)/2 for every stabilizer to |0...0>, falling back to
    |+...+>, then to a basis state sampled by Z-measuring a copy of the
    tableau (that amplitude is nonzero by construction, so the product
    never vanishes on it).
    """
    if t.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense oracle capped at {MAX_DENSE_QUBITS} qubits")
    seeds = [DenseState(t.n), DenseState(t.n, np.full(2**t.n, 2 ** (-t.n / 2), dtype=complex))]
    sample = t.copy()
    index = 0
    for q in range(1, t.n + 1):
        if sample.measure(q, "Z").outcome == -1:
            index |= 1 << (t.n - q)
    vec = np.zeros(2**t.n, dtype=complex)
    vec[index] = 1.0
    seeds.append(DenseState(t.n, vec))
    for state in seeds:
        for s in t.stabilizers():
            state = DenseState(t.n, (state.vector + state.apply_pauli(s).vector) / 2.0)
        nrm = state.norm()
        if nrm > 1e-8:
            return DenseState(t.n, state.vector / nrm)
    raise AssertionError("valid tableau projected all seed states to zero")


def dense_from_stabilizers(gens: list[PauliString], n: int) -> DenseState:
    """State vector stabilized by a full generator list (rank n).

    Tries computational basis seeds in index order until the projector
    product survives; small n only.
    """
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense oracle capped at {MAX_DENSE_QUBITS} qubits")
    for idx in range(2**n):
        vec = np.zeros(2**n, dtype=complex)
        vec[idx] = 1.0
        state = DenseState(n, vec)
        for s in gens:
            state = DenseState(n, (state.vector + state.apply_pauli(s).vector) / 2.0)
        nrm = state.norm()
        if nrm > 1e-8:
            return DenseState(n, state.vector / nrm)
    raise AssertionError("no basis seed survived the stabilizer projectors")


# ---------------------------------------------------------------------------
# Random instance generators


def random_circuit(
    rng: random.Random, n: int, n_gates: int
) -> list[tuple[str, tuple[int, ...]]]:
    ops: list[tuple[str, tuple[int, ...]]] = []
    one_q = ["H", "P", "PDG", "X", "Y", "Z"]
    for _ in range(n_gates):
        if n >= 2 and rng.random() < 0.4:
            a, b = rng.sample(range(1, n + 1), 2)
            ops.append((rng.choice(["CNOT", "CZ"]), (a, b)))
        else:
            ops.append((rng.choice(one_q), (rng.randrange(1, n + 1),)))
    return ops


def random_tableau(rng: random.Random, n: int, n_gates: int = 30) -> Tableau:
    t = Tableau.new_computational(n, rng_seed=rng.getrandbits(63))
    for gate, qs in random_circuit(rng, n, n_gates):
        t.apply_gate(gate, qs)
    return t


def random_connected_graph(rng: random.Random, n: int) -> list[tuple[int, int]]:
    """Random connected simple graph on nodes 1..n (spanning tree + extras)."""
    nodes = list(range(1, n + 1))
    rng.shuffle(nodes)
    edges = set()
    for i in range(1, n):
        j = rng.randrange(i)
        edges.add(frozenset((nodes[i], nodes[j])))
    extra = rng.randrange(0, n)
    for _ in range(extra):
        a, b = rng.sample(range(1, n + 1), 2)
        edges.add(frozenset((a, b)))
    return sorted(tuple(sorted(e)) for e in edges)


# ---------------------------------------------------------------------------
# Check suites


@dataclass
class Failure:
    seed: int
    instance: dict
    message: str


@dataclass
class CheckReport:
    suite: str
    trials: int
    failures: list[Failure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        return json.dumps(
            {
                "suite": self.suite,
                "trials": self.trials,
                "failures": [
                    {"seed": f.seed, "instance": f.instance, "message": f.message}
                    for f in self.failures
                ],
            },
            indent=2,
        )

    def summary(self) -> str:
        status = "ok" if self.ok else f"{len(self.failures)} failure(s)"
        lines = [f"suite {self.suite}: {self.trials} trials, {status}"]
        for f in self.failures[:10]:
            lines.append(f"  seed={f.seed} {f.message} instance={json.dumps(f.instance)}")
        return "\n".join(lines)


def _check_gates(trial_rng: random.Random, n_max: int) -> tuple[dict, str | None]:
    n = trial_rng.randint(1, n_max)
    circuit = random_circuit(trial_rng, n, 20)
    t = Tableau.new_computational(n)
    state = DenseState(n)
    for gate, qs in circuit:
        t.apply_gate(gate, qs)
        state = state.apply_gate(gate, qs)
    inst = {"n": n, "circuit": [[g, list(q)] for g, q in circuit]}
    for s in t.stabilizers():
        if abs(state.expectation(s) - 1.0) > 1e-9:
            return inst, f"stabilizer {s} not satisfied by dense state"
    return inst, None


def _check_measurements(trial_rng: random.Random, n_max: int) -> tuple[dict, str | None]:
    n = trial_rng.randint(1, n_max)
    circuit = random_circuit(trial_rng, n, 20)
    t = Tableau.new_computational(n, rng_seed=trial_rng.getrandbits(63))
    state = DenseState(n)
    for gate, qs in circuit:
        t.apply_gate(gate, qs)
        state = state.apply_gate(gate, qs)
    measurements = [
        (trial_rng.randrange(1, n + 1), trial_rng.choice("XYZ")) for _ in range(5)
    ]
    inst = {
        "n": n,
        "circuit": [[g, list(q)] for g, q in circuit],
        "measurements": [[q, b] for q, b in measurements],
    }
    for q, basis in measurements:
        op = PauliString.single(n, q, basis)
        p_plus, p_minus = state.measurement_probabilities(op)
        rec = t.measure(q, basis)
        if rec.deterministic:
            want = 1.0 if rec.outcome == 1 else 0.0
            if abs(p_plus - want) > 1e-9:
                return inst, (
                    f"deterministic {basis}{q} outcome {rec.outcome:+d} but "
                    f"dense P(+1)={p_plus:.6f}"
                )
        else:
            if abs(p_plus - 0.5) > 1e-9:
                return inst, (
                    f"random {basis}{q} but dense P(+1)={p_plus:.6f}"
                )
        state = state.project(op, rec.outcome)
        nrm = state.norm()
        state = DenseState(n, state.vector / nrm)
        for s in t.stabilizers():
            if abs(state.expectation(s) - 1.0) > 1e-9:
                return inst, f"post-measurement stabilizer {s} not satisfied"
        t.validate()
    return inst, None


SUITES = (
    "gates",
    "measurements",
    "graph_rules",
    "fusions_tableII",
    "fusions_tableV",
    "n_fusion",
    "lo_kraus",
    "lo_stabilizer",
)


def _suite_fn(name: str):
    if name == "gates":
        return _check_gates
    if name == "measurements":
        return _check_measurements
    if name in ("graph_rules", "fusions_tableII", "fusions_tableV", "n_fusion"):
        from . import graph as graph_rules

        return {
            "graph_rules": graph_rules.check_graph_rules_trial,
            "fusions_tableII": graph_rules.check_fusion_tableII_trial,
            "fusions_tableV": graph_rules.check_fusion_tableV_trial,
            "n_fusion": graph_rules.check_n_fusion_trial,
        }[name]
    if name in ("lo_kraus", "lo_stabilizer"):
        from . import optics

        return {
            "lo_kraus": optics.check_lo_kraus_trial,
            "lo_stabilizer": optics.check_lo_stabilizer_trial,
        }[name]
    raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")


def _shrink(fn, n_max: int, seed: int, instance: dict, message: str) -> Failure:
    """Greedy shrink: re-run the trial at smaller n while it still fails."""
    best = Failure(seed, instance, message)
    n = instance.get("n")
    if not isinstance(n, int):
        return best
    for smaller in range(1, n):
        inst, msg = fn(random.Random(seed), smaller)
        if msg is not None:
            return Failure(seed, inst, msg)
    return best


def check_suite(
    suite: str, trials: int = 100, n_max: int = 5, seed: int = 0
) -> CheckReport:
    """Run one named equivalence suite; failures are data, not raises."""
    fn = _suite_fn(suite)
    report = CheckReport(suite, trials)
    for k in range(trials):
        trial_seed = seed * 1_000_003 + k
        inst, msg = fn(random.Random(trial_seed), n_max)
        if msg is not None:
            report.failures.append(_shrink(fn, n_max, trial_seed, inst, msg))
    return report
