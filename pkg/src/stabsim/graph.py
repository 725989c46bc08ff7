"""Cluster states as graphs and the graphical rewrite rule-book.

A ClusterGraph is a simple undirected graph over integer node ids with
per-node phase tags (net count of pending phase-gate corrections; odd
tags are the self-loop / Y-literal nodes) and a ledger of emitted local
corrections. Rule functions are pure: they copy the graph, apply one
rewrite, and return a RuleOutcome whose required_unitaries mirror the
rule-book's "Unitary" column. Hadamard-type corrections are meant to be
applied by the caller; phase-type corrections are also recorded as
phase tags so the raw (uncorrected) state is always reconstructible via
to_tableau.

Every rule here is validated against the tableau pipeline by the
equivalence trials at the bottom of the module.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field

from . import pauli
from .pauli import PauliString
from .tableau import (
    PreconditionError,
    Tableau,
    groups_equal,
    restricted_stabilizers,
)

Edge = frozenset


class ClusterGraph:
    """Simple graph with phase tags and a correction ledger."""

    def __init__(
        self,
        nodes=(),
        edges=(),
        phase_tags=None,
        ledger=None,
    ):
        self.nodes: set[int] = set(nodes)
        self.edges: set[frozenset[int]] = set()
        for e in edges:
            u, v = tuple(e)
            self.add_edge(u, v)
        self.phase_tags: dict[int, int] = dict(phase_tags or {})
        self.ledger: list[dict] = list(ledger or [])

    # -- basic structure -------------------------------------------------

    def copy(self) -> "ClusterGraph":
        return ClusterGraph(self.nodes, self.edges, self.phase_tags, self.ledger)

    @property
    def self_loops(self) -> set[int]:
        """Nodes whose stabilizer carries Y instead of X (odd phase tag)."""
        return {v for v, k in self.phase_tags.items() if k % 2 == 1}

    def neighbors(self, v: int) -> set[int]:
        return {next(iter(e - {v})) for e in self.edges if v in e}

    def has_edge(self, u: int, v: int) -> bool:
        return Edge((u, v)) in self.edges

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise PreconditionError("self edges are tracked as phase tags, not edges")
        self.nodes.update((u, v))
        self.edges.add(Edge((u, v)))

    def toggle_edge(self, u: int, v: int) -> None:
        """XOR an edge in or out; parallel edges cancel."""
        if u == v:
            return
        e = Edge((u, v))
        if e in self.edges:
            self.edges.discard(e)
        else:
            self.edges.add(e)

    def toggle_pairs(self, left: set[int], right: set[int]) -> None:
        """Invert edges between two node sets, ordered pairs counted mod 2.

        A pair lying in the overlap of both sets is hit twice and
        cancels; for disjoint sets this is the plain set inversion.
        """
        counts: dict[frozenset[int], int] = {}
        for a in left:
            for b in right:
                if a == b:
                    continue
                e = Edge((a, b))
                counts[e] = counts.get(e, 0) + 1
        for e, k in counts.items():
            if k % 2:
                u, v = tuple(e)
                self.toggle_edge(u, v)

    def remove_nodes(self, dead) -> None:
        dead = set(dead)
        self.nodes -= dead
        self.edges = {e for e in self.edges if not (e & dead)}
        for v in dead:
            self.phase_tags.pop(v, None)

    def add_phase_tag(self, v: int, count: int = 1) -> None:
        self.phase_tags[v] = (self.phase_tags.get(v, 0) + count) % 4
        if self.phase_tags[v] == 0:
            del self.phase_tags[v]

    def record(self, op: str, target: int, **extra) -> None:
        self.ledger.append({"op": op, "target": target, **extra})

    def components(self) -> list[set[int]]:
        remaining = set(self.nodes)
        out = []
        while remaining:
            seed = remaining.pop()
            comp = {seed}
            frontier = [seed]
            while frontier:
                v = frontier.pop()
                for u in self.neighbors(v):
                    if u not in comp:
                        comp.add(u)
                        frontier.append(u)
            remaining -= comp
            out.append(comp)
        return out

    def same_component(self, u: int, v: int) -> bool:
        return any(u in c and v in c for c in self.components())

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": len(self.nodes),
                "nodes": sorted(self.nodes),
                "edges": sorted(sorted(e) for e in self.edges),
                "self_loops": sorted(self.self_loops),
                "phase_tags": {str(k): v for k, v in sorted(self.phase_tags.items())},
                "ledger": self.ledger,
            }
        )

    @staticmethod
    def from_json(blob: str) -> "ClusterGraph":
        data = json.loads(blob)
        g = ClusterGraph(
            nodes=data.get("nodes", range(1, data["n"] + 1)),
            edges=[tuple(e) for e in data["edges"]],
            phase_tags={int(k): v for k, v in data.get("phase_tags", {}).items()},
            ledger=data.get("ledger", []),
        )
        return g

    def to_dot(self) -> str:
        lines = ["graph cluster {"]
        for v in sorted(self.nodes):
            attrs = []
            if v in self.self_loops:
                attrs.append('label="%d (Y)"' % v)
            lines.append(f"  {v}" + (f" [{', '.join(attrs)}]" if attrs else "") + ";")
        for e in sorted(sorted(e) for e in self.edges):
            lines.append(f"  {e[0]} -- {e[1]};")
        lines.append("}")
        return "\n".join(lines)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClusterGraph):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.edges == other.edges
            and self.phase_tags == other.phase_tags
        )

    def __repr__(self) -> str:
        return (
            f"ClusterGraph(nodes={sorted(self.nodes)}, "
            f"edges={sorted(sorted(e) for e in self.edges)})"
        )


@dataclass
class RuleOutcome:
    """Result of one graphical rewrite.

    required_unitaries lists the rule-book's correction column; "H"
    entries must be applied by the caller for the state to match
    `graph`, while "PDG" (phase-dagger) entries are additionally
    mirrored as +1 phase tags, so `to_tableau(graph)` reconstructs the
    raw, uncorrected state without them.
    """

    graph: ClusterGraph
    required_unitaries: list[dict] = field(default_factory=list)
    branch: str = "n/a"
    choice_used: dict = field(default_factory=dict)
    computed_by_oracle: bool = False


@dataclass
class NotACluster:
    """X-block is rank deficient; Hadamards on one option set fix it."""

    rank: int
    hadamard_options: list[tuple[int, ...]]


# ---------------------------------------------------------------------------
# graph <-> tableau


def to_tableau(g: ClusterGraph, rng_seed: int = 0) -> Tableau:
    """Cluster-state tableau: X_i (or Y_i on tagged nodes) times neighbor Zs.

    Nodes map to qubits in sorted order; phase tags are replayed as P
    gates on top of the plain cluster construction.
    """
    order = sorted(g.nodes)
    if not order:
        raise PreconditionError("empty graph has no tableau")
    index = {v: i + 1 for i, v in enumerate(order)}
    n = len(order)
    t = Tableau(n, rng_seed)
    for v in order:
        q = index[v]
        lits = {q: "X"}
        for u in g.neighbors(v):
            lits[index[u]] = "Z"
        t._set_row(n + q - 1, PauliString.from_literals(lits, n))
        t._set_row(q - 1, PauliString.single(n, q, "Z"))
    for v in order:
        for _ in range(g.phase_tags.get(v, 0) % 4):
            t.apply_gate("P", index[v])
    return t


def extract_graph(t: Tableau) -> ClusterGraph | NotACluster:
    """Read a cluster graph out of a tableau, or report Hadamard options.

    With a full-rank stabilizer X-block the Z-block after row reduction
    is the adjacency matrix; nonzero diagonal entries become phase tags
    (self-loops) and the single-qubit Pauli fixups for exact signs are
    recorded in the ledger. Otherwise all verified qubit sets whose
    Hadamards restore full rank are enumerated (capped).
    """
    n = t.n
    rows = t.stabilizers()
    reduced = _x_block_reduce(rows, n)
    pivots = _x_pivots(reduced, n)
    if len(pivots) < n:
        return NotACluster(len(pivots), _hadamard_options(t, len(pivots)))
    by_pivot = sorted(range(n), key=lambda i: pivots[i])
    ordered = [reduced[i] for i in by_pivot]
    g = ClusterGraph(nodes=range(1, n + 1))
    for i, p in enumerate(ordered):
        for j in range(n):
            if (p.z >> j) & 1:
                if j == i:
                    g.add_phase_tag(i + 1, 1)
                elif j > i:
                    g.add_edge(i + 1, j + 1)
                elif not g.has_edge(j + 1, i + 1):
                    raise AssertionError("asymmetric adjacency from commuting rows")
    # sign fixups: compare the tableau against the rebuilt tagged cluster
    rebuilt = to_tableau(g)
    for q, lit in _sign_fixups(t, rebuilt):
        g.record(lit, q, reason="sign fixup")
    return g


def _sign_fixups(t: Tableau, rebuilt: Tableau) -> list[tuple[int, str]]:
    """Single-qubit Paulis mapping rebuilt's signs onto t's (if any)."""
    n = t.n
    want = t.canonical_generators(with_signs=True)
    have = rebuilt.canonical_generators(with_signs=True)
    if [p.with_phase(0) for p in want] != [p.with_phase(0) for p in have]:
        raise AssertionError("extract/evaluate mismatch in stabilizer row space")
    flip = [1 if w.phase != h.phase else 0 for w, h in zip(want, have)]
    if not any(flip):
        return []
    fix = _solve_pauli_fixup(list(have), flip, n)
    return [(q, fix.literal(q)) for q in fix.support]


def _solve_pauli_fixup(rows: list[PauliString], flip: list[int], n: int) -> PauliString:
    """Find a Pauli anticommuting with exactly the flagged rows.

    Solves the GF(2) system given by the symplectic products of the
    candidate's 2n bits against each row.
    """
    m = len(rows)
    # unknowns: x_1..x_n, z_1..z_n of the fixup; equation per row:
    # sum_j (row.z_j * x_j + row.x_j * z_j) = flip_i (mod 2)
    aug = []
    for p, b in zip(rows, flip):
        vec = 0
        for j in range(n):
            if (p.z >> j) & 1:
                vec |= 1 << j
            if (p.x >> j) & 1:
                vec |= 1 << (n + j)
        aug.append((vec, b))
    # Gaussian elimination
    basis: list[tuple[int, int, int]] = []  # (pivot bit, vec, rhs)
    for vec, b in aug:
        for pb, bv, bb in basis:
            if (vec >> pb) & 1:
                vec ^= bv
                b ^= bb
        if vec:
            pb = vec.bit_length() - 1
            basis.append((pb, vec, b))
        elif b:
            raise AssertionError("no Pauli fixup exists for the requested signs")
    solution = 0
    for pb, vec, b in sorted(basis, reverse=True):
        acc = b
        for j in range(2 * n):
            if j != pb and (vec >> j) & 1 and (solution >> j) & 1:
                acc ^= 1
        if acc:
            solution |= 1 << pb
    return PauliString(n, solution & ((1 << n) - 1), solution >> n, 0)


def _x_block_reduce(rows: list[PauliString], n: int) -> list[PauliString]:
    work = list(rows)
    rank = 0
    for col in range(n):
        pivot = next(
            (i for i in range(rank, len(work)) if (work[i].x >> col) & 1), None
        )
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for i in range(len(work)):
            if i != rank and (work[i].x >> col) & 1:
                work[i] = pauli.multiply(work[rank], work[i])
        rank += 1
    return work


def _x_pivots(reduced: list[PauliString], n: int) -> list[int]:
    pivots = []
    for p in reduced:
        if p.x:
            pivots.append((p.x & -p.x).bit_length() - 1)
    return pivots


def _hadamard_options(t: Tableau, rank: int, cap: int = 64) -> list[tuple[int, ...]]:
    """Verified qubit sets whose Hadamards make the X-block full rank."""
    n = t.n
    x_rows = [p.x for p in t.stabilizers()]
    options: list[tuple[int, ...]] = []
    for cols in itertools.combinations(range(n), rank):
        sub = []
        for r in x_rows:
            v = 0
            for k, c in enumerate(cols):
                if (r >> c) & 1:
                    v |= 1 << k
            sub.append(v)
        if _rank_int(sub) != rank:
            continue
        candidate = tuple(q + 1 for q in range(n) if q not in cols)
        trial = t.copy()
        for q in candidate:
            trial.apply_gate("H", q)
        reduced = _x_block_reduce(trial.stabilizers(), n)
        if len(_x_pivots(reduced, n)) == n:
            options.append(candidate)
        if len(options) >= cap:
            break
    return sorted(options, key=lambda o: (len(o), o))


def _rank_int(vectors: list[int]) -> int:
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return len(basis)


# ---------------------------------------------------------------------------
# single-qubit measurement rules and unitary rules


def _require_node(g: ClusterGraph, v: int) -> None:
    if v not in g.nodes:
        raise PreconditionError(f"node {v} not in graph")


def _require_untagged(g: ClusterGraph, nodes) -> None:
    tagged = [v for v in nodes if g.phase_tags.get(v, 0) % 4]
    if tagged:
        raise PreconditionError(
            f"rule needs phase-tag-free nodes, but {sorted(tagged)} carry tags"
        )


def local_complement(g: ClusterGraph, v: int) -> ClusterGraph:
    """Toggle every pair of neighbors of v."""
    _require_node(g, v)
    out = g.copy()
    nbrs = sorted(out.neighbors(v))
    for a, b in itertools.combinations(nbrs, 2):
        out.toggle_edge(a, b)
    return out


def measure_z_graph(g: ClusterGraph, v: int) -> RuleOutcome:
    """Z measurement deletes the node and its edges."""
    _require_node(g, v)
    out = g.copy()
    out.remove_nodes([v])
    return RuleOutcome(out, [], branch="n/a", choice_used={"v": v})


def measure_x_graph(g: ClusterGraph, v: int, u: int | None = None) -> RuleOutcome:
    """X measurement; u is the neighbor that receives the Hadamard."""
    _require_node(g, v)
    _require_untagged(g, {v})
    nbrs = g.neighbors(v)
    if not nbrs:
        out = g.copy()
        out.remove_nodes([v])
        return RuleOutcome(out, [], branch="n/a", choice_used={"v": v})
    if u is None:
        u = min(nbrs)
    if u not in nbrs:
        raise PreconditionError(f"{u} is not a neighbor of {v}")
    out = local_complement(g, v)
    out = local_complement(out, u)
    out = local_complement(out, v)
    out.remove_nodes([v])
    return RuleOutcome(
        out,
        [{"op": "H", "target": u}],
        branch="n/a",
        choice_used={"v": v, "u": u},
    )


def measure_y_graph(g: ClusterGraph, v: int) -> RuleOutcome:
    """Y measurement: local complement at v, delete v, P-dagger on neighbors."""
    _require_node(g, v)
    _require_untagged(g, {v})
    nbrs = sorted(g.neighbors(v))
    out = local_complement(g, v)
    out.remove_nodes([v])
    required = [{"op": "PDG", "target": u} for u in nbrs]
    for u in nbrs:
        out.add_phase_tag(u, 1)
        out.record("PDG", u, reason="pending Y-rule correction")
    return RuleOutcome(out, required, branch="n/a", choice_used={"v": v})


def cnot_graph(g: ClusterGraph, c: int, t: int) -> ClusterGraph:
    """CNOT toggles edges between the control and the target's neighbors."""
    _require_node(g, c)
    _require_node(g, t)
    if c == t:
        raise PreconditionError("control and target must differ")
    out = g.copy()
    for w in g.neighbors(t):
        if w != c:
            out.toggle_edge(c, w)
    return out


def two_adjacent_x(g: ClusterGraph, u: int, v: int) -> RuleOutcome:
    """X measurements on both ends of an edge; no Hadamards needed."""
    _require_node(g, u)
    _require_node(g, v)
    _require_untagged(g, {u, v})
    if not g.has_edge(u, v):
        raise PreconditionError(f"({u},{v}) is not an edge")
    a_side = g.neighbors(u) - {v}
    b_side = g.neighbors(v) - {u}
    out = g.copy()
    out.toggle_pairs(a_side, b_side)
    out.remove_nodes([u, v])
    return RuleOutcome(out, [], branch="n/a", choice_used={"u": u, "v": v})


# ---------------------------------------------------------------------------
# two-qubit fusions (rotated Bell measurements, Table-driven)

# per fusion type: the measured operator pair (literals on c and t) and
# the sign of the second outcome that the optical circuit heralds as
# success; M1 = conjugated X_cX_t, M2 = conjugated Z_cZ_t
_FUSION_MEAS = {
    1: (("Z", "Z"), ("X", "X"), +1),  # R_c=H,  R_t=H
    2: (("X", "X"), ("Z", "Z"), +1),  # R_c=I,  R_t=I
    3: (("Z", "X"), ("X", "Z"), +1),  # R_c=H,  R_t=I
    4: (("X", "Z"), ("Z", "Y"), +1),  # R_c=I,  R_t=PH
}


def fusion_measurement_ops(
    fusion_type: int, n: int, qc: int, qt: int
) -> tuple[PauliString, PauliString, int]:
    """(M1, M2, success sign of M2) on qubit indices qc, qt."""
    (l1c, l1t), (l2c, l2t), sign = _FUSION_MEAS[fusion_type]
    m1 = PauliString.from_literals({qc: l1c, qt: l1t}, n)
    m2 = PauliString.from_literals({qc: l2c, qt: l2t}, n)
    return m1, m2, sign


def _success_rule_bell(g: ClusterGraph, c: int, t: int, v: int, u: int | None) -> ClusterGraph:
    """Shared success rule for fusion types 1 and 2.

    For v in {c,t}, w the other: perform (((G.v).u).v) \\ {v,w}, then
    invert the edges between N_w and {u} union N_u (neighborhoods taken
    in the original graph, restricted to surviving nodes).
    """
    w = t if v == c else c
    nv = g.neighbors(v)
    if not nv:
        # fall back to the other role if it has neighbors
        if g.neighbors(w):
            return _success_rule_bell(g, c, t, w, None)
        out = g.copy()
        out.remove_nodes([c, t])
        return out
    if u is None:
        u = min(nv)
    if u not in nv:
        raise PreconditionError(f"{u} is not a neighbor of {v}")
    n_w = g.neighbors(w) - {v, w}
    n_u = (g.neighbors(u) | {u}) - {v, w}
    out = local_complement(g, v)
    out = local_complement(out, u)
    out = local_complement(out, v)
    out.remove_nodes([v, w])
    out.toggle_pairs(n_w, n_u)
    return out


def fuse_graph(
    g: ClusterGraph,
    c: int,
    t: int,
    fusion_type: int,
    branch: str,
    choices: dict | None = None,
) -> RuleOutcome:
    """Apply one Table-of-fusions rewrite for the (type, branch) cell.

    The rule-book assumes c and t belong to distinct connected
    components; otherwise the outcome is computed transparently through
    the tableau pipeline and flagged computed_by_oracle.
    """
    _require_node(g, c)
    _require_node(g, t)
    if fusion_type not in _FUSION_MEAS:
        raise PreconditionError(f"unknown fusion type {fusion_type}")
    if branch not in ("success", "failure"):
        raise PreconditionError("branch must be 'success' or 'failure'")
    choices = dict(choices or {})
    if g.same_component(c, t):
        return _fuse_by_oracle(g, c, t, fusion_type, branch, choices)
    _require_untagged(g, {c, t})
    if branch == "success":
        if fusion_type in (1, 2):
            v = choices.get("v", c if g.neighbors(c) else t)
            u = choices.get("u")
            out = _success_rule_bell(g, c, t, v, u)
            units = []
            if g.neighbors(v) or g.neighbors(t if v == c else c):
                used_v = v if g.neighbors(v) else (t if v == c else c)
                used_u = u if u is not None else min(g.neighbors(used_v))
                units = [{"op": "H", "target": used_u}]
                choices = {"v": used_v, "u": used_u}
            return RuleOutcome(out, units, "success", choices)
        if fusion_type == 3:
            out = g.copy()
            nc, nt = g.neighbors(c), g.neighbors(t)
            out.remove_nodes([c, t])
            out.toggle_pairs(nc - {c, t}, nt - {c, t})
            return RuleOutcome(out, [], "success", {})
        # type 4: local complement at c, connect N_c to N_t, drop both,
        # pending P-dagger corrections on N_c
        nc = sorted(g.neighbors(c))
        nt = g.neighbors(t)
        out = local_complement(g, c)
        out.remove_nodes([c, t])
        out.toggle_pairs(set(nc), nt - {c, t})
        required = [{"op": "PDG", "target": x} for x in nc]
        for x in nc:
            out.add_phase_tag(x, 1)
            out.record("PDG", x, reason="pending fusion correction")
        return RuleOutcome(out, required, "success", {})
    # failure branches
    if fusion_type == 1:
        u = choices.get("u")
        v = choices.get("v")
        step1 = measure_x_graph(g, c, u)
        step2 = measure_x_graph(step1.graph, t, v)
        units = step1.required_unitaries + step2.required_unitaries
        used = {**step1.choice_used, **{"t": t, "v": step2.choice_used.get("u")}}
        return RuleOutcome(step2.graph, units, "failure", used)
    if fusion_type == 2:
        out = g.copy()
        out.remove_nodes([c, t])
        return RuleOutcome(out, [], "failure", {})
    if fusion_type == 3:
        u = choices.get("u")
        step1 = measure_x_graph(g, c, u)
        step2 = measure_z_graph(step1.graph, t)
        return RuleOutcome(
            step2.graph, step1.required_unitaries, "failure", step1.choice_used
        )
    # type 4 failure: Y on t with pending corrections, Z on c
    step1 = measure_y_graph(g, t)
    step2 = measure_z_graph(step1.graph, c)
    return RuleOutcome(step2.graph, step1.required_unitaries, "failure", {"t": t})


def fusion_tableau_ops(
    fusion_type: int, branch: str, c: int, t: int, choices: dict
) -> list[tuple]:
    """Tableau pipeline realizing one fusion cell.

    Ops vocabulary: ("joint", type, c, t) for the heralded projection,
    ("measure", basis, node), ("gate", name, nodes), ("H", node) for
    rule-book Hadamard corrections.
    """
    if branch == "success":
        ops: list[tuple] = [("joint", fusion_type, c, t)]
        if fusion_type in (1, 2) and choices.get("u") is not None:
            ops.append(("H", choices["u"]))
        return ops
    if fusion_type == 1:
        ops = [("measure", "X", c)]
        if choices.get("u") is not None:
            ops.append(("H", choices["u"]))
        ops.append(("measure", "X", t))
        if choices.get("v") is not None:
            ops.append(("H", choices["v"]))
        return ops
    if fusion_type == 2:
        return [("measure", "Z", c), ("measure", "Z", t)]
    if fusion_type == 3:
        ops = [("measure", "X", c)]
        if choices.get("u") is not None:
            ops.append(("H", choices["u"]))
        ops.append(("measure", "Z", t))
        return ops
    return [("measure", "Y", t), ("measure", "Z", c)]


# ---------------------------------------------------------------------------
# type-I fusion family (Table of rotated type-I variants)


def fuse_type1_graph(
    g: ClusterGraph,
    c: int,
    t: int,
    variant: int,
    branch: str,
    choices: dict | None = None,
) -> RuleOutcome:
    """Type-I fusion rewrites: the target dies, the control survives
    on success; both die on failure."""
    _require_node(g, c)
    _require_node(g, t)
    if variant not in (1, 2, 3, 4):
        raise PreconditionError(f"unknown type-I variant {variant}")
    if branch not in ("success", "failure"):
        raise PreconditionError("branch must be 'success' or 'failure'")
    choices = dict(choices or {})
    if g.same_component(c, t):
        return _fuse_type1_by_oracle(g, c, t, variant, branch, choices)
    _require_untagged(g, {c, t})
    if variant in (1, 2):
        if branch == "success":
            out = g.copy()
            nt = g.neighbors(t) - {c}
            out.remove_nodes([t])
            out.toggle_pairs({c}, nt)
            return RuleOutcome(out, [], "success", {})
        out = g.copy()
        out.remove_nodes([c, t])
        return RuleOutcome(out, [], "failure", {})
    if variant == 3:
        if branch == "success":
            i = choices.get("i")
            g2 = g.copy()
            g2.add_edge(c, t)
            if i is None:
                i = min(g2.neighbors(t))
            step = measure_x_graph(g2, t, i)
            return RuleOutcome(
                step.graph, step.required_unitaries, "success", {"i": i}
            )
        i = choices.get("i")
        step1 = measure_z_graph(g, c)
        step2 = measure_x_graph(step1.graph, t, i)
        return RuleOutcome(
            step2.graph, step2.required_unitaries, "failure", step2.choice_used
        )
    # variant 4
    if branch == "failure":
        v = choices.get("v")
        u = choices.get("u")
        step1 = measure_x_graph(g, c, v)
        step2 = measure_x_graph(step1.graph, t, u)
        return RuleOutcome(
            step2.graph,
            step1.required_unitaries + step2.required_unitaries,
            "failure",
            {"v": step1.choice_used.get("u"), "u": step2.choice_used.get("u")},
        )
    # The success Kraus |+><++| +- |-><--| equals <+_t| CNOT(control=t,
    # target=c) exactly, so the rewrite is the CNOT edge toggle between
    # t and N_c followed by the plain X-measurement rule at t, with one
    # Hadamard on a (new) neighbor u of t.
    g1 = g.copy()
    for w in sorted(g.neighbors(c)):
        g1.toggle_edge(t, w)
    u = choices.get("u")
    nt = g1.neighbors(t)
    if u is None:
        u = min(nt) if nt else None
    if u is not None and u not in nt:
        raise PreconditionError(
            "variant 4 success needs u adjacent to t after the control toggle"
        )
    step = measure_x_graph(g1, t, u)
    return RuleOutcome(
        step.graph, step.required_unitaries, "success", step.choice_used
    )


def fusion_type1_tableau_ops(
    variant: int, branch: str, c: int, t: int, choices: dict
) -> list[tuple]:
    """Tableau pipeline for a type-I fusion cell."""
    if variant in (1, 2):
        if branch == "success":
            ops: list[tuple] = []
            if variant == 2:
                ops.append(("gate", "X", (t,)))
            ops.append(("gate", "CNOT", (c, t)))
            ops.append(("measure", "Z", t))
            return ops
        return [("measure", "Z", c), ("measure", "Z", t)]
    if variant == 3:
        if branch == "success":
            ops = [("gate", "CZ", (c, t)), ("measure", "X", t)]
            if choices.get("i") is not None:
                ops.append(("H", choices["i"]))
            return ops
        ops = [("measure", "Z", c), ("measure", "X", t)]
        if choices.get("u") is not None:
            ops.append(("H", choices["u"]))
        return ops
    if branch == "success":
        ops = [("gate", "CNOT", (t, c)), ("measure", "X", t)]
        if choices.get("u") is not None:
            ops.append(("H", choices["u"]))
        return ops
    ops = [("measure", "X", c)]
    if choices.get("v") is not None:
        ops.append(("H", choices["v"]))
    ops.append(("measure", "X", t))
    if choices.get("u") is not None:
        ops.append(("H", choices["u"]))
    return ops


# ---------------------------------------------------------------------------
# n-qubit fusion


def n_fusion_graph(
    g: ClusterGraph,
    qubits: list[int],
    i: int | None = None,
    j: int | None = None,
    branch: str = "success",
) -> RuleOutcome:
    """GHZ-projection fusion of one qubit from each of several clusters.

    Success: perform (((G.i).j).i), connect {j} union N_j to the
    neighbors of every measured qubit except i, delete the measured
    qubits, Hadamard on j. Failure collapses to Z measurements on all
    fused qubits.
    """
    qubits = list(qubits)
    if len(qubits) < 2 or len(set(qubits)) != len(qubits):
        raise PreconditionError("n-fusion needs at least two distinct qubits")
    for q in qubits:
        _require_node(g, q)
    if branch not in ("success", "failure"):
        raise PreconditionError("branch must be 'success' or 'failure'")
    if branch == "failure":
        out = g.copy()
        out.remove_nodes(qubits)
        return RuleOutcome(out, [], "failure", {})
    _require_untagged(g, qubits)
    measured = set(qubits)
    if i is None:
        i = next((q for q in sorted(qubits) if g.neighbors(q) - measured), None)
    if i is None:
        # every fused qubit is isolated (or only fused-adjacent)
        out = g.copy()
        out.remove_nodes(qubits)
        return RuleOutcome(out, [], "success", {})
    nbrs_i = g.neighbors(i)
    if j is None:
        j = min(nbrs_i - measured) if nbrs_i - measured else None
    if j is None or j not in nbrs_i:
        raise PreconditionError("n-fusion success needs a neighbor j of i")
    other_nbrs: set[int] = set()
    for q in measured - {i}:
        other_nbrs |= g.neighbors(q)
    other_nbrs -= measured
    j_side = ({j} | g.neighbors(j)) - measured
    out = local_complement(g, i)
    out = local_complement(out, j)
    out = local_complement(out, i)
    out.remove_nodes(measured)
    out.toggle_pairs(j_side, other_nbrs)
    return RuleOutcome(
        out, [{"op": "H", "target": j}], "success", {"i": i, "j": j}
    )


def n_fusion_measurement_ops(n: int, qubit_indices: list[int]) -> list[PauliString]:
    """GHZ-projection operators: X on all fused qubits, Z_1Z_k pairs."""
    first = qubit_indices[0]
    ops = [PauliString.from_literals({q: "X" for q in qubit_indices}, n)]
    for q in qubit_indices[1:]:
        ops.append(PauliString.from_literals({first: "Z", q: "Z"}, n))
    return ops


# ---------------------------------------------------------------------------
# tableau pipeline, oracle fallback, and equivalence checking


def _node_index(g: ClusterGraph) -> dict[int, int]:
    return {v: k + 1 for k, v in enumerate(sorted(g.nodes))}


def run_pipeline(
    g: ClusterGraph, ops: list[tuple], rng_seed: int = 0
) -> tuple[Tableau, dict[int, int]]:
    """Run node-level ops on the cluster's tableau; returns (t, node->qubit)."""
    index = _node_index(g)
    t = to_tableau(g, rng_seed)
    n = t.n
    for op in ops:
        kind = op[0]
        if kind == "gate":
            _, name, nodes = op
            t.apply_gate(name, tuple(index[v] for v in nodes))
        elif kind == "H":
            t.apply_gate("H", index[op[1]])
        elif kind == "measure":
            _, basis, node = op
            t.measure(index[node], basis)
        elif kind == "joint":
            _, fusion_type, c, tt = op
            m1, m2, sign = fusion_measurement_ops(
                fusion_type, n, index[c], index[tt]
            )
            t.joint_measure([m1, m2], forced_outcomes=[None, sign])
        elif kind == "njoint":
            _, nodes = op
            t.joint_measure(
                n_fusion_measurement_ops(n, [index[v] for v in nodes])
            )
        else:
            raise ValueError(f"unknown pipeline op {op!r}")
    return t, index


def rule_matches_pipeline(
    g: ClusterGraph, outcome: RuleOutcome, ops: list[tuple], rng_seed: int = 0
) -> tuple[bool, str]:
    """Sign-normalized group equality of a rule outcome vs the pipeline."""
    t, index = run_pipeline(g, ops, rng_seed)
    survivors = sorted(outcome.graph.nodes)
    keep = [index[v] for v in survivors]
    if not survivors:
        return True, ""
    got = restricted_stabilizers(t, keep)
    want = to_tableau(outcome.graph).stabilizers()
    k = len(survivors)
    if groups_equal(got, want, k, with_signs=False):
        return True, ""
    return False, (
        f"survivors {survivors}: pipeline group != rule group "
        f"(pipeline {[str(p) for p in got]}, rule {[str(p) for p in want]})"
    )


def _relabel(g: ClusterGraph, mapping: dict[int, int]) -> ClusterGraph:
    return ClusterGraph(
        nodes=[mapping[v] for v in g.nodes],
        edges=[tuple(mapping[v] for v in e) for e in g.edges],
        phase_tags={mapping[v]: k for v, k in g.phase_tags.items()},
        ledger=[
            {**entry, "target": mapping.get(entry.get("target"), entry.get("target"))}
            for entry in g.ledger
        ],
    )


def _oracle_outcome(
    g: ClusterGraph,
    ops: list[tuple],
    dead: list[int],
    branch: str,
    choices: dict,
) -> RuleOutcome:
    """Compute a fusion outcome through the tableau when rules don't apply."""
    t, index = run_pipeline(g, ops, rng_seed=0)
    rev = {q: v for v, q in index.items()}
    required: list[dict] = []
    # detach the dead qubits and park them on |+> so extraction sees
    # isolated nodes
    for v in dead:
        q = index[v]
        rec = t.measure(q, "Z")
        t.apply_gate("H", q)
    extracted = extract_graph(t)
    if isinstance(extracted, NotACluster):
        if not extracted.hadamard_options:
            raise PreconditionError("oracle fusion result is not Hadamard-clusterable")
        option = extracted.hadamard_options[0]
        for q in option:
            t.apply_gate("H", q)
            required.append({"op": "H", "target": rev[q]})
        extracted = extract_graph(t)
        assert isinstance(extracted, ClusterGraph)
    out = _relabel(extracted, rev)
    out.remove_nodes(dead)
    return RuleOutcome(out, required, branch, choices, computed_by_oracle=True)


def _fuse_by_oracle(g, c, t, fusion_type, branch, choices) -> RuleOutcome:
    ops = fusion_tableau_ops(fusion_type, branch, c, t, {})
    return _oracle_outcome(g, ops, [c, t], branch, choices)


def _fuse_type1_by_oracle(g, c, t, variant, branch, choices) -> RuleOutcome:
    ops = fusion_type1_tableau_ops(variant, branch, c, t, {})
    dead = [t] if branch == "success" else [c, t]
    return _oracle_outcome(g, ops, dead, branch, choices)


# ---------------------------------------------------------------------------
# randomized equivalence trials (driven by verify.check_suite)


def _random_cluster_pair(rng: random.Random, n_max: int):
    from .verify import random_connected_graph

    n1 = rng.randint(2, max(2, n_max // 2))
    n2 = rng.randint(2, max(2, n_max - n1))
    e1 = random_connected_graph(rng, n1)
    e2 = [(a + n1, b + n1) for a, b in random_connected_graph(rng, n2)]
    g = ClusterGraph(nodes=range(1, n1 + n2 + 1), edges=list(e1) + list(e2))
    c = rng.randint(1, n1)
    t = rng.randint(n1 + 1, n1 + n2)
    return g, c, t


def check_graph_rules_trial(rng: random.Random, n_max: int) -> tuple[dict, str | None]:
    from .verify import random_connected_graph

    n = rng.randint(2, max(2, n_max))
    edges = random_connected_graph(rng, n)
    g = ClusterGraph(nodes=range(1, n + 1), edges=edges)
    rule = rng.choice(["Z", "X", "Y", "LC", "CNOT", "XX"])
    inst = {"n": n, "edges": [list(e) for e in edges], "rule": rule}
    if rule == "Z":
        v = rng.randint(1, n)
        inst["v"] = v
        outcome = measure_z_graph(g, v)
        ok, msg = rule_matches_pipeline(g, outcome, [("measure", "Z", v)])
    elif rule == "X":
        v = rng.randint(1, n)
        nbrs = sorted(g.neighbors(v))
        u = rng.choice(nbrs) if nbrs else None
        inst["v"], inst["u"] = v, u
        outcome = measure_x_graph(g, v, u)
        ops: list[tuple] = [("measure", "X", v)]
        if u is not None:
            ops.append(("H", u))
        ok, msg = rule_matches_pipeline(g, outcome, ops)
    elif rule == "Y":
        v = rng.randint(1, n)
        inst["v"] = v
        outcome = measure_y_graph(g, v)
        ok, msg = rule_matches_pipeline(g, outcome, [("measure", "Y", v)])
    elif rule == "LC":
        v = rng.randint(1, n)
        inst["v"] = v
        out = RuleOutcome(local_complement(g, v))
        ops = [("gate", "PDG", (u,)) for u in sorted(g.neighbors(v))]
        ops += [("gate", "H", (v,)), ("gate", "P", (v,)), ("gate", "H", (v,))]
        ok, msg = rule_matches_pipeline(g, out, ops)
    elif rule == "CNOT":
        c, t = rng.sample(range(1, n + 1), 2)
        inst["c"], inst["t"] = c, t
        out = RuleOutcome(cnot_graph(g, c, t))
        ok, msg = rule_matches_pipeline(g, out, [("gate", "CNOT", (c, t))])
    else:  # XX
        if not g.edges:
            return inst, None
        u, v = sorted(rng.choice(sorted(tuple(sorted(e)) for e in g.edges)))
        inst["u"], inst["v"] = u, v
        outcome = two_adjacent_x(g, u, v)
        ok, msg = rule_matches_pipeline(
            g, outcome, [("measure", "X", u), ("measure", "X", v)]
        )
    return inst, (None if ok else msg)


def check_fusion_tableII_trial(rng: random.Random, n_max: int) -> tuple[dict, str | None]:
    g, c, t = _random_cluster_pair(rng, n_max)
    fusion_type = rng.randint(1, 4)
    branch = rng.choice(["success", "failure"])
    choices: dict = {}
    if fusion_type in (1, 2) and branch == "success":
        v = rng.choice([c, t])
        choices = {"v": v, "u": rng.choice(sorted(g.neighbors(v)))}
    elif fusion_type == 1 and branch == "failure":
        choices = {
            "u": rng.choice(sorted(g.neighbors(c))),
            "v": rng.choice(sorted(g.neighbors(t))),
        }
    elif fusion_type == 3 and branch == "failure":
        choices = {"u": rng.choice(sorted(g.neighbors(c)))}
    inst = {
        "n": len(g.nodes),
        "edges": sorted(sorted(e) for e in g.edges),
        "c": c,
        "t": t,
        "type": fusion_type,
        "branch": branch,
        "choices": choices,
    }
    outcome = fuse_graph(g, c, t, fusion_type, branch, choices)
    if outcome.computed_by_oracle:
        return inst, "rule path unexpectedly fell back to the oracle"
    ops = fusion_tableau_ops(fusion_type, branch, c, t, outcome.choice_used or choices)
    ok, msg = rule_matches_pipeline(g, outcome, ops)
    return inst, (None if ok else f"type {fusion_type} {branch}: {msg}")


def check_fusion_tableV_trial(rng: random.Random, n_max: int) -> tuple[dict, str | None]:
    g, c, t = _random_cluster_pair(rng, n_max)
    variant = rng.randint(1, 4)
    branch = rng.choice(["success", "failure"])
    choices: dict = {}
    if variant == 3 and branch == "success":
        choices = {"i": rng.choice(sorted(g.neighbors(t) | {c}))}
    elif variant == 3 and branch == "failure":
        choices = {"u": rng.choice(sorted(g.neighbors(t)))}
    elif variant == 4 and branch == "success":
        choices = {"u": rng.choice(sorted(g.neighbors(t) | g.neighbors(c)))}
    elif variant == 4 and branch == "failure":
        choices = {
            "v": rng.choice(sorted(g.neighbors(c))),
            "u": rng.choice(sorted(g.neighbors(t))),
        }
    inst = {
        "n": len(g.nodes),
        "edges": sorted(sorted(e) for e in g.edges),
        "c": c,
        "t": t,
        "variant": variant,
        "branch": branch,
        "choices": choices,
    }
    outcome = fuse_type1_graph(g, c, t, variant, branch, choices)
    if outcome.computed_by_oracle:
        return inst, "rule path unexpectedly fell back to the oracle"
    ops = fusion_type1_tableau_ops(variant, branch, c, t, outcome.choice_used or choices)
    ok, msg = rule_matches_pipeline(g, outcome, ops)
    return inst, (None if ok else f"variant {variant} {branch}: {msg}")


def check_n_fusion_trial(rng: random.Random, n_max: int) -> tuple[dict, str | None]:
    from .verify import random_connected_graph

    m = rng.choice([2, 3])
    sizes = []
    remaining = max(4, n_max)
    for k in range(m):
        hi = max(2, (remaining - 2 * (m - k - 1)))
        size = rng.randint(2, max(2, min(3, hi)))
        sizes.append(size)
        remaining -= size
    offset = 0
    edges: list[tuple[int, int]] = []
    fused = []
    for size in sizes:
        edges += [(a + offset, b + offset) for a, b in random_connected_graph(rng, size)]
        fused.append(rng.randint(offset + 1, offset + size))
        offset += size
    g = ClusterGraph(nodes=range(1, offset + 1), edges=edges)
    branch = rng.choice(["success", "failure"])
    i = rng.choice(fused)
    j_opts = sorted(g.neighbors(i) - set(fused))
    if not j_opts:
        i = next(q for q in fused if g.neighbors(q) - set(fused))
        j_opts = sorted(g.neighbors(i) - set(fused))
    j = rng.choice(j_opts)
    inst = {
        "n": offset,
        "edges": [list(e) for e in edges],
        "qubits": fused,
        "i": i,
        "j": j,
        "branch": branch,
    }
    outcome = n_fusion_graph(g, fused, i=i, j=j, branch=branch)
    if branch == "failure":
        ops: list[tuple] = [("measure", "Z", q) for q in fused]
    else:
        ops = [("njoint", fused), ("H", j)]
    ok, msg = rule_matches_pipeline(g, outcome, ops)
    return inst, (None if ok else f"n-fusion {branch}: {msg}")
