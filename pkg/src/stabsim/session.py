"""Stateful session engine shared by the CLI and the HTTP service.

A session owns one tableau (the source of truth), a retired-qubit set
for measured/consumed photons, and an operation history that replays
bit-exactly from the seed. The graph view is always derived by
extract_graph on the live tableau; whenever an operation leaves the
state outside cluster form, the session parks a pending Hadamard choice
whose options are the verified combinations, mirroring the interactive
simulator flow. Both front ends dispatch through OPS, so there is no
logic duplication between them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import graph as graphmod
from . import optics
from .graph import ClusterGraph, NotACluster, extract_graph, to_tableau
from .pauli import DimensionError
from .tableau import PreconditionError, Tableau


class OpError(ValueError):
    """Invalid request against the current session state."""


@dataclass
class Session:
    id: str
    seed: int
    tableau: Tableau | None = None
    retired: set[int] = field(default_factory=set)
    history: list[dict] = field(default_factory=list)
    pending: dict | None = None
    last_forced: list[int] = field(default_factory=list)

    # -- view ------------------------------------------------------------

    def graph_view(self) -> ClusterGraph | NotACluster | None:
        if self.tableau is None:
            return None
        extracted = extract_graph(self.tableau)
        if isinstance(extracted, NotACluster):
            return extracted
        extracted.remove_nodes(self.retired & extracted.nodes)
        return extracted

    def snapshot(self) -> dict:
        view = self.graph_view()
        graph_json = None
        options = None
        if isinstance(view, ClusterGraph):
            graph_json = json.loads(view.to_json())
        elif isinstance(view, NotACluster):
            options = [list(o) for o in view.hadamard_options]
        generators = None
        if self.tableau is not None:
            generators = json.loads(self.tableau.to_json())
        snap = {
            "session": self.id,
            "seed": self.seed,
            "n": self.tableau.n if self.tableau else 0,
            "retired": sorted(self.retired),
            "graph": graph_json,
            "hadamard_options": options,
            "generators": generators,
            "history_length": len(self.history),
            "pending": self.pending,
            "state_hash": self.state_hash(),
        }
        return snap

    def state_hash(self) -> str:
        payload = "" if self.tableau is None else self.tableau.serialize()
        payload += json.dumps(sorted(self.retired))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    # -- helpers -----------------------------------------------------------

    def _require_state(self) -> Tableau:
        if self.tableau is None:
            raise OpError("no state yet; run new-cluster first")
        return self.tableau

    def _check_qubit(self, q: int) -> None:
        t = self._require_state()
        if not 1 <= q <= t.n:
            raise OpError(f"qubit {q} out of range 1..{t.n}")
        if q in self.retired:
            raise OpError(f"qubit {q} was already measured away")

    def _retire(self, qubits: list[int]) -> None:
        """Detach consumed qubits and park them on |+> so the remaining
        tableau stays in cluster form."""
        t = self._require_state()
        for q in qubits:
            rec = t.measure(q, "Z")
            t.apply_gate("H", q)
            self.retired.add(q)

    def _resolve_view(self) -> dict | None:
        """Return a needs_choice payload if the state is not a cluster."""
        view = self.graph_view()
        if isinstance(view, NotACluster):
            options = [list(o) for o in view.hadamard_options]
            self.pending = {"kind": "hadamards", "options": options}
            return {"status": "needs_choice", "choices": options}
        return None


# ---------------------------------------------------------------------------
# operations (each returns a result dict; raises OpError on bad input)


def _op_new_cluster(s: Session, args: dict) -> dict:
    edges = [tuple(e) for e in args.get("edges", [])]
    nodes = args.get("n")
    if nodes is None:
        nodes = max((max(e) for e in edges), default=0)
    if nodes < 1:
        raise OpError("cluster needs at least one node")
    g = ClusterGraph(nodes=range(1, nodes + 1), edges=edges)
    s.tableau = to_tableau(g, rng_seed=s.seed)
    s.retired = set()
    return {"status": "ok"}


def _op_apply(s: Session, args: dict) -> dict:
    t = s._require_state()
    qubits = args["qubits"]
    qubits = [qubits] if isinstance(qubits, int) else list(qubits)
    for q in qubits:
        s._check_qubit(q)
    try:
        t.apply_gate(args["gate"], tuple(qubits))
    except (PreconditionError, DimensionError, KeyError) as err:
        raise OpError(str(err)) from None
    choice = s._resolve_view()
    return choice or {"status": "ok"}


def _op_measure(s: Session, args: dict) -> dict:
    t = s._require_state()
    q = args["qubit"]
    basis = args.get("basis", "Z").upper()
    s._check_qubit(q)
    forced = args.get("outcome")
    if forced is not None and forced not in (1, -1):
        raise OpError("outcome must be +1 or -1")
    try:
        rec = t.measure(q, basis, forced_outcome=forced)
    except (PreconditionError, DimensionError) as err:
        raise OpError(str(err)) from None
    result = {
        "status": "ok",
        "outcome": rec.outcome,
        "deterministic": rec.deterministic,
        "forced": forced is not None,
    }
    s._retire([q])
    choice = s._resolve_view()
    if choice is not None:
        result.update(choice)
    return result


def _op_fuse(s: Session, args: dict) -> dict:
    t = s._require_state()
    c, tq = args["control"], args["target"]
    fusion_type = args.get("type", 2)
    branch = args.get("branch", "success")
    s._check_qubit(c)
    s._check_qubit(tq)
    if c == tq:
        raise OpError("control and target must differ")
    ops = graphmod.fusion_tableau_ops(fusion_type, branch, c, tq, {})
    _run_session_ops(s, ops)
    s._retire([c, tq])
    choice = s._resolve_view()
    return choice or {"status": "ok"}


def _op_type1_fuse(s: Session, args: dict) -> dict:
    t = s._require_state()
    c, tq = args["control"], args["target"]
    variant = args.get("variant", 1)
    branch = args.get("branch", "success")
    s._check_qubit(c)
    s._check_qubit(tq)
    if c == tq:
        raise OpError("control and target must differ")
    ops = graphmod.fusion_type1_tableau_ops(variant, branch, c, tq, {})
    _run_session_ops(s, ops)
    dead = [tq] if branch == "success" else [c, tq]
    s._retire(dead)
    choice = s._resolve_view()
    return choice or {"status": "ok"}


def _op_nfuse(s: Session, args: dict) -> dict:
    t = s._require_state()
    qubits = list(args["qubits"])
    branch = args.get("branch", "success")
    if len(set(qubits)) < 2:
        raise OpError("n-fusion needs at least two distinct qubits")
    for q in qubits:
        s._check_qubit(q)
    if branch == "failure":
        _run_session_ops(s, [("measure", "Z", q) for q in qubits])
    else:
        _run_session_ops(s, [("njoint", qubits)])
    s._retire(qubits)
    choice = s._resolve_view()
    return choice or {"status": "ok"}


def _op_lc(s: Session, args: dict) -> dict:
    t = s._require_state()
    q = args["qubit"]
    s._check_qubit(q)
    view = s.graph_view()
    if not isinstance(view, ClusterGraph):
        raise OpError("local complementation needs a cluster-form state")
    for u in sorted(view.neighbors(q)):
        t.apply_gate("PDG", u)
    t.apply_gate("H", q)
    t.apply_gate("P", q)
    t.apply_gate("H", q)
    choice = s._resolve_view()
    return choice or {"status": "ok"}


def _op_choice(s: Session, args: dict) -> dict:
    if s.pending is None:
        raise OpError("no choice is pending")
    options = s.pending["options"]
    chosen = args.get("choice")
    if chosen is None and "index" in args:
        idx = args["index"]
        if not 0 <= idx < len(options):
            raise OpError(f"choice index {idx} out of range")
        chosen = options[idx]
    chosen = list(chosen or [])
    if chosen not in [list(o) for o in options]:
        raise OpError(f"choice {chosen} is not among the offered options")
    t = s._require_state()
    for q in chosen:
        t.apply_gate("H", q)
    s.pending = None
    leftover = s._resolve_view()
    return leftover or {"status": "ok", "applied": chosen}


def _run_session_ops(s: Session, ops: list[tuple]) -> None:
    t = s._require_state()
    n = t.n
    for op in ops:
        kind = op[0]
        if kind == "gate":
            _, name, nodes = op
            t.apply_gate(name, tuple(nodes))
        elif kind == "H":
            t.apply_gate("H", op[1])
        elif kind == "measure":
            _, basis, node = op
            t.measure(node, basis)
        elif kind == "joint":
            _, fusion_type, c, tq = op
            m1, m2, sign = graphmod.fusion_measurement_ops(fusion_type, n, c, tq)
            t.joint_measure([m1, m2], forced_outcomes=[None, sign])
        elif kind == "njoint":
            t.joint_measure(graphmod.n_fusion_measurement_ops(n, list(op[1])))
        else:
            raise OpError(f"unknown internal op {op!r}")


OPS = {
    "new_cluster": _op_new_cluster,
    "apply": _op_apply,
    "measure": _op_measure,
    "fuse": _op_fuse,
    "type1_fuse": _op_type1_fuse,
    "nfuse": _op_nfuse,
    "lc": _op_lc,
    "choice": _op_choice,
}


def dispatch(session: Session, op: str, args: dict, record: bool = True) -> dict:
    """Run one operation, recording it for replay when it succeeds."""
    if op not in OPS:
        raise OpError(f"unknown op {op!r}; choose from {sorted(OPS)}")
    if session.pending is not None and op != "choice":
        raise OpError("a choice is pending; resolve it first")
    result = OPS[op](session, args)
    if record:
        session.history.append({"op": op, "args": args, "result": result})
    return result


def replay(seed: int, history: list[dict], session_id: str = "replay") -> Session:
    """Rebuild a session bit-exactly from its seed and history."""
    s = Session(id=session_id, seed=seed)
    for entry in history:
        dispatch(s, entry["op"], entry["args"], record=True)
    return s


def export_session(s: Session, fmt: str) -> str:
    view = s.graph_view()
    if fmt == "json":
        if isinstance(view, ClusterGraph):
            return view.to_json()
        if view is None:
            return ClusterGraph().to_json()
        raise OpError("state is not in cluster form; resolve the pending choice")
    if fmt == "dot":
        if isinstance(view, ClusterGraph):
            return view.to_dot()
        if view is None:
            return ClusterGraph().to_dot()
        raise OpError("state is not in cluster form; resolve the pending choice")
    if fmt == "tableau":
        if s.tableau is None:
            raise OpError("no state yet")
        return s.tableau.serialize()
    raise OpError(f"unknown export format {fmt!r}")
