"""Command-line front end.

Session commands persist their seed and operation history in a small
state file and rebuild the tableau by deterministic replay, so a
pipeline of invocations behaves like one interactive session. Pending
Hadamard choices are resolved with the first (deterministic) option and
a warning when running non-interactively.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import optics, session as sess, verify
from .session import OpError, Session, dispatch, export_session, replay

DEFAULT_STATE = ".stabsim-session.json"
_BUILDERS = {
    "type1": optics.build_type1,
    "type1_x": optics.build_type1_x,
    "type1_cz": optics.build_type1_cz,
    "type1_xx": optics.build_type1_xx,
    "type2": optics.build_type2,
    "type2_flip": optics.build_type2_flip,
    "ghz3": lambda: optics.build_ghz_fusion(3),
    "ghz4": lambda: optics.build_ghz_fusion(4),
    "ghz5": lambda: optics.build_ghz_fusion(5),
}


def _default_seed() -> int:
    env = os.environ.get("STABSIM_SEED")
    return int(env) if env else 0


def _load(state_path: str) -> Session:
    if os.path.exists(state_path):
        with open(state_path) as fh:
            data = json.load(fh)
        return replay(data["seed"], data["history"], session_id="cli")
    return Session(id="cli", seed=_default_seed())


def _save(state_path: str, s: Session) -> None:
    with open(state_path, "w") as fh:
        json.dump({"seed": s.seed, "history": s.history}, fh)


def _emit(as_json: bool, result: dict, s: Session) -> None:
    if as_json:
        click.echo(json.dumps({"result": result, "snapshot": s.snapshot()}))
        return
    status = result.get("status", "ok")
    if "outcome" in result:
        kind = "deterministic" if result.get("deterministic") else "random"
        click.echo(f"outcome {result['outcome']:+d} ({kind})")
    if status == "needs_choice":
        click.echo(f"choice applied by default: {result.get('applied')}")
    view = s.graph_view()
    if view is not None and hasattr(view, "to_json"):
        click.echo(export_session(s, "json"))


def _run(state_path: str, as_json: bool, op: str, args: dict) -> None:
    s = _load(state_path)
    try:
        result = dispatch(s, op, args)
        if result.get("status") == "needs_choice":
            # non-interactive default: first option, with a warning
            choice = result["choices"][0]
            click.echo(
                f"warning: unresolved choice; taking default {choice}", err=True
            )
            result = dispatch(s, "choice", {"choice": choice})
            result["status"] = "needs_choice"
            result["applied"] = choice
    except OpError as err:
        raise click.ClickException(str(err)) from None
    _save(state_path, s)
    _emit(as_json, result, s)


def _parse_edges(text: str) -> list[list[int]]:
    edges = []
    if text:
        for part in text.split(","):
            u, v = part.split("-")
            edges.append([int(u), int(v)])
    return edges


def _parse_qubits(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


@click.group()
@click.option("--state", default=DEFAULT_STATE, show_default=True, help="Session state file.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, state, as_json):
    """Stabilizer / cluster-state engine."""
    ctx.ensure_object(dict)
    ctx.obj["state"] = state
    ctx.obj["json"] = as_json


@main.command("new-cluster")
@click.option("--edges", default="", help="Edge list like 1-2,2-3.")
@click.option("--nodes", type=int, default=None, help="Node count (defaults to max edge id).")
@click.option("--seed", type=int, default=None, help="Session RNG seed.")
@click.pass_context
def new_cluster(ctx, edges, nodes, seed):
    """Create a cluster state from an edge list."""
    s = Session(id="cli", seed=seed if seed is not None else _default_seed())
    args = {"edges": _parse_edges(edges)}
    if nodes is not None:
        args["n"] = nodes
    try:
        result = dispatch(s, "new_cluster", args)
    except OpError as err:
        raise click.ClickException(str(err)) from None
    _save(ctx.obj["state"], s)
    _emit(ctx.obj["json"], result, s)


@main.command("apply")
@click.option("--gate", required=True)
@click.option("--qubits", required=True, help="Comma-separated qubit list.")
@click.pass_context
def apply_cmd(ctx, gate, qubits):
    """Apply a Clifford gate."""
    _run(ctx.obj["state"], ctx.obj["json"], "apply", {"gate": gate, "qubits": _parse_qubits(qubits)})


@main.command("measure")
@click.option("--qubit", type=int, required=True)
@click.option("--basis", type=click.Choice(["X", "Y", "Z"], case_sensitive=False), default="Z")
@click.option("--outcome", type=click.Choice(["+1", "-1"]), default=None,
              help="Force (post-select) the outcome.")
@click.pass_context
def measure_cmd(ctx, qubit, basis, outcome):
    """Measure one qubit in a Pauli basis."""
    args = {"qubit": qubit, "basis": basis.upper()}
    if outcome is not None:
        args["outcome"] = int(outcome)
    _run(ctx.obj["state"], ctx.obj["json"], "measure", args)


@main.command("fuse")
@click.option("--type", "fusion_type", type=int, default=2, show_default=True)
@click.option("--control", type=int, required=True)
@click.option("--target", type=int, required=True)
@click.option("--branch", type=click.Choice(["success", "failure"]), default="success")
@click.pass_context
def fuse_cmd(ctx, fusion_type, control, target, branch):
    """Two-qubit fusion (rotated Bell measurement)."""
    _run(ctx.obj["state"], ctx.obj["json"], "fuse",
         {"type": fusion_type, "control": control, "target": target, "branch": branch})


@main.command("type1-fuse")
@click.option("--variant", type=int, default=1, show_default=True)
@click.option("--control", type=int, required=True)
@click.option("--target", type=int, required=True)
@click.option("--branch", type=click.Choice(["success", "failure"]), default="success")
@click.pass_context
def type1_fuse_cmd(ctx, variant, control, target, branch):
    """Type-I fusion (target consumed on success)."""
    _run(ctx.obj["state"], ctx.obj["json"], "type1_fuse",
         {"variant": variant, "control": control, "target": target, "branch": branch})


@main.command("nfuse")
@click.option("--qubits", required=True, help="Comma-separated fused qubits.")
@click.option("--branch", type=click.Choice(["success", "failure"]), default="success")
@click.pass_context
def nfuse_cmd(ctx, qubits, branch):
    """n-qubit GHZ fusion."""
    _run(ctx.obj["state"], ctx.obj["json"], "nfuse",
         {"qubits": _parse_qubits(qubits), "branch": branch})


@main.command("lc")
@click.option("--qubit", type=int, required=True)
@click.pass_context
def lc_cmd(ctx, qubit):
    """Local complementation at a qubit."""
    _run(ctx.obj["state"], ctx.obj["json"], "lc", {"qubit": qubit})


@main.command("to-graph")
@click.pass_context
def to_graph_cmd(ctx):
    """Print the current cluster graph (JSON)."""
    s = _load(ctx.obj["state"])
    try:
        click.echo(export_session(s, "json"))
    except OpError as err:
        raise click.ClickException(str(err)) from None


@main.command("export")
@click.option("--format", "fmt", type=click.Choice(["json", "dot", "tableau"]), default="json")
@click.pass_context
def export_cmd(ctx, fmt):
    """Export the state as graph JSON, DOT, or tableau text."""
    s = _load(ctx.obj["state"])
    try:
        click.echo(export_session(s, fmt), nl=fmt != "tableau")
    except OpError as err:
        raise click.ClickException(str(err)) from None


@main.command("undo")
@click.pass_context
def undo_cmd(ctx):
    """Undo the last operation (replay from the seed)."""
    s = _load(ctx.obj["state"])
    if not s.history:
        raise click.ClickException("nothing to undo")
    s = replay(s.seed, s.history[:-1], session_id="cli")
    _save(ctx.obj["state"], s)
    _emit(ctx.obj["json"], {"status": "ok"}, s)


@main.group("lo")
def lo_group():
    """Linear-optics tools."""


@lo_group.command("kraus")
@click.option("--builder", type=click.Choice(sorted(_BUILDERS)), required=True)
@click.pass_context
def lo_kraus_cmd(ctx, builder):
    """Print the Kraus report of a fusion circuit."""
    click.echo(optics.extract_kraus(_BUILDERS[builder]()).report_json())


@lo_group.command("prob")
@click.option("--builder", type=click.Choice(sorted(_BUILDERS)), required=True)
@click.pass_context
def lo_prob_cmd(ctx, builder):
    """Success probability on the all-|+> input."""
    circuit = _BUILDERS[builder]()
    n = circuit.layout.qubits
    state = optics.FockState.from_dense(circuit.layout, np.full(2**n, 2 ** (-n / 2)))
    click.echo(f"{optics.success_probability(circuit, state):.6f}")


@lo_group.command("compile")
@click.option("--ops", "ops_json", required=True,
              help='Circuit ops JSON, e.g. [["gate","X",[2]],["gate","CNOT",[1,2]],["measure_z",[2]]]')
@click.pass_context
def lo_compile_cmd(ctx, ops_json):
    """Compile a CNOT/CZ template circuit to a linear-optics circuit."""
    ops = []
    for entry in json.loads(ops_json):
        if entry[0] == "gate":
            ops.append(optics.gate(entry[1], *entry[2]))
        elif entry[0] == "measure_z":
            ops.append(optics.measure_z(entry[1][0]))
        else:
            raise click.ClickException(f"unknown op {entry[0]!r}")
    try:
        circuit = optics.compile_circuit_to_lo(ops)
    except optics.UnsupportedShapeError as err:
        raise click.ClickException(str(err)) from None
    click.echo(circuit.to_json())


@main.command("verify")
@click.option("--suite", type=click.Choice(sorted(verify.SUITES)), required=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--n", "n_max", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def verify_cmd(suite, trials, n_max, seed, as_json):
    """Run a randomized equivalence suite; exit 0 iff no failures."""
    report = verify.check_suite(suite, trials=trials, n_max=n_max, seed=seed)
    click.echo(report.to_json() if as_json else report.summary())
    if not report.ok:
        sys.exit(1)


@main.command("serve")
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve_cmd(port, host):
    """Run the HTTP session service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command("repl")
@click.pass_context
def repl_cmd(ctx):
    """Interactive loop: one CLI-style command per line, 'quit' to exit."""
    s = _load(ctx.obj["state"])
    click.echo("stabsim repl; ops: " + ", ".join(sorted(sess.OPS)) + "; quit to exit")
    while True:
        try:
            line = input("stabsim> ").strip()
        except EOFError:
            break
        if line in ("quit", "exit", ""):
            if line:
                break
            continue
        try:
            parts = line.split(None, 1)
            op = parts[0].replace("-", "_")
            args = json.loads(parts[1]) if len(parts) > 1 else {}
            result = dispatch(s, op, args)
            click.echo(json.dumps(result))
            if result.get("status") == "needs_choice":
                click.echo("resolve with: choice {\"choice\": [...]}")
        except (OpError, ValueError) as err:
            click.echo(f"error: {err}", err=True)
    _save(ctx.obj["state"], s)


if __name__ == "__main__":
    main()
