"""Graph rule-book: worked examples and tableau-oracle equivalence."""

import random

import pytest

from stabsim import verify
from stabsim.graph import (
    ClusterGraph,
    NotACluster,
    RuleOutcome,
    cnot_graph,
    extract_graph,
    fuse_graph,
    fuse_type1_graph,
    fusion_tableau_ops,
    fusion_type1_tableau_ops,
    local_complement,
    measure_x_graph,
    measure_y_graph,
    measure_z_graph,
    n_fusion_graph,
    rule_matches_pipeline,
    to_tableau,
)
from stabsim.pauli import parse
from stabsim.tableau import PreconditionError, Tableau, groups_equal


def G(nodes, edges):
    return ClusterGraph(nodes=nodes, edges=edges)


def edge_set(g):
    return {tuple(sorted(e)) for e in g.edges}


def line(n):
    return G(range(1, n + 1), [(i, i + 1) for i in range(1, n)])


def star(n, center=1):
    return G(range(1, n + 1), [(center, q) for q in range(1, n + 1) if q != center])


# -- to_tableau -------------------------------------------------------------


def test_to_tableau_star():
    t = to_tableau(star(4))
    assert [str(p) for p in t.stabilizers()] == ["XZZZ", "ZXII", "ZIXI", "ZIIX"]


def test_to_tableau_edgeless():
    t = to_tableau(G(range(1, 4), []))
    assert [str(p) for p in t.stabilizers()] == ["XII", "IXI", "IIX"]


def test_to_tableau_triangle_matches_cz_circuit():
    t = to_tableau(G(range(1, 4), [(1, 2), (1, 3), (2, 3)]))
    assert [str(p) for p in t.stabilizers()] == ["XZZ", "ZXZ", "ZZX"]
    circuit = Tableau.new_plus(3)
    for e in [(1, 2), (1, 3), (2, 3)]:
        circuit.apply_gate("CZ", e)
    assert groups_equal(t.stabilizers(), circuit.stabilizers(), 3, with_signs=True)


def test_to_tableau_self_loop_tag():
    g = G([1, 2], [(1, 2)])
    g.add_phase_tag(1, 1)
    t = to_tableau(g)
    assert groups_equal(
        t.stabilizers(), [parse("YZ"), parse("ZX")], 2, with_signs=False
    )


# -- extract_graph -----------------------------------------------------------


def test_extract_two_qubit_cluster():
    t = Tableau.deserialize("n=2\n+ZI\n+IZ\n+XZ\n+ZX")
    g = extract_graph(t)
    assert isinstance(g, ClusterGraph)
    assert edge_set(g) == {(1, 2)} and not g.phase_tags


def test_extract_bell_offers_both_hadamards():
    t = Tableau.new_computational(2).apply_gate("H", 1).apply_gate("CNOT", (1, 2))
    res = extract_graph(t)
    assert isinstance(res, NotACluster)
    assert set(res.hadamard_options) == {(1,), (2,)}


def test_extract_edgeless():
    g = extract_graph(Tableau.new_plus(4))
    assert isinstance(g, ClusterGraph)
    assert not g.edges and g.nodes == {1, 2, 3, 4}


def test_extract_roundtrip_random_graphs():
    rng = random.Random(31)
    for _ in range(50):
        n = rng.randint(1, 7)
        g = G(range(1, n + 1), verify.random_connected_graph(rng, n))
        back = extract_graph(to_tableau(g))
        assert isinstance(back, ClusterGraph)
        assert edge_set(back) == edge_set(g)
        assert back.ledger == []  # plain clusters need no sign fixups


def test_extract_self_loop_resolution():
    g = G([1, 2, 3], [(1, 2), (2, 3)])
    g.add_phase_tag(2, 1)
    back = extract_graph(to_tableau(g))
    assert isinstance(back, ClusterGraph)
    assert edge_set(back) == {(1, 2), (2, 3)}
    assert back.phase_tags.get(2) == 1


# -- single-qubit measurement rules ------------------------------------------


def components(g):
    return sorted(sorted(c) for c in g.components())


def test_measure_z_line_splits():
    out = measure_z_graph(line(5), 3)
    assert out.required_unitaries == []
    assert components(out.graph) == [[1, 2], [4, 5]]


def test_measure_z_isolated():
    g = G([1, 2], [])
    out = measure_z_graph(g, 1)
    assert out.graph.nodes == {2}


def test_measure_z_fig10_tree():
    g = G(range(1, 8), [(1, 2), (2, 3), (2, 4), (3, 4), (3, 5), (3, 6), (6, 7)])
    out = measure_z_graph(g, 3)
    assert components(out.graph) == [[1, 2, 4], [5], [6, 7]]


def test_measure_z_never_adds_edges():
    rng = random.Random(41)
    for _ in range(100):
        n = rng.randint(2, 8)
        g = G(range(1, n + 1), verify.random_connected_graph(rng, n))
        v = rng.randint(1, n)
        out = measure_z_graph(g, v)
        assert out.graph.edges <= g.edges


def test_measure_x_line_fig12c():
    out = measure_x_graph(line(5), 3, u=2)
    assert edge_set(out.graph) == {(1, 4), (2, 4), (4, 5)}
    assert out.required_unitaries == [{"op": "H", "target": 2}]


def test_measure_x_isolated_no_hadamard():
    g = G([1, 2], [])
    out = measure_x_graph(g, 1)
    assert out.graph.nodes == {2} and out.required_unitaries == []


def test_measure_x_fig13_tree():
    # the drawn figure omits the common-neighbor inversion (2,5),(2,6);
    # the four-step prose rule and the tableau both produce it
    g = G(range(1, 8), [(1, 2), (2, 3), (2, 4), (3, 4), (3, 5), (3, 6), (6, 7)])
    out = measure_x_graph(g, 3, u=4)
    assert edge_set(out.graph) == {
        (1, 2), (2, 4), (2, 5), (2, 6), (4, 5), (4, 6), (6, 7)
    }
    ok, msg = rule_matches_pipeline(g, out, [("measure", "X", 3), ("H", 4)])
    assert ok, msg


def test_measure_y_star_clique():
    out = measure_y_graph(star(5), 1)
    assert edge_set(out.graph) == {
        (2, 3), (2, 4), (2, 5), (3, 4), (3, 5), (4, 5)
    }
    assert out.required_unitaries == [
        {"op": "PDG", "target": u} for u in (2, 3, 4, 5)
    ]
    assert out.graph.self_loops == {2, 3, 4, 5}


def test_measure_y_isolated():
    out = measure_y_graph(G([1, 2], []), 1)
    assert out.graph.nodes == {2} and out.required_unitaries == []


def test_measure_y_fig19_parallel_edge_cancellation():
    g = G(range(1, 8), [(1, 2), (2, 3), (2, 4), (3, 4), (3, 5), (3, 6), (6, 7)])
    out = measure_y_graph(g, 3)
    want = {(1, 2), (6, 7), (2, 5), (2, 6), (4, 5), (4, 6), (5, 6)}
    assert edge_set(out.graph) == want  # (2,4) doubled and cancelled


# -- unitary rules ------------------------------------------------------------


def test_local_complement_fig9():
    g = G(range(1, 6), [(1, 2), (1, 3), (1, 4), (3, 4), (2, 5)])
    out = local_complement(g, 1)
    assert edge_set(out) == {(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (2, 5)}


def test_local_complement_involution_and_leaf():
    rng = random.Random(51)
    for _ in range(30):
        n = rng.randint(2, 7)
        g = G(range(1, n + 1), verify.random_connected_graph(rng, n))
        v = rng.randint(1, n)
        assert local_complement(local_complement(g, v), v) == g
    h = line(2)
    assert local_complement(h, 1) == h  # degree-1 node


def test_cnot_fig22():
    g = G(
        range(1, 11),
        [(i, i + 1) for i in range(1, 5)] + [(i, i + 1) for i in range(6, 10)],
    )
    out = cnot_graph(g, 3, 8)
    assert edge_set(out) - edge_set(g) == {(3, 7), (3, 9)}
    assert edge_set(g) <= edge_set(out)


def test_cnot_isolated_target_and_involution():
    g = G([1, 2, 3], [(1, 2)])
    assert cnot_graph(g, 1, 3) == g  # isolated target
    rng = random.Random(61)
    for _ in range(30):
        n = rng.randint(2, 7)
        h = G(range(1, n + 1), verify.random_connected_graph(rng, n))
        c, t = rng.sample(range(1, n + 1), 2)
        assert cnot_graph(cnot_graph(h, c, t), c, t) == h


def test_two_adjacent_x_fig21():
    from stabsim.graph import two_adjacent_x

    g = G(
        range(1, 7),
        [(1, 2), (1, 3), (1, 4), (3, 4), (2, 5), (2, 6), (3, 5)],
    )
    out = two_adjacent_x(g, 1, 2)
    assert edge_set(out.graph) == {(3, 4), (3, 6), (4, 5), (4, 6)}
    assert out.required_unitaries == []


def test_two_adjacent_x_lonely_edge():
    from stabsim.graph import two_adjacent_x

    g = G([1, 2, 3], [(1, 2)])
    out = two_adjacent_x(g, 1, 2)
    assert out.graph.nodes == {3} and not out.graph.edges


# -- fusions -------------------------------------------------------------------


def two_stars():
    return G(range(1, 7), [(1, 2), (1, 3), (4, 5), (4, 6)])


def test_fuse_type3_success_rule():
    out = fuse_graph(two_stars(), 2, 5, 3, "success")
    assert edge_set(out.graph) == {(1, 3), (1, 4), (4, 6)}
    assert out.required_unitaries == [] and out.branch == "success"


def test_fuse_type2_failure_deletes_both():
    out = fuse_graph(two_stars(), 2, 5, 2, "failure")
    assert out.graph.nodes == {1, 3, 4, 6}
    assert edge_set(out.graph) == {(1, 3), (4, 6)}


def test_fuse_type4_success_records_phase_tags():
    g = two_stars()
    out = fuse_graph(g, 2, 5, 4, "success")
    assert out.graph.phase_tags == {1: 1}
    assert {"op": "PDG", "target": 1} in out.required_unitaries


def test_fuse_same_component_falls_back_to_oracle():
    g = line(4)
    out = fuse_graph(g, 1, 4, 2, "failure")
    assert out.computed_by_oracle
    assert out.graph.nodes == {2, 3}
    assert edge_set(out.graph) == {(2, 3)}


def test_fuse_type1_variant1_success_attaches_neighbors():
    # neighbors of the target migrate to the control, target removed
    g = G(range(1, 8), [(1, 2), (2, 3), (5, 6), (6, 7)])
    out = fuse_type1_graph(g, 2, 6, 1, "success")
    assert out.graph.nodes == {1, 2, 3, 4, 5, 7} - {4} | {4}  # node 4 untouched
    assert edge_set(out.graph) == {(1, 2), (2, 3), (2, 5), (2, 7)}
    assert out.required_unitaries == []


def test_fuse_type1_variant1_failure():
    out = fuse_type1_graph(two_stars(), 2, 5, 1, "failure")
    assert out.graph.nodes == {1, 3, 4, 6}
    assert edge_set(out.graph) == {(1, 3), (4, 6)}


def test_fuse_type1_variant4_success_derived():
    out = fuse_type1_graph(two_stars(), 2, 5, 4, "success", {"u": 4})
    assert edge_set(out.graph) == {(1, 2), (1, 3), (1, 4), (1, 6)}
    assert out.required_unitaries == [{"op": "H", "target": 4}]
    ops = fusion_type1_tableau_ops(4, "success", 2, 5, out.choice_used)
    ok, msg = rule_matches_pipeline(two_stars(), out, ops)
    assert ok, msg


def test_n_fusion_reduces_to_type2_success():
    g = G(range(1, 5), [(1, 2), (3, 4)])
    a = n_fusion_graph(g, [2, 3], i=2, j=1)
    b = fuse_graph(g, 2, 3, 2, "success", {"v": 2, "u": 1})
    assert a.graph == b.graph
    assert edge_set(a.graph) == {(1, 4)}


def test_n_fusion_three_stars_derived():
    g = G(range(1, 10), [(1, 2), (1, 3), (4, 5), (4, 6), (7, 8), (7, 9)])
    out = n_fusion_graph(g, [2, 5, 8], i=2, j=1)
    assert edge_set(out.graph) == {
        (1, 4), (1, 7), (3, 4), (3, 7), (4, 6), (7, 9)
    }
    assert out.required_unitaries == [{"op": "H", "target": 1}]


def test_n_fusion_isolated_qubits():
    g = G(range(1, 5), [(3, 4)])
    out = n_fusion_graph(g, [1, 2], branch="success")
    assert out.graph.nodes == {3, 4} and edge_set(out.graph) == {(3, 4)}


def test_n_fusion_failure_deletes_all():
    g = G(range(1, 10), [(1, 2), (1, 3), (4, 5), (4, 6), (7, 8), (7, 9)])
    out = n_fusion_graph(g, [2, 5, 8], branch="failure")
    assert out.graph.nodes == {1, 3, 4, 6, 7, 9}


# -- serialization and misc ------------------------------------------------------


def test_graph_json_roundtrip():
    g = two_stars()
    g.add_phase_tag(3, 1)
    g.record("PDG", 3, reason="test")
    back = ClusterGraph.from_json(g.to_json())
    assert back == g and back.ledger == g.ledger


def test_graph_dot_export():
    dot = line(3).to_dot()
    assert dot.splitlines()[0] == "graph cluster {"
    assert "  1 -- 2;" in dot and "  2 -- 3;" in dot


def test_rule_preconditions():
    g = line(3)
    with pytest.raises(PreconditionError):
        measure_z_graph(g, 9)
    with pytest.raises(PreconditionError):
        measure_x_graph(g, 1, u=3)  # not a neighbor
    with pytest.raises(PreconditionError):
        fuse_graph(g, 1, 1, 2, "success")
    with pytest.raises(PreconditionError):
        fuse_graph(g, 1, 3, 7, "success")
    with pytest.raises(PreconditionError):
        fuse_graph(g, 1, 3, 2, "sideways")
    tagged = line(3)
    tagged.add_phase_tag(2, 1)
    with pytest.raises(PreconditionError):
        measure_x_graph(tagged, 2)


def test_parallel_edge_discipline():
    g = line(3)
    g.toggle_edge(1, 2)
    assert not g.has_edge(1, 2)
    with pytest.raises(PreconditionError):
        g.add_edge(2, 2)
