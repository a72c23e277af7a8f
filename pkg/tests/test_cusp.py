import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusptree.cusp import (
    build_coned_space,
    build_cusped_space,
    build_horoball,
    ceil_2log2,
    decompose_path,
    default_depth,
    fineness_profile,
    horoball_distance,
    space_from_dict,
    space_to_dict,
    truncation_safe,
    upper_bound_estimate,
)
from cusptree.errors import BudgetError, DomainError, InputError
from cusptree.groups import GroupModel, PeripheralSpec, cayley_ball, coset_pieces, cyclic_group
from cusptree.metric_graph import (
    MetricGraph,
    bfs_distances,
    connected_components,
    cycle_graph,
    distance_matrix,
    path_graph,
    random_tree,
)
from oracles import count_cycles_through, horoball_nx
from strategies import connected_graphs

Z2A = GroupModel("free_abelian", rank=2, peripherals=(PeripheralSpec("A", ("a",)),))
F2C = GroupModel("free", rank=2, peripherals=(PeripheralSpec("P", ("aba-b-",)),))


def test_ceil_2log2_exact():
    for d in range(1, 300):
        m = ceil_2log2(d)
        assert 2 ** m >= d * d and (m == 0 or 2 ** (m - 1) < d * d)


def test_p5_depth2_edges():
    h = build_horoball(path_graph(5), 2)
    assert h.graph.n == 15
    lvl1 = {(u - 5, v - 5) for u, v in h.graph.edges if 5 <= u < 10 and 5 <= v < 10}
    assert lvl1 == {(i, j) for i in range(5) for j in range(i + 1, 5) if j - i <= 2}
    lvl2 = {(u, v) for u, v in h.graph.edges if u >= 10 and v >= 10}
    assert len(lvl2) == 10


def test_single_vertex_is_a_ray():
    h = build_horoball(MetricGraph(1, ()), 3)
    assert h.graph.edges == ((0, 1), (1, 2), (2, 3))


def test_c8_level3_clique():
    h = build_horoball(cycle_graph(8), 3)
    top = [h.vertex(t, 3) for t in range(8)]
    assert all(h.graph.has_edge(u, v) for u, v in itertools.combinations(top, 2))


@given(connected_graphs(max_n=9), st.integers(0, 4))
def test_horoball_matches_networkx_oracle(base, depth):
    h = build_horoball(base, depth)
    H = horoball_nx(base.n, base.edges, depth)
    ours = {(h.coords(u), h.coords(v)) for u, v in h.graph.edges}
    theirs = {tuple(sorted(e)) for e in H.edges}
    assert {tuple(sorted(e)) for e in ours} == theirs


def test_p17_distance_and_estimate():
    h = build_horoball(path_graph(17), 4)
    assert horoball_distance(h, (0, 0), (16, 0)) == 8
    H = horoball_nx(17, path_graph(17).edges, 4)
    assert nx.shortest_path_length(H, (0, 0), (16, 0)) == 8
    assert upper_bound_estimate(16, 0, 0) == 11


def test_vertical_geodesic():
    h = build_horoball(cycle_graph(8), 4)
    for t in range(8):
        for n in range(5):
            assert horoball_distance(h, (t, 0), (t, n)) == n


def test_estimate_rejects_zero_distance():
    with pytest.raises(DomainError):
        upper_bound_estimate(0, 1, 1)


def test_horoball_bad_vertex():
    h = build_horoball(path_graph(3), 1)
    with pytest.raises(InputError):
        horoball_distance(h, (5, 0), (0, 0))


@pytest.mark.parametrize("base", [path_graph(17), cycle_graph(16)])
def test_estimate_dominates_on_safe_pairs(base):
    h = build_horoball(base, default_depth([16]))
    d, safe = truncation_safe(h.graph, h.depth)
    for u, v in zip(*np.nonzero(np.triu(safe, 1))):
        (t1, n1), (t2, n2) = h.coords(u), h.coords(v)
        if t1 != t2:
            assert d[u, v] <= upper_bound_estimate(int(h.base_distances[t1, t2]), n1, n2)


def test_estimate_dominates_on_random_tree():
    base = random_tree(16, np.random.default_rng(5))
    diam = distance_matrix(base).max()
    h = build_horoball(base, default_depth([diam]))
    d, safe = truncation_safe(h.graph, h.depth)
    for u, v in zip(*np.nonzero(np.triu(safe, 1))):
        (t1, n1), (t2, n2) = h.coords(u), h.coords(v)
        if t1 != t2:
            assert d[u, v] <= upper_bound_estimate(int(h.base_distances[t1, t2]), n1, n2)


def test_truncation_safe_definition():
    h = build_horoball(path_graph(9), 2)
    d, safe = truncation_safe(h.graph, h.depth)
    deepest = h.depth == 2
    assert not safe[deepest].any() and not safe[:, deepest].any()
    keep = np.nonzero(~deepest)[0]
    sub = MetricGraph.from_edges(len(keep), [(int(np.searchsorted(keep, u)), int(np.searchsorted(keep, v)))
                                            for u, v in h.graph.edges if u in keep and v in keep])
    ds = distance_matrix(sub)
    assert (safe[np.ix_(keep, keep)] == (d[np.ix_(keep, keep)] == ds)).all()


def test_flat_space_is_all_safe():
    g = cycle_graph(5)
    _, safe = truncation_safe(g, np.zeros(5, dtype=int))
    assert safe.all()


def test_cusped_z2_paths():
    b = cayley_ball(Z2A, 2)
    x = build_cusped_space(b, coset_pieces(b, Z2A, "A"), 2)
    assert sorted(len(p.members) for p in x.pieces) == [1, 1, 3, 3, 5]
    assert x.graph.n == 13 + 2 * 13
    assert (x.depth[:13] == 0).all() and (x.horoball_of[:13] == -1).all()
    assert (x.horoball_of[13:] >= 0).all()


def test_horoballs_only_meet_at_depth_zero():
    b = cayley_ball(Z2A, 3)
    x = build_cusped_space(b, coset_pieces(b, Z2A, "A"), 2)
    comps = connected_components(x.graph, removed=range(x.n_cayley))
    for comp in comps:
        assert len({int(x.horoball_of[v]) for v in comp}) == 1


def test_cusped_levels_match_standalone_horoballs():
    b = cayley_ball(Z2A, 3)
    x = build_cusped_space(b, coset_pieces(b, Z2A, "A"), 3)
    for i in range(len(x.pieces)):
        h = x.horoball(i)
        ids = x.horoball_ids(i)
        for u, v in h.graph.edges:
            assert x.graph.has_edge(int(ids[u]), int(ids[v]))


def test_commutator_identity_horoball_base():
    b = cayley_ball(F2C, 4)
    x = build_cusped_space(b, coset_pieces(b, F2C, "P"), 2)
    i = next(i for i, p in enumerate(x.pieces) if 0 in p.members)
    assert len(x.pieces[i].members) == 3
    assert x.piece_exact[i]
    assert x.piece_metrics[i].max() == 2


def test_finite_whole_group_single_horoball():
    z6 = cyclic_group(6)
    m = GroupModel("finite", table=z6.table, names=z6.names, generators=("g",),
                   peripherals=(PeripheralSpec("all", ("g",)),))
    b = cayley_ball(m, 6)
    x = build_cusped_space(b, coset_pieces(b, m, "all"), 2)
    assert len(x.pieces) == 1 and x.graph.n == 18


def test_default_depth():
    assert default_depth([1]) == 2
    assert default_depth([16]) == 6
    assert default_depth([]) == 2


def test_coned_space():
    b = cayley_ball(Z2A, 2)
    c = build_coned_space(b, coset_pieces(b, Z2A, "A"))
    assert c.graph.n == 18 and len(c.cones) == 5
    for p, cone in zip(c.pieces, c.cones):
        assert set(c.graph.adjacency[cone]) == set(p.members)
    d = distance_matrix(c.graph)
    for p in c.pieces:
        assert all(d[u, v] <= 2 for u, v in itertools.combinations(p.members, 2))
    assert build_coned_space(b, []).graph == b.graph


def test_decompose_flat_and_vertical():
    b = cayley_ball(Z2A, 2)
    x = build_cusped_space(b, coset_pieces(b, Z2A, "A"), 2)
    segs = decompose_path(x.graph, x.depth, [0, 1])
    assert [s.kind for s in segs] == ["I1"]
    ray = [int(x.levels[0][n, 0]) for n in range(3)]
    segs = decompose_path(x.graph, x.depth, ray)
    assert [(s.kind, s.length) for s in segs] == [("I1", 0), ("I2", 2)]


def test_decompose_geodesic_through_horoball():
    b = cayley_ball(Z2A, 4)
    x = build_cusped_space(b, coset_pieces(b, Z2A, "A"))
    u, v = b.vertex_of("a-a-a-a-"), b.vertex_of("aaaa")
    G = nx.Graph(list(x.graph.edges))
    path = nx.shortest_path(G, u, v)
    assert len(path) - 1 == bfs_distances(x.graph, u)[v] == 6
    segs = decompose_path(x.graph, x.depth, path)
    assert [s.kind for s in segs] == ["I1", "I2", "I1"]
    assert sum(s.length for s in segs) == len(path) - 1
    for s in segs:
        if s.kind == "I1":
            assert all(x.depth[path[i]] == 0 for i in range(s.start, s.stop + 1))


def test_decompose_rejects_non_path():
    g = path_graph(4)
    with pytest.raises(InputError):
        decompose_path(g, np.zeros(4, dtype=int), [0, 2])


def test_fineness_examples():
    cone = MetricGraph.from_edges(7, list(cycle_graph(6).edges) + [(i, 6) for i in range(6)])
    assert fineness_profile(cone, (0, 6), 3) == 2
    assert fineness_profile(path_graph(5), (1, 2), 8) == 0
    assert fineness_profile(cycle_graph(6), (0, 1), 6) == 1
    with pytest.raises(BudgetError):
        fineness_profile(cycle_graph(6), (0, 1), 13)


@given(connected_graphs(min_n=3, max_n=8), st.integers(3, 8), st.data())
def test_fineness_matches_cycle_enumeration(g, n, data):
    if not g.edges:
        return
    e = data.draw(st.sampled_from(g.edges))
    assert fineness_profile(g, e, n) == count_cycles_through(g.n, g.edges, e, n)


def test_space_json_round_trip():
    b = cayley_ball(F2C, 2)
    x = build_cusped_space(b, coset_pieces(b, F2C, "P"), 2)
    y = space_from_dict(space_to_dict(x))
    assert y.graph == x.graph and (y.depth == x.depth).all() and y.pieces == x.pieces
