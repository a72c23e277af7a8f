import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cusptree.cusp import build_cusped_space
from cusptree.errors import DomainError
from cusptree.groups import GroupModel, PeripheralSpec, cayley_ball, coset_pieces
from cusptree.metric_graph import MetricGraph, distance_matrix
from cusptree.sphere import DisconnectedSphereWarning, boundary_pipeline, sphere_graph, sweep
from strategies import connected_graphs

FREE = GroupModel("free", rank=2)


def wheel_of_arcs(k=6):
    """Hub with length-2 spokes to ``k`` rim points, consecutive rims joined through a midpoint."""
    edges, rim = [], []
    nxt = 1
    for _ in range(k):
        mid, tip = nxt, nxt + 1
        edges += [(0, mid), (mid, tip)]
        rim.append(tip)
        nxt += 2
    for i in range(k):
        edges += [(rim[i], nxt), (nxt, rim[(i + 1) % k])]
        nxt += 1
    return MetricGraph.from_edges(nxt, edges), rim


def test_free_ball_sphere_is_four_triangles():
    ball = cayley_ball(FREE, 2)
    sg = sphere_graph(ball.graph, 0, 2, 1)
    assert len(sg.vertices) == 12 and len(sg.graph.edges) == 12
    with pytest.warns(DisconnectedSphereWarning):
        res = boundary_pipeline(ball.graph, 0, 2, 1)
    assert len(res.components) == 4
    for t in res.trees:
        assert [v.type for v in t.vertices] == ["rigid"] and len(t.vertices[0].set) == 3


def test_large_threshold_gives_complete_graph():
    sg = sphere_graph(cayley_ball(FREE, 2).graph, 0, 2, 4)
    assert len(sg.graph.edges) == 12 * 11 // 2


def test_radius_zero_and_empty_sphere():
    g = cayley_ball(FREE, 1).graph
    with pytest.raises(DomainError):
        sphere_graph(g, 0, 0, 1)
    with pytest.raises(DomainError):
        sphere_graph(g, 0, 5, 1)


def test_cycle_like_sphere_is_one_necklace():
    g, rim = wheel_of_arcs()
    res = boundary_pipeline(g, 0, 2, 1)
    assert res.sphere.vertices == tuple(rim)
    assert len(res.trees) == 1
    assert [v.type for v in res.trees[0].vertices] == ["necklace"]


def test_sphere_vertices_are_at_distance_r():
    ball = cayley_ball(GroupModel("free_abelian", rank=2), 3)
    d = distance_matrix(ball.graph)
    for R in (1, 2, 3):
        sg = sphere_graph(ball.graph, 0, R, 1)
        assert all(d[0, v] == R for v in sg.vertices)
        assert sg.to_dict()["diagnostic"] is True


@given(connected_graphs(min_n=4, max_n=12), st.integers(1, 3))
def test_edges_monotone_in_threshold(g, R):
    d = distance_matrix(g)
    if not (d[0] == R).any():
        return
    edges = [set(sphere_graph(g, 0, R, s, d).graph.edges) for s in range(0, 5)]
    for a, b in zip(edges, edges[1:]):
        assert a <= b


def test_gromov_product_rule():
    ball = cayley_ball(FREE, 3)
    d = distance_matrix(ball.graph)
    R, s = 3, 1
    sg = sphere_graph(ball.graph, 0, R, s, d)
    verts = sg.vertices
    want = {(i, j) for i in range(len(verts)) for j in range(i + 1, len(verts))
            if (d[0, verts[i]] + d[0, verts[j]] - d[verts[i], verts[j]]) / 2 >= R - s}
    assert set(sg.graph.edges) == want


def test_cusped_sphere_tags_horoballs_and_is_deterministic():
    model = GroupModel("free_abelian", rank=2, peripherals=(PeripheralSpec("A", ("a",)),))
    ball = cayley_ball(model, 3)
    space = build_cusped_space(ball, coset_pieces(ball, model, "A"), 2)
    first = [r.to_json() for r in sweep(space, 0, [2, 3], [1, 2])]
    second = [r.to_json() for r in sweep(space, 0, [2, 3], [1, 2])]
    assert first == second and len(first) == 4
    sg = sphere_graph(space, 0, 3, 1)
    assert any(h is not None for h in sg.horoball)


def test_default_threshold_is_doubled_delta():
    g, _ = wheel_of_arcs()
    from cusptree.hyperbolicity import four_point_delta

    assert sphere_graph(g, 0, 2).threshold == four_point_delta(distance_matrix(g)).delta_doubled


def test_sweep_skips_empty_spheres():
    g = cayley_ball(FREE, 2).graph
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = sweep(g, 0, [1, 2, 7], [1])
    assert [r.sphere.radius for r in out] == [1, 2]
