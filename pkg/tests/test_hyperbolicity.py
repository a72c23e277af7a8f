import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusptree.errors import DomainError, InputError
from cusptree.hyperbolicity import delta_growth_scan, four_point_delta, quadruple_gap, scan_to_csv
from cusptree.metric_graph import (
    MetricGraph,
    complete_graph,
    cycle_graph,
    distance_matrix,
    random_tree,
)
from oracles import brute_delta_doubled, floyd_warshall
from strategies import connected_graphs


def test_tree_is_zero():
    g = random_tree(12, np.random.default_rng(1))
    assert four_point_delta(distance_matrix(g)).delta_doubled == 0


def test_c4():
    r = four_point_delta(distance_matrix(cycle_graph(4)))
    assert r.delta == 1 and r.delta_doubled == 2


def test_complete_graph_zero():
    assert four_point_delta(distance_matrix(complete_graph(6))).delta == 0


def test_disconnected_rejected():
    with pytest.raises(DomainError):
        four_point_delta(distance_matrix(MetricGraph(4, ((0, 1), (2, 3)))))


@given(connected_graphs(min_n=1, max_n=8))
def test_matches_brute_force_and_witness_attains(g):
    d = distance_matrix(g)
    r = four_point_delta(d)
    assert r.delta_doubled == brute_delta_doubled(floyd_warshall(g.n, g.edges))
    if g.n >= 4:
        assert quadruple_gap(d, *r.witness) == r.delta_doubled


@given(connected_graphs(min_n=4, max_n=10), st.randoms(use_true_random=False))
def test_permutation_invariant(g, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    a = four_point_delta(distance_matrix(g)).delta_doubled
    assert four_point_delta(distance_matrix(g.relabel(perm))).delta_doubled == a


@given(connected_graphs(min_n=4, max_n=20), st.integers(0, 2**32 - 1))
def test_sampled_below_exhaustive(g, seed):
    d = distance_matrix(g)
    s = four_point_delta(d, "sampled", seed=seed, count=2000)
    assert s.delta_doubled <= four_point_delta(d).delta_doubled
    assert quadruple_gap(d, *s.witness) == s.delta_doubled


def test_sampled_needs_seed_and_is_reproducible():
    d = distance_matrix(cycle_graph(12))
    with pytest.raises(InputError):
        four_point_delta(d, "sampled")
    a = four_point_delta(d, "sampled", seed=4, count=500)
    b = four_point_delta(d, "sampled", seed=4, count=500)
    assert a == b and a.to_dict()["seed"] == 4


def test_threads_agree_with_serial():
    g = MetricGraph.from_edges(30, [(i, (i + 1) % 30) for i in range(30)] + [(0, 15), (7, 22)])
    d = distance_matrix(g)
    assert four_point_delta(d, threads=1) == four_point_delta(d, threads=4)


def test_growth_scans():
    free = delta_growth_scan("free_ball", [1, 2, 3])
    assert [r.delta_doubled for _, r in free] == [0, 0, 0]
    flat = delta_growth_scan("free_abelian_ball", [2, 4])
    assert flat[0][1].delta_doubled < flat[1][1].delta_doubled
    cyc = delta_growth_scan("horoball_cycle", [8, 16])
    assert abs(cyc[0][1].delta_doubled - cyc[1][1].delta_doubled) <= 2


def test_scan_csv_and_unknown_recipe():
    text = scan_to_csv(delta_growth_scan("free_ball", [1]))
    assert text.splitlines()[0] == "param,delta_doubled,witness,mode,seed"
    with pytest.raises(InputError):
        delta_growth_scan("nope", [1])
