import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusptree.cusp import build_coned_space, build_cusped_space, build_horoball, default_depth, truncation_safe
from cusptree.errors import InputError
from cusptree.groups import GroupModel, PeripheralSpec, cayley_ball, coset_pieces, left_translate
from cusptree.metric_graph import cycle_graph, distance_matrix, path_graph
from cusptree.qi import (
    CosetCorrespondence,
    check_cusped_bound,
    cone_extension_check,
    correspondence_by_coset,
    cusped_lambda,
    extend_to_cusped,
    extend_to_horoball,
    fit_constants,
    horoball_constant,
    horoball_extension_constant,
    identity_map,
    image_safe_mask,
    measure_density,
    measure_qi,
    minimal_additive,
    rotation,
    shift_clamped,
)
from qi_generators import generate

Z2A = GroupModel("free_abelian", rank=2, peripherals=(PeripheralSpec("A", ("a",)),))
COMM = (PeripheralSpec("P", ("aba-b-",)),)


def brute_additive(f, dX, dY, k):
    best = Fraction(0)
    for x, y in itertools.combinations(sorted(f), 2):
        a, b = int(dX[x, y]), int(dY[f[x], f[y]])
        best = max(best, b - k * a, Fraction(a) / k - b)
    return best


def test_identity_is_exact():
    d = distance_matrix(cycle_graph(7))
    assert minimal_additive(identity_map(7), d, d, 1) == 0


def test_exact_scaling():
    f = {i: 2 * i for i in range(5)}
    assert minimal_additive(f, distance_matrix(path_graph(5)), distance_matrix(path_graph(9)), 2) == 0


def test_random_map_on_c8_matches_pairwise_scan():
    rng = random.Random(8)
    d = distance_matrix(cycle_graph(8))
    f = {v: rng.randrange(8) for v in range(8)}
    assert minimal_additive(f, d, d, 1) == brute_additive(f, d, d, Fraction(1))


@given(st.lists(st.integers(0, 9), min_size=10, max_size=10), st.fractions(1, 5))
def test_additive_matches_brute_force(values, k):
    d = distance_matrix(cycle_graph(10))
    f = dict(enumerate(values))
    assert minimal_additive(f, d, d, k) == brute_additive(f, d, d, k)


@given(st.lists(st.integers(0, 11), min_size=12, max_size=12), st.fractions(1, 4), st.fractions(0, 3))
def test_additive_monotone_in_k(values, k, extra):
    d = distance_matrix(path_graph(12))
    f = dict(enumerate(values))
    assert minimal_additive(f, d, d, k + extra) <= minimal_additive(f, d, d, k)


def test_k_below_one_rejected():
    d = distance_matrix(path_graph(3))
    with pytest.raises(InputError):
        minimal_additive(identity_map(3), d, d, Fraction(1, 2))


def test_fit_constants_are_valid():
    rng = random.Random(3)
    d = distance_matrix(cycle_graph(9))
    f = {v: rng.randrange(9) for v in range(9)}
    k, c = fit_constants(f, d, d)
    assert k >= 1 and c == brute_additive(f, d, d, k)


def test_density():
    d = distance_matrix(cycle_graph(8))
    assert measure_density(identity_map(8), d) == 0
    assert measure_density({i: 2 * i for i in range(4)}, d) == 1
    with pytest.raises(InputError):
        measure_density({}, d)


def test_density_of_horoball_extension():
    hT = build_horoball(path_graph(5), 3)
    hS = build_horoball(path_graph(9), 3)
    qh = extend_to_horoball({i: 2 * i for i in range(5)}, hT, hS)
    dS = distance_matrix(hS.graph)
    img = set(qh.values())
    brute = max(min(dS[v, w] for w in img) for v in range(hS.graph.n))
    assert measure_density(qh, dS) == brute


def test_extend_identity_and_depth():
    h = build_horoball(cycle_graph(8), 3)
    qh = extend_to_horoball(identity_map(8), h, h)
    assert qh == identity_map(h.graph.n)
    hr = extend_to_horoball(rotation(8, 3), h, h)
    assert all(h.depth[v] == h.depth[w] for v, w in hr.items())


def test_rotation_extends_to_automorphism():
    h = build_horoball(cycle_graph(8), 3)
    qh = extend_to_horoball(rotation(8, 3), h, h)
    assert all(h.graph.has_edge(qh[u], qh[v]) for u, v in h.graph.edges)
    d = distance_matrix(h.graph)
    r = measure_qi(qh, d, d, k=1)
    assert (r.k, r.c, r.density) == (1, 0, 0)


def test_shift_clamped_on_p17():
    h = build_horoball(path_graph(17), default_depth([16]))
    C, mask = horoball_extension_constant(shift_clamped(17), h, h)
    assert mask.any()
    assert C <= horoball_constant(1, 1) == 5


def test_depth_mismatch():
    with pytest.raises(InputError):
        extend_to_horoball(identity_map(4), build_horoball(path_graph(4), 2), build_horoball(path_graph(4), 3))


def test_horoball_constant_exact():
    assert horoball_constant(1, 0) == 3
    assert horoball_constant(1, 1) == 5
    assert horoball_constant(Fraction(3, 2), 0) == 5  # 2 log2 1.5 = 1.17
    assert horoball_constant(4, 0) == 7


def test_generated_qis_respect_horoball_bound():
    rng = random.Random(99)
    for _ in range(20):
        _, T, S, q = generate(rng, max_n=24)
        dT, dS = distance_matrix(T), distance_matrix(S)
        k, c = fit_constants(q, dT, dS)
        depth = default_depth([dT.max(), dS.max()])
        C, _ = horoball_extension_constant(q, build_horoball(T, depth), build_horoball(S, depth))
        assert C <= horoball_constant(k, c)


def _z2_spaces(radius=4, depth=3):
    b = cayley_ball(Z2A, radius)
    return b, build_cusped_space(b, coset_pieces(b, Z2A, "A"), depth)


def test_identity_extension_is_identity():
    b, x = _z2_spaces(3)
    ext = extend_to_cusped(identity_map(b.n), CosetCorrespondence.identity(len(x.pieces)), x, x)
    assert ext.Q == identity_map(x.graph.n) and ext.offset == 0


def test_translation_extension_shifts_horoballs():
    bX, bY = cayley_ball(Z2A, 2), cayley_ball(Z2A, 3)
    X = build_cusped_space(bX, coset_pieces(bX, Z2A, "A"), 3)
    Y = build_cusped_space(bY, coset_pieces(bY, Z2A, "A"), 3)
    shift = Z2A.evaluate("b")
    q = {v: bY.index[Z2A.multiply(shift, x)] for v, x in enumerate(bX.elements)}
    corr = correspondence_by_coset(X, Y, q)
    ext = extend_to_cusped(q, corr, X, Y)
    for i, j in corr.pairs.items():
        yx = bX.elements[X.pieces[i].rep][1]
        yy = bY.elements[Y.pieces[j].rep][1]
        assert yy == yx + 1
    assert all(ext.Q[v] == q[v] for v in range(bX.n))
    for v, w in ext.Q.items():
        assert X.depth[v] == Y.depth[w]


def test_partial_translation_keeps_k_one():
    b = cayley_ball(Z2A, 3)
    X = build_cusped_space(b, coset_pieces(b, Z2A, "A"), 3)
    t = left_translate(b, Z2A, "b")
    d0 = distance_matrix(b.graph)
    assert fit_constants(t, d0, d0) == (1, 0)
    # extend over horoballs on the common domain: member a of piece i -> its translate
    where = {v: (i, a) for i, p in enumerate(X.pieces) for a, v in enumerate(p.members)}
    Q = dict(t)
    for lev in X.levels:
        for a, v in enumerate(lev[0]):
            if int(v) in t:
                j, bb = where[t[int(v)]]
                for n in range(1, X.max_depth + 1):
                    Q[int(lev[n, a])] = int(X.levels[j][n, bb])
    d, safe = truncation_safe(X.graph, X.depth)
    dom = sorted(Q)
    mask = safe[np.ix_(dom, dom)] & image_safe_mask(Q, safe)
    assert minimal_additive(Q, d, d, 1, mask) <= 1


def test_extension_restricts_to_horoball_maps():
    bX = cayley_ball(Z2A, 3)
    X = build_cusped_space(bX, coset_pieces(bX, Z2A, "A"), 2)
    corr = CosetCorrespondence.identity(len(X.pieces))
    ext = extend_to_cusped(identity_map(bX.n), corr, X, X)
    for i, lev in enumerate(X.levels):
        for n in range(1, 3):
            for a, v in enumerate(lev[n]):
                assert ext.Q[int(v)] == int(X.levels[i][n, ext.piece_maps[i][a]])


def test_missing_correspondence():
    b, x = _z2_spaces(2, 2)
    with pytest.raises(InputError):
        extend_to_cusped(identity_map(b.n), CosetCorrespondence({0: 0}), x, x)
    with pytest.raises(InputError):
        CosetCorrespondence({0: 1, 1: 1})


def test_generating_set_change_measured_and_bounded():
    mS = GroupModel("free", rank=2, peripherals=COMM)
    mT = GroupModel("free", rank=2, generators=("a", "b", "ab"), peripherals=COMM)
    bS, bT = cayley_ball(mS, 3), cayley_ball(mT, 3)
    X = build_cusped_space(bS, coset_pieces(bS, mS, "P"), 3)
    Y = build_cusped_space(bT, coset_pieces(bT, mT, "P"), 3)
    q = {v: bT.index[x] for v, x in enumerate(bS.elements)}
    corr = correspondence_by_coset(X, Y)
    ext = extend_to_cusped(q, corr, X, Y)
    lam, parts = cusped_lambda(q, corr, X, Y, ext)
    assert parts["cayley_k"] == 2 and lam >= 2
    assert check_cusped_bound(ext.Q, X, Y, lam).passed


def test_identity_bound_passes():
    b, x = _z2_spaces(3, 2)
    r = check_cusped_bound(identity_map(x.graph.n), x, x, 1)
    assert r.passed and r.worst_ratio <= 1 and r.pairs_checked > 0


def test_corrupted_map_fails_with_witness():
    b, x = _z2_spaces(4, 3)
    Q = identity_map(x.graph.n)
    far, near = b.vertex_of("bbbb"), b.vertex_of("b-b-b-b-")
    Q[far] = near
    r = check_cusped_bound(Q, x, x, 1)
    assert not r.passed and far in r.witness
    assert r.to_dict()["witness"] == list(r.witness)


def test_cone_checks():
    b = cayley_ball(Z2A, 4)
    c = build_coned_space(b, coset_pieces(b, Z2A, "A"))
    corr = CosetCorrespondence.identity(len(c.pieces))
    assert cone_extension_check(identity_map(b.n), corr, c, c).passed
    bad = identity_map(b.n)
    bad[b.vertex_of("bbbb")] = b.vertex_of("b-b-b-b-")
    r = cone_extension_check(bad, corr, c, c, 1)
    assert not r.passed and r.witness is not None


def test_cone_translation_passes():
    bX, bY = cayley_ball(Z2A, 2), cayley_ball(Z2A, 3)
    X = build_coned_space(bX, coset_pieces(bX, Z2A, "A"))
    Y = build_coned_space(bY, coset_pieces(bY, Z2A, "A"))
    shift = Z2A.evaluate("b")
    q = {v: bY.index[Z2A.multiply(shift, x)] for v, x in enumerate(bX.elements)}
    assert cone_extension_check(q, correspondence_by_coset(X, Y, q), X, Y).passed


def test_left_translate_feeds_partial_maps():
    b = cayley_ball(Z2A, 3)
    t = left_translate(b, Z2A, "b")
    d = distance_matrix(b.graph)
    assert minimal_additive(t, d, d, 1) >= 0
    assert np.isfinite(d).all()
