"""Quasi-isometry measurements and the horoball / cusped-space extensions.

Vertex maps are plain ``dict[int, int]``.  All constants are exact
``Fraction`` values: distances are integers, so every inequality can be
tested on integer numerators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .cusp import ConedSpace, CuspedSpace, Horoball, truncation_safe
from .errors import DomainError, InputError
from .metric_graph import distance_matrix, distance_rows

VertexMap = Mapping[int, int]


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**6)


def _pair_arrays(f: VertexMap, dX: np.ndarray, dY: np.ndarray, mask: np.ndarray | None):
    """Upper-triangle distance pairs ``(dx, dy)`` over the map's domain."""
    dom = np.fromiter(sorted(f), dtype=np.int64)
    img = np.fromiter((f[v] for v in sorted(f)), dtype=np.int64)
    sx = dX[np.ix_(dom, dom)]
    sy = dY[np.ix_(img, img)]
    keep = np.triu(np.ones_like(sx, dtype=bool), k=1)
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    sx, sy = sx[keep], sy[keep]
    if not (np.isfinite(sx).all() and np.isfinite(sy).all()):
        raise DomainError("map measured across disconnected components")
    return sx.astype(np.int64), sy.astype(np.int64)


def _additive(sx: np.ndarray, sy: np.ndarray, k: Fraction) -> Fraction:
    if sx.size == 0:
        return Fraction(0)
    p, q = k.numerator, k.denominator
    top = int(max(sx.max(), sy.max())) + 1
    if max(p, q) * top < 2**62:
        up = int((q * sy - p * sx).max())
        down = int((q * sx - p * sy).max())
    else:
        # exact Python integers over the distinct distance pairs
        combos = np.unique(np.stack([sx, sy]), axis=1).T.tolist()
        up = max(q * b - p * a for a, b in combos)
        down = max(q * a - p * b for a, b in combos)
    return max(Fraction(up, q), Fraction(down, p), Fraction(0))


def minimal_additive(f: VertexMap, dX: np.ndarray, dY: np.ndarray, k, mask: np.ndarray | None = None) -> Fraction:
    """Least ``c >= 0`` with ``d_X/k - c <= d_Y(f x, f y) <= k d_X + c`` on all pairs.

    ``mask`` (indexed by the sorted domain) restricts the pairs considered.
    """
    k = _as_fraction(k)
    if k < 1:
        raise InputError("multiplicative constant must be at least 1")
    return _additive(*_pair_arrays(f, dX, dY, mask), k)


def measure_density(f: VertexMap, dY: np.ndarray) -> int:
    """Largest distance from a codomain vertex to the image of ``f``."""
    img = sorted(set(f.values()))
    if not img:
        raise InputError("empty image")
    near = np.asarray(dY)[img].min(axis=0)
    if not np.isfinite(near).all():
        raise DomainError("some codomain vertex is unreachable from the image")
    return int(near.max())


def _fit(sx: np.ndarray, sy: np.ndarray) -> tuple[Fraction, Fraction]:
    combos = set(zip(sx.tolist(), sy.tolist()))
    if not combos:
        return Fraction(1), Fraction(0)
    ux = np.array([a for a, _ in combos], dtype=np.int64)
    uy = np.array([b for _, b in combos], dtype=np.int64)
    cands = {Fraction(1)}
    for a, b in combos:
        if a and b:
            cands.add(max(Fraction(1), Fraction(b, a)))
            cands.add(max(Fraction(1), Fraction(a, b)))
    best = None
    for k in sorted(cands):
        c = _additive(ux, uy, k)
        if best is None or k + c < best[0] + best[1]:
            best = (k, c)
    return best


def fit_constants(f: VertexMap, dX: np.ndarray, dY: np.ndarray, mask: np.ndarray | None = None) -> tuple[Fraction, Fraction]:
    """A pair ``(k, c)`` valid for ``f`` with ``k + c`` minimal among ratio breakpoints.

    Candidates for ``k`` are 1 and every distance ratio ``d_Y/d_X`` or
    ``d_X/d_Y`` that is at least 1; ``c`` is exact for the chosen ``k``.
    """
    return _fit(*_pair_arrays(f, dX, dY, mask))


def horoball_constant(k, c) -> int:
    """``ceil(2 log2(k + c)) + 3`` computed exactly."""
    s = _as_fraction(k) + _as_fraction(c)
    if s < 1:
        raise InputError("k + c must be at least 1")
    p, q = s.numerator, s.denominator
    m = 0
    while (q * q) << m < p * p:
        m += 1
    return m + 3


@dataclass(frozen=True)
class BoundReport:
    passed: bool
    lam: Fraction
    worst_ratio: float
    witness: tuple[int, int] | None
    pairs_checked: int

    def to_dict(self) -> dict:
        return {"passed": self.passed, "lambda": [self.lam.numerator, self.lam.denominator],
                "worst_ratio": self.worst_ratio, "pairs_checked": self.pairs_checked,
                "witness": list(self.witness) if self.witness else None}


@dataclass(frozen=True)
class QIReport:
    k: Fraction
    c: Fraction
    density: int
    domain_size: int
    codomain_size: int
    bound_checked: BoundReport | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"k": [self.k.numerator, self.k.denominator], "c": [self.c.numerator, self.c.denominator],
               "density": self.density, "domain_size": self.domain_size, "codomain_size": self.codomain_size,
               "bound_checked": self.bound_checked.to_dict() if self.bound_checked else None}
        out.update(self.extra)
        return out


def measure_qi(f: VertexMap, dX: np.ndarray, dY: np.ndarray, k=None, mask: np.ndarray | None = None) -> QIReport:
    """Constants of ``f``: the given ``k`` (or a fitted one), its minimal ``c`` and the density."""
    if k is None:
        k, c = fit_constants(f, dX, dY, mask)
    else:
        k = _as_fraction(k)
        c = minimal_additive(f, dX, dY, k, mask)
    return QIReport(k, c, measure_density(f, dY), len(f), dY.shape[0])


# -- horoballs -------------------------------------------------------------------------


def extend_to_horoball(q: VertexMap, hT: Horoball, hS: Horoball) -> dict[int, int]:
    """Level-preserving extension ``(t, n) -> (q(t), n)``."""
    if hT.max_depth != hS.max_depth:
        raise InputError(f"horoball depths differ ({hT.max_depth} vs {hS.max_depth})")
    missing = [t for t in range(hT.width) if t not in q]
    if missing:
        raise InputError(f"base map undefined at {missing[:5]}")
    return {hT.vertex(t, n): hS.vertex(q[t], n) for n in range(hT.max_depth + 1) for t in range(hT.width)}


def horoball_safe_mask(h: Horoball, d: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Distance matrix and truncation-safety mask of a horoball."""
    return truncation_safe(h.graph, h.depth, full=distance_matrix(h.graph) if d is None else d)


def image_safe_mask(f: VertexMap, safe_y: np.ndarray) -> np.ndarray:
    """Mask over the sorted domain: image pair is safe in the codomain."""
    img = np.fromiter((f[v] for v in sorted(f)), dtype=np.int64)
    return safe_y[np.ix_(img, img)]


def horoball_extension_constant(q: VertexMap, hT: Horoball, hS: Horoball) -> tuple[Fraction, np.ndarray]:
    """Minimal additive constant at ``k = 1`` of the extension on pairs safe on both sides."""
    qh = extend_to_horoball(q, hT, hS)
    dT, safeT = horoball_safe_mask(hT)
    dS, safeS = horoball_safe_mask(hS)
    mask = safeT & image_safe_mask(qh, safeS)
    return minimal_additive(qh, dT, dS, 1, mask), mask


# -- cusped spaces ---------------------------------------------------------------------


@dataclass(frozen=True)
class CosetCorrespondence:
    """Piece index in the source space -> piece index in the target space."""

    pairs: Mapping[int, int]

    def __post_init__(self):
        vals = list(self.pairs.values())
        if len(set(vals)) != len(vals):
            raise InputError("coset correspondence is not injective")

    def __getitem__(self, i: int) -> int:
        try:
            return self.pairs[i]
        except KeyError:
            raise InputError(f"no correspondence for piece {i}") from None

    def to_dict(self) -> dict:
        return {str(i): j for i, j in sorted(self.pairs.items())}

    @classmethod
    def identity(cls, n: int) -> "CosetCorrespondence":
        return cls({i: i for i in range(n)})


def correspondence_by_coset(X: CuspedSpace | ConedSpace, Y: CuspedSpace | ConedSpace,
                            q: VertexMap | None = None) -> CosetCorrespondence:
    """Pair pieces whose cosets contain ``x`` and ``q(x)`` for the piece representative ``x``.

    Both spaces must carry their Cayley balls.  With ``q`` omitted the same
    group element is used, which is the right choice when only the
    generating set differs.
    """
    if X.ball is None or Y.ball is None:
        raise InputError("coset correspondence needs spaces built from Cayley balls")
    mx, my = X.ball.model, Y.ball.model
    where = {}
    for j, p in enumerate(Y.pieces):
        where[(p.peripheral, my.coset_key(my.peripheral(p.peripheral), Y.ball.elements[p.rep]))] = j
    pairs = {}
    for i, p in enumerate(X.pieces):
        x = X.ball.elements[p.rep] if q is None else Y.ball.elements[q[p.rep]]
        j = where.get((p.peripheral, my.coset_key(my.peripheral(p.peripheral), x)))
        if j is not None:
            pairs[i] = j
    if q is None and (mx.family, mx.rank) != (my.family, my.rank):
        raise InputError("spaces come from different groups; supply the Cayley map")
    return CosetCorrespondence(pairs)


@dataclass(frozen=True)
class CuspedExtension:
    Q: dict[int, int]
    piece_maps: dict[int, dict[int, int]]  # source piece -> (member index -> target member index)
    offset: int  # the coset offset T: how far q had to be adjusted onto the paired piece


def piece_maps_from(q: VertexMap, corr: CosetCorrespondence, X, Y, dY0: np.ndarray | None = None):
    """Member-index maps between paired pieces, moving each image to the nearest target member."""
    maps: dict[int, dict[int, int]] = {}
    offset = 0
    needed = sorted({q[v] for p in X.pieces for v in p.members if v in q})
    if dY0 is None:
        rows = distance_rows(Y.ball.graph if Y.ball is not None else Y.graph, needed) if needed else None
        row_of = {v: i for i, v in enumerate(needed)}
    for i, p in enumerate(X.pieces):
        target = Y.pieces[corr[i]].members
        tgt = np.asarray(target)
        m = {}
        for a, v in enumerate(p.members):
            if v not in q:
                raise InputError(f"Cayley map undefined at vertex {v}")
            dist = dY0[q[v], tgt] if dY0 is not None else rows[row_of[q[v]], tgt]
            b = int(np.argmin(dist))
            if not math.isfinite(dist[b]):
                raise DomainError(f"piece {corr[i]} unreachable from q({v})")
            offset = max(offset, int(dist[b]))
            m[a] = b
        maps[i] = m
    return maps, offset


def extend_to_cusped(q: VertexMap, corr: CosetCorrespondence, X: CuspedSpace, Y: CuspedSpace,
                     horoball_maps: Mapping[int, Mapping[int, int]] | None = None) -> CuspedExtension:
    """Extension ``Q`` of a Cayley map over all horoballs.

    ``Q = q`` at depth 0.  A positive-depth vertex of the horoball over piece
    ``i`` at level ``n`` goes to level ``n`` of the paired horoball, using
    ``horoball_maps[i]`` (member index -> member index) or, by default, the
    nearest-member adjustment of ``q``.
    """
    if X.max_depth != Y.max_depth:
        raise InputError(f"horoball depths differ ({X.max_depth} vs {Y.max_depth})")
    for v in range(X.n_cayley):
        if v not in q:
            raise InputError(f"Cayley map undefined at vertex {v}")
    missing = [i for i in range(len(X.pieces)) if i not in corr.pairs]
    if missing:
        raise InputError(f"no correspondence for pieces {missing[:5]}")
    offset = 0
    if horoball_maps is None:
        maps, offset = piece_maps_from(q, corr, X, Y)
    else:
        maps = {i: dict(horoball_maps[i]) for i in range(len(X.pieces)) if i in horoball_maps}
        if len(maps) != len(X.pieces):
            raise InputError("a horoball map is missing for some piece")
    Q = {v: int(q[v]) for v in range(X.n_cayley)}
    for i, lev in enumerate(X.levels):
        tgt = Y.levels[corr[i]]
        m = maps[i]
        for n in range(1, X.max_depth + 1):
            for a, v in enumerate(lev[n]):
                Q[int(v)] = int(tgt[n, m[a]])
    return CuspedExtension(Q, maps, offset)


def cusped_lambda(q: VertexMap, corr: CosetCorrespondence, X: CuspedSpace, Y: CuspedSpace,
                  ext: CuspedExtension) -> tuple[Fraction, dict]:
    """Measured ``Lambda``: the largest Cayley or horoball constant, plus ``2T``."""
    dX0 = distance_matrix(X.ball.graph)
    dY0 = distance_matrix(Y.ball.graph)
    k, c = fit_constants({v: q[v] for v in range(X.n_cayley)}, dX0, dY0)
    worst = max(k, c)
    horo = Fraction(0)
    for i, m in ext.piece_maps.items():
        hT, hS = X.horoball(i), Y.horoball(corr[i])
        C, _ = horoball_extension_constant(m, hT, hS)
        horo = max(horo, C)
    lam = max(worst, horo, Fraction(1)) + 2 * ext.offset
    return lam, {"cayley_k": k, "cayley_c": c, "horoball_c": horo, "T": ext.offset}


def _bound_scan(Q: VertexMap, dX: np.ndarray, dY_rows: np.ndarray, row_of: Mapping[int, int],
                mask: np.ndarray, lam: Fraction) -> BoundReport:
    dom = sorted(Q)
    img = np.fromiter((row_of[Q[v]] for v in dom), dtype=np.int64)
    cols = np.fromiter((Q[v] for v in dom), dtype=np.int64)
    sx = dX[np.ix_(dom, dom)]
    sy = dY_rows[np.ix_(img, cols)]
    keep = np.triu(mask, k=1)
    if not keep.any():
        return BoundReport(True, lam, 0.0, None, 0)
    p, qd = lam.numerator, lam.denominator
    lhs = qd * np.where(keep, sy, 0)
    rhs = p * (3 * np.where(keep, sx, 0) + 1)
    if not (np.isfinite(lhs).all() and np.isfinite(rhs).all()):
        raise DomainError("bound check across disconnected components")
    ratio = np.where(keep, lhs / rhs, -1.0)
    worst = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    r = float(ratio[worst])
    return BoundReport(bool(r <= 1.0 and (lhs <= rhs).all()), lam, r,
                       (dom[worst[0]], dom[worst[1]]), int(keep.sum()))


def check_cusped_bound(Q: VertexMap, X: CuspedSpace, Y: CuspedSpace, lam) -> BoundReport:
    """Check ``d_Y(Qx, Qy) <= 3 Lambda d_X(x, y) + Lambda`` on truncation-safe pairs.

    A pair counts when it is safe in ``X`` and its image pair is safe in ``Y``.
    ``worst_ratio`` is the largest ``d_Y / (3 Lambda d_X + Lambda)``.
    """
    lam = _as_fraction(lam)
    dom = sorted(Q)
    if dom != list(range(X.graph.n)):
        raise InputError("Q must be defined on every vertex of the source space")
    dX, safeX = truncation_safe(X.graph, X.depth)
    targets = sorted(set(Q.values()))
    dY_rows, safeY = truncation_safe(Y.graph, Y.depth, sources=targets)
    row_of = {v: i for i, v in enumerate(targets)}
    img = np.fromiter((row_of[Q[v]] for v in dom), dtype=np.int64)
    cols = np.fromiter((Q[v] for v in dom), dtype=np.int64)
    mask = safeX & safeY[np.ix_(img, cols)]
    return _bound_scan(Q, dX, dY_rows, row_of, mask, lam)


def cone_map(q: VertexMap, corr: CosetCorrespondence, X: ConedSpace, Y: ConedSpace) -> dict[int, int]:
    """``q`` on Cayley vertices, cone point to paired cone point."""
    Q = {}
    for v in range(X.n_cayley):
        if v not in q:
            raise InputError(f"Cayley map undefined at vertex {v}")
        Q[v] = int(q[v])
    for i, c in enumerate(X.cones):
        Q[c] = Y.cones[corr[i]]
    return Q


def cone_lambda(q: VertexMap, corr: CosetCorrespondence, X: ConedSpace, Y: ConedSpace) -> tuple[Fraction, dict]:
    """``Lambda`` for coned spaces: Cayley constants and the length-2 cone detour, plus ``2T``."""
    dX0 = distance_matrix(X.ball.graph)
    dY0 = distance_matrix(Y.ball.graph)
    k, c = fit_constants({v: q[v] for v in range(X.n_cayley)}, dX0, dY0)
    _, offset = piece_maps_from(q, corr, X, Y, dY0)
    lam = max(k, c, Fraction(2)) + 2 * offset
    return lam, {"cayley_k": k, "cayley_c": c, "T": offset}


def cone_extension_check(q: VertexMap, corr: CosetCorrespondence, X: ConedSpace, Y: ConedSpace,
                         lam=None) -> BoundReport:
    """The same ``3 Lambda d + Lambda`` bound for the cone extension over all pairs."""
    Q = cone_map(q, corr, X, Y)
    lam = cone_lambda(q, corr, X, Y)[0] if lam is None else _as_fraction(lam)
    dX = distance_matrix(X.graph)
    targets = sorted(set(Q.values()))
    dY_rows = distance_rows(Y.graph, targets)
    row_of = {v: i for i, v in enumerate(targets)}
    mask = np.ones((X.graph.n, X.graph.n), dtype=bool)
    return _bound_scan(Q, dX, dY_rows, row_of, mask, lam)


def map_to_dict(f: VertexMap) -> dict:
    return {str(k): int(v) for k, v in sorted(f.items())}


def map_from_dict(data: Mapping) -> dict[int, int]:
    try:
        return {int(k): int(v) for k, v in data.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"malformed vertex map: {exc}") from None


def compose(f: VertexMap, g: VertexMap) -> dict[int, int]:
    """``g`` after ``f``."""
    return {v: g[w] for v, w in f.items()}


def identity_map(n: int) -> dict[int, int]:
    return {v: v for v in range(n)}


def rotation(n: int, shift: int) -> dict[int, int]:
    return {v: (v + shift) % n for v in range(n)}


def shift_clamped(n: int, shift: int = 1) -> dict[int, int]:
    """``i -> min(i + shift, n - 1)`` on a path: a ``(1, shift)`` quasi-isometry."""
    return {v: min(v + shift, n - 1) for v in range(n)}


def from_sequence(values: Sequence[int]) -> dict[int, int]:
    return {i: int(v) for i, v in enumerate(values)}
