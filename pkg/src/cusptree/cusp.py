"""Combinatorial horoballs, cusped spaces and coned spaces over finite graphs.

A horoball over a base graph ``T`` has vertices ``(t, n)`` for ``0 <= n <=
max_depth``; ``(t, n)`` and ``(t, n + 1)`` are joined by a vertical edge and
two vertices on level ``n`` are joined by a horizontal edge when their base
distance is at most ``2**n``.  Everything here is a finite truncation of the
infinite object, so distance queries come with a truncation-safety mask:
a pair is safe when some geodesic between them never touches the deepest
level (and neither endpoint lies on it).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetError, DomainError, InputError
from .groups import CayleyBall, CosetPiece, piece_distances
from .metric_graph import (
    MetricGraph,
    bfs_distances,
    distance_matrix,
    distance_rows,
    induced_subgraph,
)

log = logging.getLogger(__name__)

MAX_CYCLE_LENGTH = 12


def ceil_2log2(d: int) -> int:
    """Exact ``ceil(2 * log2(d))`` for a positive integer ``d``."""
    if d < 1:
        raise DomainError("logarithm of a non-positive distance")
    return (d * d - 1).bit_length()


def default_depth(diameters: Sequence[float]) -> int:
    """Smallest depth at which no same-level shortcut is cut off, plus slack."""
    finite = [int(x) for x in diameters if math.isfinite(x)]
    diam = max([1] + finite)
    return math.ceil(math.log2(diam)) + 2


@dataclass(frozen=True)
class Horoball:
    """Truncated combinatorial horoball; vertex ``(t, n)`` has id ``n * len(base) + t``."""

    base: MetricGraph
    base_distances: np.ndarray
    max_depth: int
    graph: MetricGraph

    @property
    def width(self) -> int:
        return self.base.n

    @property
    def depth(self) -> np.ndarray:
        return np.repeat(np.arange(self.max_depth + 1), self.width)

    def vertex(self, t: int, n: int) -> int:
        if not (0 <= t < self.width and 0 <= n <= self.max_depth):
            raise InputError(f"({t}, {n}) is not a vertex of this horoball")
        return n * self.width + t

    def coords(self, v: int) -> tuple[int, int]:
        if not 0 <= v < self.graph.n:
            raise InputError(f"unknown horoball vertex {v}")
        n, t = divmod(v, self.width)
        return t, n


def _horizontal_edges(ids: np.ndarray, dist: np.ndarray, level: int) -> list[tuple[int, int]]:
    iu, ju = np.nonzero(np.triu(dist <= 2 ** level, k=1))
    return [(int(ids[i]), int(ids[j])) for i, j in zip(iu, ju)]


def build_horoball(base: MetricGraph, max_depth: int, base_distances: np.ndarray | None = None) -> Horoball:
    """Horoball over ``base`` truncated at ``max_depth``.

    ``base_distances`` overrides the base metric (used for coset pieces whose
    intrinsic metric is not the graph metric of any finite subgraph).
    """
    if base.n == 0:
        raise InputError("horoball base must be nonempty")
    if max_depth < 0:
        raise InputError("max_depth must be non-negative")
    d = distance_matrix(base) if base_distances is None else np.asarray(base_distances, dtype=float)
    k = base.n
    edges = []
    for n in range(max_depth + 1):
        ids = np.arange(k) + n * k
        edges += _horizontal_edges(ids, d, n)
        if n < max_depth:
            edges += [(n * k + t, (n + 1) * k + t) for t in range(k)]
    graph = MetricGraph.from_edges(k * (max_depth + 1), edges)
    return Horoball(base, d, max_depth, graph)


def _as_vertex(h: Horoball, u) -> int:
    if isinstance(u, tuple):
        return h.vertex(*u)
    return h.graph.check_vertex(u)


def horoball_distance(h: Horoball, u, v) -> int:
    """Exact graph distance between two horoball vertices (ids or ``(t, n)`` pairs)."""
    u, v = _as_vertex(h, u), _as_vertex(h, v)
    d = bfs_distances(h.graph, u)[v]
    if not math.isfinite(d):
        raise DomainError("vertices lie in different components of the truncated horoball")
    return int(d)


def upper_bound_estimate(dT: int, n1: int, n2: int) -> int:
    """Upper bound on the horoball distance between ``(t1, n1)`` and ``(t2, n2)``.

    ``dT >= 1`` is the base distance of ``t1`` and ``t2``.  The logarithmic
    term bounds routes that turn at level ``ceil(log2 dT)``; the second term
    bounds routes that climb to the deeper endpoint and take one horizontal
    step.  Valid whenever the truncation does not cut off the turning level.
    """
    if dT < 1:
        raise DomainError("estimate needs distinct base vertices (dT >= 1)")
    return max(ceil_2log2(dT) + 3 - n1 - n2, abs(n1 - n2) + 1)


def truncation_safe(graph: MetricGraph, depth: np.ndarray, sources: Sequence[int] | None = None,
                    full: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Distances and safety mask for rows ``sources`` (all vertices by default).

    A pair is safe when neither endpoint lies on the deepest level and
    removing that level leaves their distance unchanged.  Spaces without
    positive depth are entirely safe.
    """
    depth = np.asarray(depth)
    rows = list(range(graph.n)) if sources is None else list(sources)
    d = full if full is not None else (distance_matrix(graph)[rows] if sources is None else distance_rows(graph, rows))
    top = int(depth.max()) if depth.size else 0
    if top == 0:
        return d, np.ones_like(d, dtype=bool)
    keep = np.nonzero(depth < top)[0]
    shallow, old = induced_subgraph(graph, keep)
    pos = np.full(graph.n, -1)
    pos[np.asarray(old, dtype=int)] = np.arange(len(old))
    safe = np.zeros_like(d, dtype=bool)
    src_ok = [i for i, s in enumerate(rows) if depth[s] < top]
    if src_ok:
        ds = distance_rows(shallow, [int(pos[rows[i]]) for i in src_ok])
        block = d[src_ok][:, keep] == ds[:, : len(keep)]
        sub = np.zeros((len(src_ok), graph.n), dtype=bool)
        sub[:, keep] = block & np.isfinite(ds)
        safe[src_ok] = sub
    return d, safe


# -- cusped and coned spaces -----------------------------------------------------------


@dataclass(frozen=True)
class CuspedSpace:
    """Cayley ball with one truncated horoball glued along each coset piece.

    Depth-0 vertices are exactly the ball vertices (same ids).  ``levels[i]``
    is a ``(max_depth + 1) x len(piece)`` array of vertex ids for piece ``i``;
    its row 0 lists the piece members themselves.
    """

    graph: MetricGraph
    depth: np.ndarray
    horoball_of: np.ndarray  # piece index for positive-depth vertices, -1 at depth 0
    pieces: tuple[CosetPiece, ...]
    levels: tuple[np.ndarray, ...]
    piece_metrics: tuple[np.ndarray, ...]
    piece_exact: tuple[bool, ...]
    max_depth: int
    n_cayley: int
    ball: CayleyBall | None = field(default=None, compare=False)

    def piece_of_vertex(self) -> dict[int, list[int]]:
        """Depth-0 vertex -> indices of pieces containing it."""
        out: dict[int, list[int]] = {}
        for i, p in enumerate(self.pieces):
            for v in p.members:
                out.setdefault(v, []).append(i)
        return out

    def horoball(self, i: int) -> Horoball:
        """Standalone horoball over piece ``i`` (same metric and depth)."""
        metric = self.piece_metrics[i]
        base = _metric_base_graph(metric)
        return build_horoball(base, self.max_depth, metric)

    def horoball_ids(self, i: int) -> np.ndarray:
        """Space vertex ids of the standalone horoball's vertices, in its id order."""
        return self.levels[i].reshape(-1)


def _metric_base_graph(metric: np.ndarray) -> MetricGraph:
    iu, ju = np.nonzero(np.triu(metric == 1, k=1))
    return MetricGraph.from_edges(metric.shape[0], zip(iu.tolist(), ju.tolist()))


def build_cusped_space(ball: CayleyBall, pieces: Sequence[CosetPiece], max_depth: int | None = None) -> CuspedSpace:
    """Glue a horoball of depth ``max_depth`` along every piece.

    Horoball bases use the peripheral subgroup's own word metric restricted to
    the piece; ``piece_exact`` records where this had to fall back to
    distances inside the piece.
    """
    m = ball.model
    kept, metrics, exact = [], [], []
    for p in pieces:
        if not p.members:
            log.warning("skipping empty coset piece for %s", p.peripheral)
            continue
        if any(not 0 <= v < ball.n for v in p.members):
            raise InputError("coset piece references vertices outside the ball")
        d, ok = piece_distances(ball, m, p.peripheral, p)
        kept.append(p)
        metrics.append(d)
        exact.append(ok)
    if max_depth is None:
        max_depth = default_depth([float(d.max()) if d.size else 0.0 for d in metrics])
    if max_depth < 0:
        raise InputError("max_depth must be non-negative")

    edges = list(ball.graph.edges)
    depth = [0] * ball.n
    owner = [-1] * ball.n
    levels = []
    nxt = ball.n
    for i, (p, d) in enumerate(zip(kept, metrics)):
        k = len(p.members)
        ids = np.empty((max_depth + 1, k), dtype=np.int64)
        ids[0] = p.members
        for n in range(1, max_depth + 1):
            ids[n] = np.arange(nxt, nxt + k)
            nxt += k
            depth += [n] * k
            owner += [i] * k
        for n in range(max_depth + 1):
            edges += _horizontal_edges(ids[n], d, n)
            if n < max_depth:
                edges += list(zip(ids[n].tolist(), ids[n + 1].tolist()))
        levels.append(ids)
    graph = MetricGraph.from_edges(nxt, edges, ball.graph.labels)
    return CuspedSpace(graph, np.asarray(depth), np.asarray(owner), tuple(kept), tuple(levels),
                       tuple(metrics), tuple(exact), max_depth, ball.n, ball)


@dataclass(frozen=True)
class ConedSpace:
    """Cayley ball plus a cone vertex per coset piece (ids ``n_cayley + i``)."""

    graph: MetricGraph
    pieces: tuple[CosetPiece, ...]
    cones: tuple[int, ...]
    n_cayley: int
    ball: CayleyBall | None = field(default=None, compare=False)


def build_coned_space(ball: CayleyBall, pieces: Sequence[CosetPiece]) -> ConedSpace:
    pieces = tuple(p for p in pieces if p.members)
    edges = list(ball.graph.edges)
    cones = []
    for i, p in enumerate(pieces):
        c = ball.n + i
        cones.append(c)
        edges += [(v, c) for v in p.members]
    graph = MetricGraph.from_edges(ball.n + len(pieces), edges, ball.graph.labels)
    return ConedSpace(graph, pieces, tuple(cones), ball.n, ball)


# -- paths --------------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """Sub-path ``path[start:stop + 1]``; ``kind`` is ``"I1"`` (all depth 0) or ``"I2"``."""

    kind: str
    start: int
    stop: int

    @property
    def length(self) -> int:
        return self.stop - self.start


def decompose_path(graph: MetricGraph, depth: Sequence[int], path: Sequence[int]) -> list[Segment]:
    """Split a path into maximal depth-0 runs and the excursions between them.

    Consecutive segments share their boundary vertex, so segment lengths sum
    to the path length.  A path that starts or ends at positive depth begins
    or ends with an excursion; a depth-0 run may be a single vertex.
    """
    if not path:
        raise InputError("empty path")
    for v in path:
        graph.check_vertex(v)
    for u, v in zip(path, path[1:]):
        if not graph.has_edge(u, v):
            raise InputError(f"consecutive vertices {u}, {v} are not adjacent")
    flat = [depth[v] == 0 for v in path]
    segs: list[Segment] = []
    i = 0
    n = len(path)
    if not flat[0]:
        j = next((k for k in range(n) if flat[k]), n - 1)
        segs.append(Segment("I2", 0, j))
        i = j
        if not flat[i]:
            return segs
    while i < n:
        j = i
        while j + 1 < n and flat[j + 1]:
            j += 1
        segs.append(Segment("I1", i, j))
        if j == n - 1:
            break
        k = next((t for t in range(j + 1, n) if flat[t]), n - 1)
        segs.append(Segment("I2", j, k))
        if not flat[k]:
            break
        i = k
    return segs


def fineness_profile(graph: MetricGraph, edge: tuple[int, int], n: int, budget: int = 5_000_000) -> int:
    """Number of simple cycles of length at most ``n`` through ``edge``.

    Exhaustive; raises :class:`BudgetError` rather than returning a partial
    count when ``n`` exceeds the supported length or the search budget.
    """
    u, v = edge
    if not graph.has_edge(u, v):
        raise InputError(f"({u}, {v}) is not an edge")
    if n > MAX_CYCLE_LENGTH:
        raise BudgetError(f"cycle length {n} exceeds the exhaustive budget of {MAX_CYCLE_LENGTH}")
    if n < 3:
        return 0
    # distances to u, truncated at n, as an admissible pruning bound
    reach = {u: 0}
    frontier = [u]
    for r in range(1, n):
        nxt = []
        for x in frontier:
            for y in graph.adjacency[x]:
                if y not in reach:
                    reach[y] = r
                    nxt.append(y)
        frontier = nxt
    adj = graph.adjacency
    count = 0
    steps = 0
    on_path = {v}
    stack = [(v, iter(adj[v]), 0)]
    while stack:
        x, it, length = stack[-1]
        y = next(it, None)
        if y is None:
            stack.pop()
            on_path.discard(x)
            continue
        steps += 1
        if steps > budget:
            raise BudgetError("cycle enumeration exceeded its step budget")
        if y == u:
            if length >= 1 and length + 2 <= n:
                count += 1
            continue
        if y in on_path or length + 1 + reach.get(y, n) + 1 > n:
            continue
        on_path.add(y)
        stack.append((y, iter(adj[y]), length + 1))
    return count


# -- serialization ------------------------------------------------------------------------


def _ball_meta(ball: CayleyBall | None) -> dict | None:
    if ball is None:
        return None
    from .groups import model_to_dict

    return {"group": model_to_dict(ball.model), "radius": ball.radius}


def _pieces_to_list(pieces: Sequence[CosetPiece], labels) -> list[dict]:
    return [{"peripheral": p.peripheral, "rep": labels.get(p.rep, str(p.rep)), "rep_id": p.rep,
             "members": list(p.members)} for p in pieces]


def space_to_dict(space) -> dict:
    """JSON-ready description of a horoball, cusped space or coned space."""
    from .metric_graph import graph_to_dict

    if isinstance(space, Horoball):
        out = graph_to_dict(space.graph)
        out.update(kind="horoball", max_depth=space.max_depth, depth=space.depth.tolist(),
                   base=graph_to_dict(space.base), base_distances=space.base_distances.astype(int).tolist())
        return out
    if isinstance(space, CuspedSpace):
        out = graph_to_dict(space.graph)
        out.update(
            kind="cusped",
            max_depth=space.max_depth,
            n_cayley=space.n_cayley,
            depth=space.depth.tolist(),
            horoball_of=[None if h < 0 else int(h) for h in space.horoball_of],
            pieces=_pieces_to_list(space.pieces, space.graph.labels),
            levels=[lev.tolist() for lev in space.levels],
            piece_metrics=[m.astype(int).tolist() for m in space.piece_metrics],
            piece_exact=list(space.piece_exact),
            ball=_ball_meta(space.ball),
        )
        return out
    if isinstance(space, ConedSpace):
        out = graph_to_dict(space.graph)
        out.update(kind="coned", n_cayley=space.n_cayley, cones=list(space.cones),
                   pieces=_pieces_to_list(space.pieces, space.graph.labels), ball=_ball_meta(space.ball))
        return out
    raise InputError(f"cannot serialize {type(space).__name__}")


def _ball_from_meta(meta, n_cayley: int) -> CayleyBall | None:
    if not meta:
        return None
    from .groups import cayley_ball, model_from_dict

    ball = cayley_ball(model_from_dict(meta["group"]), int(meta["radius"]))
    if ball.n != n_cayley:
        raise InputError("embedded group description does not reproduce the Cayley ball")
    return ball


def space_from_dict(data) -> "Horoball | CuspedSpace | ConedSpace | MetricGraph":
    """Inverse of :func:`space_to_dict`; plain graph JSON comes back as a ``MetricGraph``."""
    from .metric_graph import graph_from_dict

    kind = data.get("kind", "graph") if hasattr(data, "get") else None
    g = graph_from_dict(data)
    try:
        if kind == "graph":
            return g
        if kind == "horoball":
            base = graph_from_dict(data["base"])
            h = build_horoball(base, int(data["max_depth"]), np.asarray(data["base_distances"], dtype=float))
            if h.graph.edges != g.edges:
                raise InputError("horoball edges do not match its base and depth")
            return h
        pieces = tuple(CosetPiece(p["peripheral"], int(p["rep_id"]), tuple(p["members"])) for p in data["pieces"])
        if kind == "cusped":
            n0 = int(data["n_cayley"])
            return CuspedSpace(
                g,
                np.asarray(data["depth"], dtype=np.int64),
                np.asarray([-1 if h is None else h for h in data["horoball_of"]], dtype=np.int64),
                pieces,
                tuple(np.asarray(lev, dtype=np.int64) for lev in data["levels"]),
                tuple(np.asarray(m, dtype=float) for m in data["piece_metrics"]),
                tuple(bool(x) for x in data["piece_exact"]),
                int(data["max_depth"]),
                n0,
                _ball_from_meta(data.get("ball"), n0),
            )
        if kind == "coned":
            n0 = int(data["n_cayley"])
            return ConedSpace(g, pieces, tuple(data["cones"]), n0, _ball_from_meta(data.get("ball"), n0))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed {kind} space JSON: {exc}") from None
    raise InputError(f"unknown space kind {kind!r}")


def space_graph(space) -> MetricGraph:
    return space if isinstance(space, MetricGraph) else space.graph


def space_depth(space) -> np.ndarray:
    """Depth array (all zeros for spaces without horoballs)."""
    if isinstance(space, (Horoball, CuspedSpace)):
        return np.asarray(space.depth)
    return np.zeros(space_graph(space).n, dtype=np.int64)
