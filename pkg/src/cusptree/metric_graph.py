"""Finite unit-edge graphs, hop distances, Gromov products and separators.

Distances are stored as float arrays whose entries are exact small integers;
unreachable pairs hold ``math.inf`` so that comparisons against them stay
honest (an infinite distance never satisfies a finite inequality by accident).
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import DomainError, InputError

UNREACHABLE = math.inf


@dataclass(frozen=True)
class MetricGraph:
    """Undirected simple graph on vertices ``0..n-1`` with unit edge lengths."""

    n: int
    edges: tuple[tuple[int, int], ...]
    labels: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise InputError("vertex count must be non-negative")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise InputError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            if u > v:
                raise InputError("edges must be stored as (min, max); use MetricGraph.from_edges")
            if (u, v) in seen:
                raise InputError(f"parallel edge ({u}, {v})")
            seen.add((u, v))
        for k in self.labels:
            if not 0 <= k < self.n:
                raise InputError(f"label for unknown vertex {k}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], labels: Mapping[int, str] | None = None) -> "MetricGraph":
        pairs = set()
        for e in edges:
            if len(e) != 2:
                raise InputError(f"edge {list(e)!r} is not a vertex pair (weighted edges are not supported)")
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            pairs.add((min(u, v), max(u, v)))
        return cls(n, tuple(sorted(pairs)), dict(labels or {}))

    @property
    def vertices(self) -> range:
        return range(self.n)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edge_set

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def check_vertex(self, v: int) -> int:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.n:
            raise InputError(f"unknown vertex id {v!r}")
        return int(v)

    def csr(self) -> csr_matrix:
        if not self.edges:
            return csr_matrix((self.n, self.n), dtype=np.int8)
        e = np.asarray(self.edges, dtype=np.int64)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.int8)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def relabel(self, perm: Sequence[int]) -> "MetricGraph":
        """Graph with vertex ``v`` renamed ``perm[v]``."""
        labels = {perm[k]: s for k, s in self.labels.items()}
        return MetricGraph.from_edges(self.n, ((perm[u], perm[v]) for u, v in self.edges), labels)


def bfs_distances(g: MetricGraph, source: int) -> np.ndarray:
    """Exact hop distances from ``source``; ``inf`` marks unreachable vertices."""
    source = g.check_vertex(source)
    dist = np.full(g.n, UNREACHABLE)
    dist[source] = 0
    queue = deque([source])
    adj = g.adjacency
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if dist[w] == UNREACHABLE:
                dist[w] = du
                queue.append(w)
    return dist


def distance_rows(g: MetricGraph, sources: Sequence[int]) -> np.ndarray:
    """Rows of the distance matrix for ``sources`` (shape ``len(sources) x n``)."""
    idx = [g.check_vertex(s) for s in sources]
    if g.n == 0 or not idx:
        return np.zeros((len(idx), g.n))
    return shortest_path(g.csr(), method="D", unweighted=True, directed=False, indices=idx)


def distance_matrix(g: MetricGraph) -> np.ndarray:
    """All-pairs hop distances as an ``n x n`` float array (``inf`` if unreachable)."""
    if g.n == 0:
        return np.zeros((0, 0))
    return shortest_path(g.csr(), method="D", unweighted=True, directed=False)


def gromov_product(d: np.ndarray, x: int, y: int, base: int) -> float:
    """``(x|y)_base = (d(b,x) + d(b,y) - d(x,y)) / 2``; always a half-integer."""
    n = d.shape[0]
    for v in (x, y, base):
        if not 0 <= v < n:
            raise InputError(f"unknown vertex id {v!r}")
    dbx, dby, dxy = d[base, x], d[base, y], d[x, y]
    if not (math.isfinite(dbx) and math.isfinite(dby) and math.isfinite(dxy)):
        raise DomainError("Gromov product undefined: vertices lie in different components")
    return (int(dbx) + int(dby) - int(dxy)) / 2


def connected_components(g: MetricGraph, removed: Iterable[int] = ()) -> list[list[int]]:
    """Components of ``g`` minus ``removed``, each sorted, ordered by least vertex."""
    gone = {g.check_vertex(v) for v in removed}
    seen = set(gone)
    comps = []
    adj = g.adjacency
    for s in range(g.n):
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        stack = [s]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def components_after_removal(g: MetricGraph, removed: Iterable[int]) -> list[list[int]]:
    return connected_components(g, removed)


def is_connected(g: MetricGraph) -> bool:
    return g.n > 0 and len(connected_components(g)) == 1


def induced_subgraph(g: MetricGraph, vertices: Iterable[int]) -> tuple[MetricGraph, list[int]]:
    """Induced subgraph renumbered densely; also returns new-id -> old-id."""
    old = sorted({g.check_vertex(v) for v in vertices})
    new = {v: i for i, v in enumerate(old)}
    edges = [(new[u], new[v]) for u, v in g.edges if u in new and v in new]
    labels = {new[k]: s for k, s in g.labels.items() if k in new}
    return MetricGraph.from_edges(len(old), edges, labels), old


def eccentricity(d: np.ndarray, v: int) -> float:
    return float(d[v].max()) if d.shape[0] else 0.0


# -- small standard families -------------------------------------------------

def path_graph(n: int) -> MetricGraph:
    return MetricGraph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> MetricGraph:
    if n < 3:
        raise InputError("a cycle needs at least 3 vertices")
    return MetricGraph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> MetricGraph:
    return MetricGraph.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def star_graph(leaves: int) -> MetricGraph:
    return MetricGraph.from_edges(leaves + 1, ((0, i) for i in range(1, leaves + 1)))


def wheel_graph(rim: int) -> MetricGraph:
    """Hub 0 joined to every vertex of the cycle ``1..rim``."""
    edges = [(0, i) for i in range(1, rim + 1)]
    edges += [(i, i % rim + 1) for i in range(1, rim + 1)]
    return MetricGraph.from_edges(rim + 1, edges)


def theta_graph(arm_length: int, arms: int = 3) -> MetricGraph:
    """Two poles 0 and 1 joined by ``arms`` internally disjoint paths of ``arm_length`` edges."""
    if arm_length < 1:
        raise InputError("arm length must be positive")
    edges = []
    nxt = 2
    for _ in range(arms):
        prev = 0
        for _ in range(arm_length - 1):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, 1))
    return MetricGraph.from_edges(nxt, edges)


def grid_graph(rows: int, cols: int) -> MetricGraph:
    idx = lambda r, c: r * cols + c  # noqa: E731
    edges = [(idx(r, c), idx(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    edges += [(idx(r, c), idx(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return MetricGraph.from_edges(rows * cols, edges)


def random_tree(n: int, rng: np.random.Generator) -> MetricGraph:
    return MetricGraph.from_edges(n, ((i, int(rng.integers(0, i))) for i in range(1, n)))


def random_connected_graph(n: int, extra_edges: int, rng: np.random.Generator) -> MetricGraph:
    """Random spanning tree plus ``extra_edges`` uniformly chosen chords."""
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    possible = n * (n - 1) // 2
    target = min(possible, len(edges) + extra_edges)
    while len(edges) < target:
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        edges.add((min(u, v), max(u, v)))
    return MetricGraph.from_edges(n, edges)


# -- serialization -------------------------------------------------------------

def graph_to_dict(g: MetricGraph) -> dict:
    out: dict = {"n": g.n, "edges": [list(e) for e in g.edges]}
    if g.labels:
        out["labels"] = {str(k): g.labels[k] for k in sorted(g.labels)}
    return out


def graph_from_dict(data: Mapping) -> MetricGraph:
    try:
        n = int(data["n"])
        edges = data["edges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"graph JSON needs integer 'n' and list 'edges': {exc}") from None
    labels = {int(k): str(v) for k, v in (data.get("labels") or {}).items()}
    return MetricGraph.from_edges(n, edges, labels)


def graph_to_dot(g: MetricGraph, name: str = "G", vertex_attrs: Mapping[int, str] | None = None) -> str:
    lines = [f"graph {name} {{"]
    for v in g.vertices:
        attrs = []
        if v in g.labels:
            attrs.append(f'label="{g.labels[v]}"')
        if vertex_attrs and v in vertex_attrs:
            attrs.append(vertex_attrs[v])
        lines.append(f"  {v}" + (f" [{', '.join(attrs)}]" if attrs else "") + ";")
    for u, v in g.edges:
        lines.append(f"  {u} -- {v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
