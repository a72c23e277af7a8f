"""Cut-point / cut-pair tree of a finite connected graph.

The graph is first split into blocks at its cut vertices.  Inside each block
we enumerate 2-vertex separators ("cut pairs"), excluding any pair that
contains a cut vertex of the whole graph, and classify them:

* pairs that cross (each separates the other) are grouped by transitive
  closure; every class with two or more pairs is a *necklace* whose vertex set
  is the union of its pairs;
* a pair crossed by nothing is an *inseparable pair*;
* maximal vertex sets that no cut pair splits, not already inside a
  necklace, are *rigid* sets (a bridge is a rigid 2-set).

Tree vertices are cut points, inseparable pairs, necklaces and rigid sets.
A pair is joined to every class-type vertex of its block containing it, and
a cut point to every class-type vertex containing it.  The result is always
a tree whose edges join a separator-type vertex to a class-type vertex.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import networkx as nx

from .errors import DomainError, InputError
from .metric_graph import MetricGraph, connected_components, induced_subgraph, is_connected

CUTPOINT, PAIR, NECKLACE, RIGID = "cutpoint", "pair", "necklace", "rigid"
TYPE_ORDER = {CUTPOINT: 0, PAIR: 1, NECKLACE: 2, RIGID: 3}
SEPARATOR_TYPES = frozenset({CUTPOINT, PAIR})
DOT_SHAPES = {CUTPOINT: "circle", PAIR: "diamond", NECKLACE: "doublecircle", RIGID: "box"}


# -- blocks ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockCutTree:
    blocks: tuple[tuple[int, ...], ...]  # sorted vertex tuples, ordered lexicographically
    cut_vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]  # (block index, cut vertex)


def _biconnected(g: MetricGraph) -> tuple[set[int], list[set[int]]]:
    """Articulation points and blocks (vertex sets) via iterative Hopcroft-Tarjan."""
    n = g.n
    adj = g.adjacency
    disc = [-1] * n
    low = [0] * n
    cuts: set[int] = set()
    blocks: list[set[int]] = []
    t = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = t
        t += 1
        if not adj[root]:
            blocks.append({root})
            continue
        children = 0
        edge_stack: list[tuple[int, int]] = []
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            u, parent, it = stack[-1]
            w = next(it, None)
            if w is None:
                stack.pop()
                if parent != -1:
                    low[parent] = min(low[parent], low[u])
                    if low[u] >= disc[parent]:
                        if parent != root:
                            cuts.add(parent)
                        comp = set()
                        while True:
                            a, b = edge_stack.pop()
                            comp.update((a, b))
                            if (a, b) == (parent, u):
                                break
                        blocks.append(comp)
                continue
            if w == parent:
                continue
            if disc[w] == -1:
                disc[w] = low[w] = t
                t += 1
                edge_stack.append((u, w))
                if u == root:
                    children += 1
                stack.append((w, u, iter(adj[w])))
            elif disc[w] < disc[u]:
                low[u] = min(low[u], disc[w])
                edge_stack.append((u, w))
        if children > 1:
            cuts.add(root)
    return cuts, blocks


def cut_vertices(g: MetricGraph) -> list[int]:
    if not is_connected(g):
        raise DomainError("cut vertices are computed for connected graphs only")
    return sorted(_biconnected(g)[0])


def block_cut_tree(g: MetricGraph) -> BlockCutTree:
    """Blocks (maximal 2-connected subgraphs and bridges) and their incidence with cut vertices."""
    if not is_connected(g):
        raise DomainError("block-cut tree needs a connected graph")
    cuts, blocks = _biconnected(g)
    ordered = sorted(tuple(sorted(b)) for b in blocks)
    edges = tuple((i, c) for i, b in enumerate(ordered) for c in b if c in cuts)
    return BlockCutTree(tuple(ordered), tuple(sorted(cuts)), edges)


# -- separators inside a block ----------------------------------------------------------------


@dataclass(frozen=True)
class SeparatorPair:
    a: int
    b: int
    block: int
    crossing_class: int | None = None
    inseparable: bool = False

    @property
    def vertices(self) -> tuple[int, int]:
        return (self.a, self.b)


def _component_labels(block: MetricGraph, removed: Sequence[int]) -> list[int]:
    labels = [-1] * block.n
    for i, comp in enumerate(connected_components(block, removed)):
        for v in comp:
            labels[v] = i
    return labels


def enumerate_cut_pairs(block: MetricGraph, exclude: Sequence[int] = ()) -> list[tuple[int, int]]:
    """All pairs ``{a, b}`` whose removal disconnects ``block``.

    Exhaustive over vertex pairs; pairs meeting ``exclude`` are skipped.
    """
    skip = set(exclude)
    out = []
    for a, b in itertools.combinations(range(block.n), 2):
        if a in skip or b in skip:
            continue
        if len(connected_components(block, (a, b))) >= 2:
            out.append((a, b))
    return out


def separates(block: MetricGraph, p: Sequence[int], q: Sequence[int]) -> bool:
    """Whether the two vertices of ``q`` lie in different components of ``block - p``."""
    if set(p) & set(q):
        raise InputError(f"pair {tuple(q)} shares a vertex with separator {tuple(p)}")
    labels = _component_labels(block, p)
    return labels[q[0]] != labels[q[1]]


@dataclass(frozen=True)
class PairClassification:
    pairs: tuple[tuple[int, int], ...]
    inseparable: tuple[tuple[int, int], ...]
    necklaces: tuple[tuple[tuple[int, int], ...], ...]  # crossing classes with >= 2 pairs

    def necklace_sets(self) -> list[frozenset[int]]:
        return [frozenset(v for p in cls for v in p) for cls in self.necklaces]


def classify_pairs(block: MetricGraph, pairs: Sequence[tuple[int, int]]) -> PairClassification:
    """Group cut pairs into crossing classes and isolate the inseparable ones."""
    pairs = [tuple(sorted(p)) for p in pairs]
    labels = {p: _component_labels(block, p) for p in pairs}
    k = len(pairs)
    parent = list(range(k))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    separated = [False] * k
    for i, j in itertools.combinations(range(k), 2):
        p, q = pairs[i], pairs[j]
        if set(p) & set(q):
            continue
        pq = labels[p][q[0]] != labels[p][q[1]]
        qp = labels[q][p[0]] != labels[q][p[1]]
        if pq != qp:
            raise RuntimeError(f"crossing relation not symmetric for {p} and {q}")
        if pq:
            separated[i] = separated[j] = True
            parent[find(i)] = find(j)
    classes: dict[int, list[tuple[int, int]]] = {}
    for i, p in enumerate(pairs):
        classes.setdefault(find(i), []).append(p)
    necklaces = []
    inseparable = []
    for members in classes.values():
        if len(members) >= 2:
            necklaces.append(tuple(sorted(members)))
        else:
            p = members[0]
            if separated[pairs.index(p)]:
                raise RuntimeError(f"pair {p} is separated but crosses no other pair")
            inseparable.append(p)
    necklaces.sort(key=lambda cls: sorted({v for p in cls for v in p}))
    return PairClassification(tuple(pairs), tuple(sorted(inseparable)), tuple(necklaces))


def maximal_inseparable_sets(block: MetricGraph, classification: PairClassification) -> list[frozenset[int]]:
    """Maximal vertex sets no cut pair splits, ignoring those inside a necklace.

    A block without cut pairs yields one set holding all its vertices.
    """
    if not classification.pairs:
        return [frozenset(range(block.n))]
    labels = [(p, _component_labels(block, p)) for p in classification.pairs]
    compat = nx.Graph()
    compat.add_nodes_from(range(block.n))
    for u, v in itertools.combinations(range(block.n), 2):
        if all(lab[u] == lab[v] for p, lab in labels if u not in p and v not in p):
            compat.add_edge(u, v)
    necklaces = classification.necklace_sets()
    out = set()
    for clique in nx.find_cliques(compat):
        s = frozenset(clique)
        if len(s) >= 3 and not any(s <= nk for nk in necklaces):
            out.add(s)
    return sorted(out, key=sorted)


# -- the combined tree -----------------------------------------------------------------------


@dataclass(frozen=True)
class TreeVertex:
    type: str
    set: tuple[int, ...]
    block: int | None = None

    def to_dict(self) -> dict:
        return {"type": self.type, "set": list(self.set), "block": self.block}


@dataclass(frozen=True)
class BlockStructure:
    block: int
    vertices: tuple[int, ...]
    pairs: tuple[SeparatorPair, ...]
    necklaces: tuple[tuple[int, ...], ...]
    rigid: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class CombinedTree:
    vertices: tuple[TreeVertex, ...]
    edges: tuple[tuple[int, int], ...]
    blocks: tuple[BlockStructure, ...] = ()

    def index(self) -> dict[tuple[str, tuple[int, ...]], int]:
        return {(v.type, v.set): i for i, v in enumerate(self.vertices)}

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.vertices]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def is_tree(self) -> bool:
        k = len(self.vertices)
        if k == 0 or len(self.edges) != k - 1:
            return False
        seen = {0}
        stack = [0]
        adj = self.neighbors()
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == k

    def is_bipartite_typed(self) -> bool:
        return all((self.vertices[i].type in SEPARATOR_TYPES) != (self.vertices[j].type in SEPARATOR_TYPES)
                   for i, j in self.edges)

    def covered(self) -> set[int]:
        return {v for tv in self.vertices for v in tv.set}

    def to_dict(self) -> dict:
        return {"vertices": [v.to_dict() for v in self.vertices], "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, no whitespace."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_dot(self, name: str = "T") -> str:
        lines = [f"graph {name} {{"]
        for i, v in enumerate(self.vertices):
            label = f"{v.type} {{{', '.join(map(str, v.set))}}}"
            lines.append(f'  {i} [shape={DOT_SHAPES[v.type]}, label="{label}"];')
        lines += [f"  {i} -- {j};" for i, j in self.edges]
        lines.append("}")
        return "\n".join(lines) + "\n"


def tree_from_dict(data: Mapping) -> CombinedTree:
    try:
        verts = tuple(TreeVertex(v["type"], tuple(v["set"]), v.get("block")) for v in data["vertices"])
        edges = tuple(tuple(e) for e in data["edges"])
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed combined tree JSON: {exc}") from None
    return CombinedTree(verts, edges)


def analyze_block(g: MetricGraph, block_id: int, vertices: Sequence[int], cuts: set[int]) -> BlockStructure:
    """Pairs, necklaces and rigid sets of one block (in original vertex ids)."""
    if len(vertices) <= 2:
        return BlockStructure(block_id, tuple(vertices), (), (), (tuple(vertices),))
    sub, old = induced_subgraph(g, vertices)
    local_cuts = [i for i, v in enumerate(old) if v in cuts]
    cls = classify_pairs(sub, enumerate_cut_pairs(sub, exclude=local_cuts))
    rigid = maximal_inseparable_sets(sub, cls)
    to_old = lambda s: tuple(sorted(old[i] for i in s))  # noqa: E731
    pairs = []
    insep = set(cls.inseparable)
    for ci, members in enumerate(cls.necklaces):
        for a, b in members:
            pairs.append(SeparatorPair(old[a], old[b], block_id, ci, False))
    for a, b in cls.inseparable:
        pairs.append(SeparatorPair(old[a], old[b], block_id, None, True))
    pairs.sort(key=lambda p: (p.a, p.b))
    assert all(((p.a, p.b) in {to_old(q) for q in insep}) == p.inseparable for p in pairs)
    return BlockStructure(
        block_id,
        tuple(vertices),
        tuple(pairs),
        tuple(to_old(s) for s in cls.necklace_sets()),
        tuple(sorted(to_old(s) for s in rigid)),
    )


def combined_tree(g: MetricGraph) -> CombinedTree:
    """Cut-point / cut-pair tree of a connected graph."""
    if not is_connected(g):
        raise DomainError("combined tree needs a connected graph")
    bct = block_cut_tree(g)
    cuts = set(bct.cut_vertices)
    structures = [analyze_block(g, i, b, cuts) for i, b in enumerate(bct.blocks)]

    raw: list[TreeVertex] = [TreeVertex(CUTPOINT, (c,)) for c in bct.cut_vertices]
    for s in structures:
        raw += [TreeVertex(PAIR, p.vertices, s.block) for p in s.pairs if p.inseparable]
        raw += [TreeVertex(NECKLACE, nk, s.block) for nk in s.necklaces]
        raw += [TreeVertex(RIGID, r, s.block) for r in s.rigid]
    raw.sort(key=lambda v: (TYPE_ORDER[v.type], v.set))

    classes = [(i, v) for i, v in enumerate(raw) if v.type in (NECKLACE, RIGID)]
    edges = []
    for i, v in enumerate(raw):
        if v.type == CUTPOINT:
            edges += [(i, j) for j, c in classes if v.set[0] in c.set]
        elif v.type == PAIR:
            edges += [(i, j) for j, c in classes if c.block == v.block and set(v.set) <= set(c.set)]
    tree = CombinedTree(tuple(raw), tuple(sorted(edges)), tuple(structures))
    if not (tree.is_tree() and tree.is_bipartite_typed()):
        raise RuntimeError("combined tree construction produced a non-tree; this is a bug")
    return tree


# -- automorphisms -----------------------------------------------------------------------------


def is_automorphism(g: MetricGraph, sigma: Sequence[int]) -> bool:
    if len(sigma) != g.n or sorted(sigma) != list(range(g.n)):
        return False
    return all(g.has_edge(sigma[u], sigma[v]) for u, v in g.edges)


def induced_tree_map(g: MetricGraph, sigma: Sequence[int], t: CombinedTree) -> tuple[list[int | None], bool]:
    """Permutation of tree vertices induced by a graph automorphism.

    Returns ``(perm, verdict)``; ``verdict`` is true when every image set is a
    tree vertex of the same type and edges map to edges.
    """
    sigma = [int(s) for s in sigma]
    if not is_automorphism(g, sigma):
        raise InputError("sigma is not an automorphism of the graph")
    index = t.index()
    perm: list[int | None] = []
    ok = True
    for v in t.vertices:
        j = index.get((v.type, tuple(sorted(sigma[x] for x in v.set))))
        perm.append(j)
        ok &= j is not None
    if ok:
        edge_set = {tuple(sorted(e)) for e in t.edges}
        ok = all(tuple(sorted((perm[i], perm[j]))) in edge_set for i, j in t.edges)
    return perm, ok
