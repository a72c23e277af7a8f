"""Sphere graphs: a heuristic finite picture of the boundary of a space.

The sphere of radius ``R`` about a base vertex is joined by an edge whenever
the Gromov product of two sphere points is at least ``R - s``; since both
points sit at distance ``R`` this is the same as ``d(u, v) <= 2s``.  The
combined tree of this graph is a diagnostic only.
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .boundary_tree import CombinedTree, combined_tree
from .errors import DomainError, InputError
from .hyperbolicity import four_point_delta
from .metric_graph import MetricGraph, connected_components, distance_matrix, graph_to_dict, induced_subgraph

log = logging.getLogger(__name__)


class DisconnectedSphereWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SphereGraph:
    graph: MetricGraph
    vertices: tuple[int, ...]  # space vertex of each sphere vertex
    horoball: tuple[int | None, ...]  # owning horoball piece, if any
    base: int
    radius: int
    threshold: int

    def to_dict(self) -> dict:
        out = graph_to_dict(self.graph)
        out.update(radius=self.radius, threshold=self.threshold, base=self.base, diagnostic=True,
                   space_vertices=list(self.vertices), horoball=list(self.horoball))
        return out


def _space_parts(space) -> tuple[MetricGraph, np.ndarray | None]:
    if isinstance(space, MetricGraph):
        return space, None
    return space.graph, getattr(space, "horoball_of", None)


def sphere_graph(space, base: int, R: int, s: int | None = None, d: np.ndarray | None = None) -> SphereGraph:
    """Sphere of radius ``R`` about ``base`` with the Gromov-product edge rule.

    ``space`` is a ``CuspedSpace`` or a bare ``MetricGraph``.  ``s`` defaults
    to twice the measured four-point delta.
    """
    g, owner = _space_parts(space)
    base = g.check_vertex(base)
    if R < 1:
        raise DomainError("radius must be at least 1")
    d = distance_matrix(g) if d is None else d
    if s is None:
        s = four_point_delta(d).delta_doubled
    if s < 0:
        raise InputError("threshold must be non-negative")
    row = d[base]
    verts = np.nonzero(row == R)[0]
    if verts.size == 0:
        raise DomainError(f"no vertex at distance {R} from {base}")
    sub = d[np.ix_(verts, verts)]
    # (u|v) >= R - s  <=>  2R - d(u, v) >= 2R - 2s  <=>  d(u, v) <= 2s
    iu, ju = np.nonzero(np.triu(sub <= 2 * s, k=1))
    sg = MetricGraph.from_edges(len(verts), zip(iu.tolist(), ju.tolist()))
    tags = tuple(None if owner is None or owner[v] < 0 else int(owner[v]) for v in verts)
    return SphereGraph(sg, tuple(int(v) for v in verts), tags, base, R, int(s))


@dataclass(frozen=True)
class PipelineResult:
    sphere: SphereGraph
    trees: tuple[CombinedTree, ...]
    components: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {"radius": self.sphere.radius, "threshold": self.sphere.threshold, "base": self.sphere.base,
                "diagnostic": True, "sphere_vertices": len(self.sphere.vertices),
                "components": [list(c) for c in self.components],
                "trees": [t.to_dict() for t in self.trees]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def boundary_pipeline(space, base: int, R: int, s: int | None = None, d: np.ndarray | None = None) -> PipelineResult:
    """Combined tree of the sphere graph, one per component when it is disconnected.

    Tree vertex sets use sphere-graph vertex ids.
    """
    sg = sphere_graph(space, base, R, s, d)
    comps = connected_components(sg.graph)
    if len(comps) > 1:
        warnings.warn(f"sphere graph at R={R}, s={sg.threshold} has {len(comps)} components; "
                      "returning one tree per component", DisconnectedSphereWarning, stacklevel=2)
    trees = []
    for comp in comps:
        sub, old = induced_subgraph(sg.graph, comp)
        t = combined_tree(sub)
        trees.append(_relabel_tree(t, old))
    return PipelineResult(sg, tuple(trees), tuple(tuple(c) for c in comps))


def _relabel_tree(t: CombinedTree, old: list[int]) -> CombinedTree:
    from .boundary_tree import TreeVertex

    verts = tuple(TreeVertex(v.type, tuple(old[x] for x in v.set), v.block) for v in t.vertices)
    return CombinedTree(verts, t.edges)


def sweep(space, base: int, radii, thresholds) -> list[PipelineResult]:
    """Pipeline over every ``(R, s)`` combination, skipping empty spheres."""
    g, _ = _space_parts(space)
    d = distance_matrix(g)
    out = []
    for R in radii:
        for s in thresholds:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DisconnectedSphereWarning)
                    out.append(boundary_pipeline(space, base, R, s, d))
            except DomainError as exc:
                log.info("skipping R=%s s=%s: %s", R, s, exc)
    return out
