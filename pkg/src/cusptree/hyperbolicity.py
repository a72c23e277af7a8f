"""Four-point Gromov hyperbolicity of finite metric graphs.

For a quadruple the three pair sums ``d(x,y)+d(z,w)``, ``d(x,z)+d(y,w)`` and
``d(x,w)+d(y,z)`` are sorted ``L >= M >= S`` and the quadruple contributes
``(L - M) / 2``.  All arithmetic is done on doubled values (``L - M``) so the
result stays an exact integer.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, InputError
from .metric_graph import MetricGraph, distance_matrix

THREADS_ENV = "CUSPTREE_THREADS"


@dataclass(frozen=True)
class DeltaReport:
    delta_doubled: int
    mode: str  # "exhaustive" or "sampled"
    witness: tuple[int, int, int, int]
    seed: int | None = None
    count: int | None = None

    @property
    def delta(self) -> float:
        return self.delta_doubled / 2

    def to_dict(self) -> dict:
        out = {"delta": self.delta, "delta_doubled": self.delta_doubled, "mode": self.mode,
               "witness": list(self.witness)}
        if self.mode == "sampled":
            out.update(seed=self.seed, count=self.count)
        return out


def quadruple_gap(d: np.ndarray, x: int, y: int, z: int, w: int) -> int:
    """Doubled four-point contribution ``L - M`` of one quadruple."""
    sums = sorted((d[x, y] + d[z, w], d[x, z] + d[y, w], d[x, w] + d[y, z]), reverse=True)
    return int(sums[0] - sums[1])


def _check(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InputError("distance matrix must be square")
    if not np.isfinite(d).all():
        raise DomainError("four-point delta is undefined on a disconnected graph")
    return d.astype(np.int64)


def _scan_rows(d: np.ndarray, xs: Iterable[int]) -> tuple[int, tuple[int, int, int, int]]:
    n = d.shape[0]
    best = -1
    wit = (0, 0, 0, 0)
    for x in xs:
        dx = d[x]
        for y in range(x + 1, n):
            dy = d[y]
            a = d[x, y] + d
            b = dx[:, None] + dy[None, :]
            c = b.T
            hi = np.maximum(np.maximum(a, b), c)
            lo = np.minimum(np.minimum(a, b), c)
            gap = 2 * hi - (a + b + c - lo)  # L - M with M = a + b + c - L - S
            k = int(gap.argmax())
            g = int(gap.flat[k])
            if g > best:
                best = g
                wit = (x, y, k // n, k % n)
    return best, wit


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def four_point_delta(d: np.ndarray, mode: str = "exhaustive", seed: int | None = None,
                     count: int = 100_000, threads: int | None = None) -> DeltaReport:
    """Exact (exhaustive) or sampled four-point delta of a connected distance matrix.

    The exhaustive scan splits the first index across threads; partial
    results are merged in index order, so the witness does not depend on the
    thread count.
    """
    d = _check(d)
    n = d.shape[0]
    if mode == "sampled":
        if seed is None:
            raise InputError("sampled mode requires an explicit seed")
        if n == 0:
            return DeltaReport(0, mode, (0, 0, 0, 0), seed, count)
        rng = np.random.default_rng(seed)
        q = rng.integers(0, n, size=(count, 4))
        x, y, z, w = q.T
        s1 = d[x, y] + d[z, w]
        s2 = d[x, z] + d[y, w]
        s3 = d[x, w] + d[y, z]
        hi = np.maximum(np.maximum(s1, s2), s3)
        lo = np.minimum(np.minimum(s1, s2), s3)
        gap = 2 * hi - (s1 + s2 + s3 - lo)
        k = int(gap.argmax())
        return DeltaReport(int(gap[k]), mode, tuple(int(v) for v in q[k]), seed, count)
    if mode != "exhaustive":
        raise InputError(f"unknown mode {mode!r}")
    if n < 4:
        return DeltaReport(0, mode, (0, 0, 0, 0))
    threads = threads or _threads()
    if threads == 1:
        best, wit = _scan_rows(d, range(n))
    else:
        step = max(1, n // (4 * threads))
        chunks = [range(i, min(n, i + step)) for i in range(0, n, step)]
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda xs: _scan_rows(d, xs), chunks))
        best, wit = -1, (0, 0, 0, 0)
        for g, w in parts:
            if g > best:
                best, wit = g, w
    return DeltaReport(best, mode, wit)


# -- growth scans -------------------------------------------------------------------------

Recipe = Callable[[int], MetricGraph]


def _recipes() -> dict[str, Recipe]:
    from .cusp import build_horoball
    from .groups import GroupModel, cayley_ball
    from .metric_graph import cycle_graph, path_graph

    def horoball_cycle(n: int) -> MetricGraph:
        from .cusp import default_depth
        return build_horoball(cycle_graph(n), default_depth([n // 2])).graph

    def horoball_path(n: int) -> MetricGraph:
        from .cusp import default_depth
        return build_horoball(path_graph(n), default_depth([n - 1])).graph

    return {
        "horoball_cycle": horoball_cycle,
        "horoball_path": horoball_path,
        "free_abelian_ball": lambda r: cayley_ball(GroupModel("free_abelian", rank=2), r).graph,
        "free_ball": lambda r: cayley_ball(GroupModel("free", rank=2), r).graph,
    }


RECIPES = ("free_abelian_ball", "free_ball", "horoball_cycle", "horoball_path")


def delta_growth_scan(family: str | Recipe, params: Sequence[int], mode: str = "exhaustive",
                      seed: int | None = None, count: int = 100_000) -> list[tuple[int, DeltaReport]]:
    """Delta of ``family(p)`` for each parameter ``p``."""
    recipe = _recipes().get(family) if isinstance(family, str) else family
    if recipe is None:
        raise InputError(f"unknown recipe {family!r}; expected one of {RECIPES}")
    out = []
    for p in params:
        g = recipe(p)
        out.append((p, four_point_delta(distance_matrix(g), mode, seed, count)))
    return out


def scan_to_csv(series: Sequence[tuple[int, DeltaReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "delta_doubled", "witness", "mode", "seed"])
    for p, r in series:
        w.writerow([p, r.delta_doubled, " ".join(map(str, r.witness)), r.mode, "" if r.seed is None else r.seed])
    return buf.getvalue()
