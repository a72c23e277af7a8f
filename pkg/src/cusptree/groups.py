"""Group families with exact word problems, Cayley balls and peripheral cosets.

Three families are supported: free groups, free abelian groups and finite
groups given by a multiplication table.  Each family has a solvable word
problem and decidable membership in the peripheral subgroups we allow, so
every construction built on top of a :class:`CayleyBall` is exact.

Words are written over single-letter generators ``a, b, c, ...``; a trailing
``-`` (or ``^-1`` / ``⁻¹``) marks an inverse, so ``"aba-b-"`` is the
commutator ``[a, b]``.  Finite groups use element names as letters and words
may separate them with whitespace (``"g g g"``).
"""
from __future__ import annotations

import math
import re
import string
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import InputError, UnsupportedFamilyError
from .metric_graph import MetricGraph

FAMILIES = ("free", "free_abelian", "finite")

Token = tuple[int, int]  # (letter index, +1 or -1)
Element = Hashable

_INVERSE_SUFFIX = re.compile(r"(\^-1|⁻¹|-)")


@dataclass(frozen=True)
class PeripheralSpec:
    name: str
    generators: tuple[str, ...]


@dataclass(frozen=True)
class GroupModel:
    """A group family together with an ordered generating set.

    ``generators`` are words over the family's letters; when empty the
    standard letters are used (for finite groups a greedy generating set is
    chosen from the table).
    """

    family: str
    rank: int = 0
    table: tuple[tuple[int, ...], ...] = ()
    names: tuple[str, ...] = ()
    generators: tuple[str, ...] = ()
    peripherals: tuple[PeripheralSpec, ...] = ()
    # User-asserted hypothesis that no peripheral is properly relatively
    # hyperbolic; recorded only, never checked.
    peripherals_not_relatively_hyperbolic: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown group family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "finite":
            self._validate_table()
        elif not 1 <= self.rank <= 26:
            raise InputError("rank must be between 1 and 26")
        for p in self.peripherals:
            if not p.generators:
                raise InputError(f"peripheral {p.name!r} has no generators")
            for w in p.generators:
                if self.evaluate(w) == self.identity:
                    raise InputError(f"peripheral {p.name!r}: generator {w!r} reduces to the identity")

    # -- alphabet --------------------------------------------------------------

    @cached_property
    def letters(self) -> tuple[str, ...]:
        if self.family == "finite":
            return self.names or tuple(f"g{i}" for i in range(len(self.table)))
        return tuple(string.ascii_lowercase[: self.rank])

    def parse(self, word: str) -> list[Token]:
        """Tokenize a word string; raises :class:`InputError` on unknown symbols."""
        if not isinstance(word, str):
            raise InputError(f"word must be a string, got {type(word).__name__}")
        letters = {s: i for i, s in enumerate(self.letters)}
        tokens: list[Token] = []
        if any(len(s) > 1 for s in self.letters):
            chunks = word.split()
        else:
            chunks = re.findall(r"\S(?:\^-1|⁻¹|-)?", word)
        for chunk in chunks:
            m = _INVERSE_SUFFIX.search(chunk)
            if m and m.end() == len(chunk) and chunk[: m.start()] in letters:
                tokens.append((letters[chunk[: m.start()]], -1))
            elif chunk in letters:
                tokens.append((letters[chunk], 1))
            else:
                raise InputError(f"symbol {chunk!r} is not in the alphabet {self.letters}")
        return tokens

    # -- group law ---------------------------------------------------------------

    def _validate_table(self):
        t = self.table
        k = len(t)
        if k == 0 or any(len(row) != k for row in t):
            raise InputError("multiplication table must be square and nonempty")
        if any(not 0 <= x < k for row in t for x in row):
            raise InputError("multiplication table entries out of range")
        if any(sorted(row) != list(range(k)) for row in t):
            raise InputError("multiplication table rows must be permutations")
        if any(sorted(t[i][j] for i in range(k)) != list(range(k)) for j in range(k)):
            raise InputError("multiplication table columns must be permutations")
        ident = [e for e in range(k) if all(t[e][x] == x and t[x][e] == x for x in range(k))]
        if len(ident) != 1:
            raise InputError("multiplication table has no two-sided identity")
        for x in range(k):
            for y in range(k):
                for z in range(k):
                    if t[t[x][y]][z] != t[x][t[y][z]]:
                        raise InputError("multiplication table is not associative")
        if self.names and len(self.names) != k:
            raise InputError("names must list one name per table row")

    @cached_property
    def identity(self) -> Element:
        if self.family == "free":
            return ()
        if self.family == "free_abelian":
            return (0,) * self.rank
        k = len(self.table)
        return next(e for e in range(k) if all(self.table[e][x] == x for x in range(k)))

    def multiply(self, x: Element, y: Element) -> Element:
        if self.family == "free":
            out = list(x)
            for s in y:
                if out and out[-1] == -s:
                    out.pop()
                else:
                    out.append(s)
            return tuple(out)
        if self.family == "free_abelian":
            return tuple(a + b for a, b in zip(x, y))
        return self.table[x][y]

    def inverse(self, x: Element) -> Element:
        if self.family == "free":
            return tuple(-s for s in reversed(x))
        if self.family == "free_abelian":
            return tuple(-a for a in x)
        return self.table[x].index(self.identity)

    def power(self, x: Element, k: int) -> Element:
        base = x if k >= 0 else self.inverse(x)
        out = self.identity
        for _ in range(abs(k)):
            out = self.multiply(out, base)
        return out

    def letter_element(self, tok: Token) -> Element:
        i, e = tok
        if self.family == "free":
            return ((i + 1) * e,)
        if self.family == "free_abelian":
            v = [0] * self.rank
            v[i] = e
            return tuple(v)
        return i if e == 1 else self.inverse(i)

    def evaluate(self, word: str) -> Element:
        out = self.identity
        for tok in self.parse(word):
            out = self.multiply(out, self.letter_element(tok))
        return out

    def render(self, x: Element) -> str:
        """Canonical string for a group element."""
        if self.family == "free":
            return "".join(self.letters[abs(s) - 1] + ("-" if s < 0 else "") for s in x)
        if self.family == "free_abelian":
            parts = []
            for i, e in enumerate(x):
                parts.append((self.letters[i] + ("-" if e < 0 else "")) * abs(e))
            return "".join(parts)
        return self.letters[x]

    def word_length(self, x: Element) -> int:
        """Length with respect to the standard letters (not ``generators``)."""
        if self.family == "free":
            return len(x)
        if self.family == "free_abelian":
            return sum(abs(a) for a in x)
        raise UnsupportedFamilyError("word length of finite-group elements depends on the generating set")

    # -- generating set ------------------------------------------------------------

    @cached_property
    def generator_elements(self) -> tuple[Element, ...]:
        """Ordered symmetric generating set (each generator followed by its inverse)."""
        if self.generators:
            base = [self.evaluate(w) for w in self.generators]
        elif self.family == "finite":
            base = self._greedy_finite_generators()
        else:
            base = [self.letter_element((i, 1)) for i in range(self.rank)]
        out: list[Element] = []
        for g in base:
            for h in (g, self.inverse(g)):
                if h != self.identity and h not in out:
                    out.append(h)
        if not out and not (self.family == "finite" and len(self.table) == 1):
            raise InputError("generating set is empty")
        return tuple(out)

    def _greedy_finite_generators(self) -> list[int]:
        chosen: list[int] = []
        sub = {self.identity}
        for x in range(len(self.table)):
            if x not in sub:
                chosen.append(x)
                sub = self._closure(chosen)
        return chosen

    def _closure(self, gens: Sequence[int]) -> set[int]:
        sub = {self.identity}
        frontier = [self.identity]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.table[x][g]
                    if y not in sub:
                        sub.add(y)
                        nxt.append(y)
            frontier = nxt
        return sub

    # -- peripheral subgroups --------------------------------------------------------

    def peripheral(self, name: str) -> PeripheralSpec:
        for p in self.peripherals:
            if p.name == name:
                return p
        raise InputError(f"no peripheral named {name!r}")

    def _free_cyclic(self, p: PeripheralSpec) -> tuple[Element, int, int]:
        """(w, |u|, |c|) where w = u c u^-1 with c cyclically reduced."""
        if len(p.generators) != 1:
            raise UnsupportedFamilyError(
                "free-group peripherals must be cyclic (one generating word) for exact membership")
        w = self.evaluate(p.generators[0])
        i = 0
        while 2 * i + 1 < len(w) and w[i] == -w[len(w) - 1 - i]:
            i += 1
        return w, i, len(w) - 2 * i

    @cached_property
    def _lattice_cache(self) -> dict:
        return {}

    def _lattice(self, p: PeripheralSpec) -> list[list[int]]:
        key = p.generators
        if key not in self._lattice_cache:
            self._lattice_cache[key] = _hermite_rows([list(self.evaluate(w)) for w in p.generators])
        return self._lattice_cache[key]

    @cached_property
    def _subgroup_cache(self) -> dict:
        return {}

    def _finite_subgroup(self, p: PeripheralSpec) -> dict[int, int]:
        """Elements of the finite subgroup mapped to their word length in p's generators."""
        key = p.generators
        if key not in self._subgroup_cache:
            gens = []
            for w in p.generators:
                g = self.evaluate(w)
                gens += [g, self.inverse(g)]
            dist = {self.identity: 0}
            queue = deque([self.identity])
            while queue:
                x = queue.popleft()
                for g in gens:
                    y = self.table[x][g]
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        queue.append(y)
            self._subgroup_cache[key] = dist
        return self._subgroup_cache[key]

    def peripheral_length(self, p: PeripheralSpec, x: Element) -> int | None:
        """Word length of ``x`` in ``<p>`` w.r.t. p's generators; ``None`` if ``x`` is not in ``<p>``.

        Free abelian peripherals with linearly dependent generators raise
        :class:`UnsupportedFamilyError`; callers fall back to graph distances.
        """
        if self.family == "free":
            w, ulen, clen = self._free_cyclic(p)
            if x == self.identity:
                return 0
            k, rem = divmod(len(x) - 2 * ulen, clen)
            if k <= 0 or rem:
                return None
            for kk in (k, -k):
                if self.power(w, kk) == x:
                    return k
            return None
        if self.family == "free_abelian":
            coeffs = _solve_coefficients([self.evaluate(w) for w in p.generators], x)
            if coeffs is None:
                return None
            return sum(abs(c) for c in coeffs)
        return self._finite_subgroup(p).get(x)

    def in_peripheral(self, p: PeripheralSpec, x: Element) -> bool:
        if self.family == "free_abelian":
            return _reduce_mod_lattice(self._lattice(p), list(x)) == [0] * self.rank
        return self.peripheral_length(p, x) is not None

    def coset_key(self, p: PeripheralSpec, x: Element) -> Hashable:
        """Canonical identifier of the left coset ``x<p>``."""
        if self.family == "free_abelian":
            return tuple(_reduce_mod_lattice(self._lattice(p), list(x)))
        if self.family == "finite":
            return min(self.table[x][h] for h in self._finite_subgroup(p))
        w, ulen, clen = self._free_cyclic(p)
        bound = (2 * len(x) + 2 * ulen) // clen + 1
        best = x
        for k in range(-bound, bound + 1):
            y = self.multiply(x, self.power(w, k))
            if (len(y), y) < (len(best), best):
                best = y
        return best


def _hermite_rows(vectors: list[list[int]]) -> list[list[int]]:
    """Row echelon basis of the integer lattice spanned by ``vectors`` (positive pivots)."""
    rows = [list(v) for v in vectors if any(v)]
    basis: list[list[int]] = []
    ncols = len(vectors[0]) if vectors else 0
    col = 0
    while rows and col < ncols:
        active = [r for r in rows if r[col]]
        rows = [r for r in rows if not r[col]]
        while len(active) > 1:
            active.sort(key=lambda r: abs(r[col]))
            piv = active[0]
            kept = [piv]
            for r in active[1:]:
                q = r[col] // piv[col]
                r = [a - q * b for a, b in zip(r, piv)]
                if r[col]:
                    kept.append(r)
                elif any(r):
                    rows.append(r)
            active = kept
        if active:
            piv = active[0]
            basis.append(piv if piv[col] > 0 else [-a for a in piv])
        col += 1
    # reduce entries above pivots for a canonical basis
    for i, row in enumerate(basis):
        pc = next(j for j, a in enumerate(row) if a)
        for k in range(i):
            q = basis[k][pc] // row[pc]
            basis[k] = [a - q * b for a, b in zip(basis[k], row)]
    return basis


def _reduce_mod_lattice(basis: list[list[int]], v: list[int]) -> list[int]:
    v = list(v)
    for row in basis:
        pc = next(j for j, a in enumerate(row) if a)
        q = v[pc] // row[pc]
        v = [a - q * b for a, b in zip(v, row)]
    return v


def _solve_coefficients(gens: list[tuple[int, ...]], x: Sequence[int]) -> list[int] | None:
    """Integer coefficients expressing ``x`` in linearly independent ``gens``."""
    m = [[Fraction(g[i]) for g in gens] + [Fraction(x[i])] for i in range(len(x))]
    ncols = len(gens)
    r = 0
    pivots = []
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pr is None:
            raise UnsupportedFamilyError("free abelian peripheral generators must be linearly independent")
        m[r], m[pr] = m[pr], m[r]
        piv = m[r][c]
        m[r] = [a / piv for a in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    if any(m[i][-1] != 0 for i in range(r, len(m))):
        return None
    sol = [m[i][-1] for i in range(r)]
    if any(s.denominator != 1 for s in sol):
        return None
    return [int(s) for s in sol]


def normal_form(m: GroupModel, word: str) -> str:
    """Canonical word: freely reduced, sorted exponents, or a finite element name."""
    return m.render(m.evaluate(word))


# -- Cayley balls --------------------------------------------------------------------


@dataclass(frozen=True)
class CayleyBall:
    """Ball of the Cayley graph around the identity (vertex 0).

    Vertex ids follow breadth-first discovery with generators tried in order,
    which is shortlex order of the shortlex-least geodesic words.
    """

    model: GroupModel
    radius: int
    graph: MetricGraph
    elements: tuple[Element, ...]
    words: tuple[str, ...]

    @cached_property
    def index(self) -> dict[Element, int]:
        return {x: i for i, x in enumerate(self.elements)}

    @property
    def n(self) -> int:
        return self.graph.n

    def vertex_of(self, word: str) -> int | None:
        return self.index.get(self.model.evaluate(word))


def cayley_ball(m: GroupModel, radius: int) -> CayleyBall:
    if radius < 0:
        raise InputError("radius must be non-negative")
    gens = m.generator_elements
    gen_words = [m.render(g) for g in gens]
    elements = [m.identity]
    words = [""]
    index = {m.identity: 0}
    level = [0]
    for _ in range(radius):
        nxt = []
        for u in level:
            for g, gw in zip(gens, gen_words):
                y = m.multiply(elements[u], g)
                if y not in index:
                    index[y] = len(elements)
                    elements.append(y)
                    words.append((words[u] + " " + gw).strip() if m.family == "finite" else "")
                    nxt.append(index[y])
        if not nxt:
            break
        level = nxt
    edges = []
    for u, x in enumerate(elements):
        for g in gens:
            v = index.get(m.multiply(x, g))
            if v is not None and v != u:
                edges.append((u, v))
    if m.family != "finite":
        words = [m.render(x) for x in elements]
    labels = dict(enumerate(words))
    graph = MetricGraph.from_edges(len(elements), edges, labels)
    return CayleyBall(m, radius, graph, tuple(elements), tuple(words))


@dataclass(frozen=True)
class CosetPiece:
    """Intersection of a coset ``g<p>`` with a Cayley ball."""

    peripheral: str
    rep: int  # least vertex id in the piece (its shortlex-least member)
    members: tuple[int, ...]


def coset_pieces(ball: CayleyBall, m: GroupModel, p: PeripheralSpec | str) -> list[CosetPiece]:
    """Partition of the ball's vertices into cosets of ``<p>``, ordered by representative."""
    if isinstance(p, str):
        p = m.peripheral(p)
    groups: dict[Hashable, list[int]] = {}
    for v, x in enumerate(ball.elements):
        groups.setdefault(m.coset_key(p, x), []).append(v)
    pieces = [CosetPiece(p.name, min(vs), tuple(sorted(vs))) for vs in groups.values()]
    pieces.sort(key=lambda c: c.rep)
    return pieces


def piece_distances(ball: CayleyBall, m: GroupModel, p: PeripheralSpec | str,
                    piece: CosetPiece) -> tuple[np.ndarray, bool]:
    """Intrinsic word metric of ``<p>`` restricted to a piece.

    Returns ``(matrix, exact)``.  ``exact`` is false when the family cannot
    compute the subgroup word length directly and distances were taken in the
    graph of generator moves inside the piece instead.
    """
    if isinstance(p, str):
        p = m.peripheral(p)
    xs = [ball.elements[v] for v in piece.members]
    k = len(xs)
    d = np.zeros((k, k))
    try:
        for i in range(k):
            inv = m.inverse(xs[i])
            for j in range(i + 1, k):
                length = m.peripheral_length(p, m.multiply(inv, xs[j]))
                if length is None:
                    raise InputError("piece members do not share a coset")
                d[i, j] = d[j, i] = length
        return d, True
    except UnsupportedFamilyError:
        pass
    from .metric_graph import distance_matrix

    moves = []
    for w in p.generators:
        g = m.evaluate(w)
        moves += [g, m.inverse(g)]
    pos = {x: i for i, x in enumerate(xs)}
    edges = [(i, pos[y]) for i, x in enumerate(xs) for g in moves
             if (y := m.multiply(x, g)) in pos and pos[y] != i]
    return distance_matrix(MetricGraph.from_edges(k, edges)), False


def left_translate(ball: CayleyBall, m: GroupModel, g: str | Element) -> dict[int, int]:
    """Partial map ``v -> g.v`` on ball vertices whose image stays in the ball."""
    x = m.evaluate(g) if isinstance(g, str) else g
    out = {}
    for v, y in enumerate(ball.elements):
        w = ball.index.get(m.multiply(x, y))
        if w is not None:
            out[v] = w
    return out


# -- spec files -------------------------------------------------------------------------


def model_from_dict(data: Mapping) -> GroupModel:
    family = data.get("family")
    if family not in FAMILIES:
        raise InputError(f"unknown group family {family!r}; expected one of {FAMILIES}")
    peripherals = []
    for p in data.get("peripherals", []) or []:
        gens = p.get("generators")
        if not gens:
            raise InputError("each peripheral needs a nonempty 'generators' list")
        peripherals.append(PeripheralSpec(str(p.get("name", f"P{len(peripherals)}")), tuple(gens)))
    kwargs = dict(
        family=family,
        generators=tuple(data.get("generators", ()) or ()),
        peripherals=tuple(peripherals),
        peripherals_not_relatively_hyperbolic=bool(data.get("peripherals_not_relatively_hyperbolic", False)),
    )
    if family == "finite":
        table = data.get("table")
        if not table:
            raise InputError("finite family needs a 'table'")
        kwargs["table"] = tuple(tuple(int(x) for x in row) for row in table)
        kwargs["names"] = tuple(data.get("names", ()) or ())
    else:
        if "rank" not in data:
            raise InputError(f"{family} family needs a 'rank'")
        kwargs["rank"] = int(data["rank"])
    return GroupModel(**kwargs)


def model_to_dict(m: GroupModel) -> dict:
    out: dict = {"family": m.family}
    if m.family == "finite":
        out["table"] = [list(r) for r in m.table]
        if m.names:
            out["names"] = list(m.names)
    else:
        out["rank"] = m.rank
    if m.generators:
        out["generators"] = list(m.generators)
    out["peripherals"] = [{"name": p.name, "generators": list(p.generators)} for p in m.peripherals]
    if m.peripherals_not_relatively_hyperbolic:
        out["peripherals_not_relatively_hyperbolic"] = True
    return out


def cyclic_group(order: int, name: str = "g") -> GroupModel:
    """Z/order as a finite model with element names ``e, g, g2, ...``."""
    table = tuple(tuple((i + j) % order for j in range(order)) for i in range(order))
    names = ("e",) + tuple(name if i == 1 else f"{name}{i}" for i in range(1, order))
    return GroupModel("finite", table=table, names=names, generators=(name,) if order > 1 else ())


def log2_ceil(x: int) -> int:
    return 0 if x <= 1 else math.ceil(math.log2(x))
