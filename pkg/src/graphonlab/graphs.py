"""Finite labelled graphs: representation, enumeration, canonical forms,
subgraph densities and graph6 serialization.

A :class:`Graph` stores one adjacency bitmask per vertex, so a graph on at
most 64 vertices fits in a tuple of machine words.  Edge masks index the
vertex pairs in graph6 (column-major upper-triangle) order, i.e. pair
``(i, j)`` with ``i < j`` is bit ``j*(j-1)//2 + i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, perm
from typing import Callable, Iterable, Iterator, Sequence

from .errors import CapacityError, DomainError, ParseError, SizeError

MAX_VERTICES = 64
MAX_ENUMERATION = 8


@lru_cache(maxsize=None)
def pair_list(n: int) -> tuple[tuple[int, int], ...]:
    """Vertex pairs of ``[n]`` in edge-mask bit order."""
    return tuple((i, j) for j in range(1, n) for i in range(j))


def pair_index(i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    ``rows[v]`` is the bitmask of neighbours of ``v``.  Instances are
    immutable and hashable.
    """

    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"graphs need at least one vertex, got {self.n}")
        if self.n > MAX_VERTICES:
            raise CapacityError(f"graphs have at most {MAX_VERTICES} vertices, got {self.n}")
        if len(self.rows) != self.n:
            raise DomainError("need one adjacency row per vertex")
        full = (1 << self.n) - 1
        for v, r in enumerate(self.rows):
            if r & ~full or (r >> v) & 1:
                raise DomainError(f"row {v} has an out-of-range bit or a loop")
            for u in _bits(r):
                if not (self.rows[u] >> v) & 1:
                    raise DomainError(f"adjacency not symmetric at ({v}, {u})")

    # -- constructors -------------------------------------------------------

    @classmethod
    def _trusted(cls, n: int, rows: tuple[int, ...]) -> Graph:
        # skips validation; callers guarantee symmetric loop-free rows
        g = object.__new__(cls)
        object.__setattr__(g, "n", n)
        object.__setattr__(g, "rows", rows)
        return g

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> Graph:
        rows = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise DomainError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            if u == v:
                raise DomainError("loops are not allowed")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, tuple(rows))

    @classmethod
    def from_mask(cls, n: int, mask: int) -> Graph:
        rows = [0] * n
        for b, (i, j) in enumerate(pair_list(n)):
            if (mask >> b) & 1:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
        return cls._trusted(n, tuple(rows))

    @classmethod
    def from_matrix(cls, adj) -> Graph:
        n = len(adj)
        return cls.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n) if adj[i][j]))

    # -- queries ------------------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.rows[u] >> v) & 1)

    def degree(self, v: int) -> int:
        return self.rows[v].bit_count()

    @property
    def num_edges(self) -> int:
        return sum(r.bit_count() for r in self.rows) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for (i, j) in pair_list(self.n) if (self.rows[i] >> j) & 1]

    @property
    def edge_mask(self) -> int:
        m = 0
        for b, (i, j) in enumerate(pair_list(self.n)):
            if (self.rows[i] >> j) & 1:
                m |= 1 << b
        return m

    def adjacency(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.n)] for r in self.rows]

    # -- derived graphs -----------------------------------------------------

    def induced(self, vertices: Sequence[int]) -> Graph:
        """Induced subgraph, relabelled ``vertices[k] -> k``."""
        rows = []
        for u in vertices:
            r = self.rows[u]
            rows.append(sum(1 << k for k, w in enumerate(vertices) if (r >> w) & 1))
        return Graph._trusted(len(vertices), tuple(rows))

    def relabel(self, perm_: Sequence[int]) -> Graph:
        """Graph with old vertex ``v`` renamed to ``perm_[v]``."""
        rows = [0] * self.n
        for v, r in enumerate(self.rows):
            rows[perm_[v]] = sum(1 << perm_[u] for u in _bits(r))
        return Graph._trusted(self.n, tuple(rows))

    def complement(self) -> Graph:
        full = (1 << self.n) - 1
        return Graph._trusted(self.n, tuple(full & ~r & ~(1 << v) for v, r in enumerate(self.rows)))

    def delete_vertex(self, v: int) -> Graph:
        return self.induced([u for u in range(self.n) if u != v])

    def add_vertex(self, neighbours: int) -> Graph:
        """Append vertex ``n`` adjacent to the vertices in bitmask ``neighbours``."""
        n = self.n
        rows = [r | (((neighbours >> v) & 1) << n) for v, r in enumerate(self.rows)]
        rows.append(neighbours)
        if n + 1 > MAX_VERTICES:
            raise CapacityError(f"graphs have at most {MAX_VERTICES} vertices")
        return Graph._trusted(n + 1, tuple(rows))

    def __repr__(self):
        return f"Graph(n={self.n}, g6={to_graph6(self)!r})"


def _bits(x: int) -> Iterator[int]:
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


# -- named graphs -----------------------------------------------------------


def empty(n: int) -> Graph:
    return Graph(n, (0,) * n)


def complete(n: int) -> Graph:
    full = (1 << n) - 1
    return Graph(n, tuple(full & ~(1 << v) for v in range(n)))


def path(n: int) -> Graph:
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def cycle(n: int) -> Graph:
    if n < 3:
        raise DomainError("cycles need at least 3 vertices")
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def complete_bipartite(a: int, b: int) -> Graph:
    return Graph.from_edges(a + b, ((i, a + j) for i in range(a) for j in range(b)))


def matching(m: int) -> Graph:
    """``m`` disjoint edges (``2K_2`` for ``m = 2``)."""
    return Graph.from_edges(2 * m, ((2 * i, 2 * i + 1) for i in range(m)))


# -- enumeration ------------------------------------------------------------


def count_labelled(n: int) -> int:
    return 1 << comb(n, 2)


def enumerate_labelled(n: int, start: int = 0, stop: int | None = None) -> Iterator[Graph]:
    """Yield the graphs on ``[n]`` with edge masks ``start <= m < stop``.

    The full range is ``0 .. 2**C(n,2)``; disjoint sub-ranges can be consumed
    independently by parallel workers.
    """
    if not 1 <= n <= MAX_ENUMERATION:
        raise CapacityError(f"full enumeration needs 1 <= n <= {MAX_ENUMERATION}, got {n}")
    total = count_labelled(n)
    stop = total if stop is None else min(stop, total)
    for m in range(max(start, 0), stop):
        yield Graph.from_mask(n, m)


# -- canonical labelling ----------------------------------------------------
#
# Individualization-refinement: equitable refinement of an ordered partition,
# then branching on the first smallest non-singleton cell.  At each node only
# one child per orbit of the node's automorphism group is explored; orbits
# come from explicit isomorphism tests, which is cheap at n <= 10.


def _refine(rows, cells):
    while True:
        masks = [sum(1 << v for v in c) for c in cells]
        out = []
        split = False
        for c in cells:
            if len(c) == 1:
                out.append(c)
                continue
            keyed = {}
            for v in c:
                key = tuple((rows[v] & m).bit_count() for m in masks)
                keyed.setdefault(key, []).append(v)
            if len(keyed) > 1:
                split = True
                out.extend(keyed[k] for k in sorted(keyed))
            else:
                out.append(c)
        cells = out
        if not split:
            return cells


def _signature(rows, cells):
    masks = [sum(1 << v for v in c) for c in cells]
    return tuple(len(c) for c in cells), tuple(
        (rows[c[0]] & m).bit_count() for c in cells for m in masks
    )


def _target(cells):
    best = None
    for t, c in enumerate(cells):
        if len(c) > 1 and (best is None or len(c) < len(cells[best])):
            best = t
    return best


def _individualize(cells, t, v):
    rest = [u for u in cells[t] if u != v]
    return cells[:t] + [[v], rest] + cells[t + 1:]


def _isomorphic(rows_a, cells_a, rows_b, cells_b) -> bool:
    cells_a = _refine(rows_a, cells_a)
    cells_b = _refine(rows_b, cells_b)
    if _signature(rows_a, cells_a) != _signature(rows_b, cells_b):
        return False
    t = _target(cells_a)
    if t is None:
        mapping = {c[0]: d[0] for c, d in zip(cells_a, cells_b)}
        return all(
            rows_b[mapping[v]] == sum(1 << mapping[u] for u in _bits(r))
            for v, r in enumerate(rows_a)
        )
    v = cells_a[t][0]
    left = _individualize(cells_a, t, v)
    return any(
        _isomorphic(rows_a, left, rows_b, _individualize(cells_b, t, w)) for w in cells_b[t]
    )


def _orbit_reps(rows, cells, t):
    reps = []
    sizes = []
    for w in cells[t]:
        cw = _individualize(cells, t, w)
        for k, r in enumerate(reps):
            if _isomorphic(rows, _individualize(cells, t, r), rows, cw):
                sizes[k] += 1
                break
        else:
            reps.append(w)
            sizes.append(1)
    return reps, sizes


def _order_mask(rows, order):
    pos = {v: k for k, v in enumerate(order)}
    m = 0
    for v, r in enumerate(rows):
        pv = pos[v]
        for u in _bits(r):
            pu = pos[u]
            if pv < pu:
                m |= 1 << (pu * (pu - 1) // 2 + pv)
    return m


def _canon(rows, cells):
    cells = _refine(rows, cells)
    t = _target(cells)
    if t is None:
        return _order_mask(rows, [c[0] for c in cells])
    reps, _ = _orbit_reps(rows, cells, t)
    return max(_canon(rows, _individualize(cells, t, v)) for v in reps)


def _aut(rows, cells):
    cells = _refine(rows, cells)
    t = _target(cells)
    if t is None:
        return 1
    v = cells[t][0]
    cv = _individualize(cells, t, v)
    orbit = sum(1 for w in cells[t] if _isomorphic(rows, cv, rows, _individualize(cells, t, w)))
    return orbit * _aut(rows, cv)


@lru_cache(maxsize=1 << 18)
def _canonical_mask_cached(n, rows):
    return _canon(rows, [list(range(n))])


def canonical_mask(g: Graph) -> int:
    """Edge mask of the canonical relabelling of ``g`` (an isomorphism invariant)."""
    return _canonical_mask_cached(g.n, g.rows)


def canonicalize(g: Graph) -> Graph:
    """Isomorphic copy of ``g`` in canonical labelling.

    ``canonicalize(a) == canonicalize(b)`` iff ``a`` and ``b`` are isomorphic.
    """
    return Graph.from_mask(g.n, canonical_mask(g))


def is_isomorphic(a: Graph, b: Graph) -> bool:
    if a.n != b.n or a.num_edges != b.num_edges:
        return False
    return canonical_mask(a) == canonical_mask(b)


@lru_cache(maxsize=1 << 16)
def _aut_cached(n, rows):
    return _aut(rows, [list(range(n))])


def automorphism_count(g: Graph) -> int:
    """Order of the automorphism group, by orbit-stabilizer recursion."""
    return _aut_cached(g.n, g.rows)


def orbit_size(g: Graph) -> int:
    """Number of labelled graphs on ``[n]`` isomorphic to ``g``."""
    return perm(g.n) // automorphism_count(g)


def extend_classes(reps: Iterable[Graph], keep: Callable[[Graph], bool] | None = None) -> list[Graph]:
    """Canonical representatives of one-vertex extensions of ``reps``.

    If ``reps`` lists every member on ``n`` vertices of a hereditary class
    whose membership test is ``keep``, the result lists every member on
    ``n + 1`` vertices, sorted by canonical mask.
    """
    seen = {}
    for g in reps:
        for nb in range(1 << g.n):
            h = g.add_vertex(nb)
            if keep is not None and not keep(h):
                continue
            m = canonical_mask(h)
            if m not in seen:
                seen[m] = h.n
    return [Graph.from_mask(n, m) for m, n in sorted(seen.items())]


@lru_cache(maxsize=None)
def unlabelled_graphs(n: int) -> tuple[Graph, ...]:
    """One canonical representative per isomorphism class on ``n`` vertices."""
    if not 1 <= n <= MAX_ENUMERATION:
        raise CapacityError(f"unlabelled generation needs 1 <= n <= {MAX_ENUMERATION}")
    if n == 1:
        return (empty(1),)
    return tuple(extend_classes(unlabelled_graphs(n - 1)))


# -- subgraph densities -----------------------------------------------------


def induced_count(h: Graph, g: Graph) -> int:
    """Number of injective maps ``V(h) -> V(g)`` that embed ``h`` as induced subgraph."""
    if h.n > g.n:
        raise SizeError(f"pattern has {h.n} vertices, host only {g.n}")
    k = h.n
    phi = [0] * k

    def extend(u, used):
        if u == k:
            return 1
        total = 0
        hr = h.rows[u]
        for x in range(g.n):
            if (used >> x) & 1:
                continue
            gr = g.rows[x]
            if all(((hr >> w) & 1) == ((gr >> phi[w]) & 1) for w in range(u)):
                phi[u] = x
                total += extend(u + 1, used | (1 << x))
        return total

    return extend(0, 0)


def induced_density_exact(h: Graph, g: Graph) -> Fraction:
    return Fraction(induced_count(h, g), perm(g.n, h.n))


def induced_density(h: Graph, g: Graph) -> float:
    """Induced density ``p(h; g)`` of ``h`` in ``g``."""
    return float(induced_density_exact(h, g))


def hom_count(h: Graph, g: Graph) -> int:
    k = h.n
    phi = [0] * k

    def extend(u):
        if u == k:
            return 1
        total = 0
        earlier = [w for w in _bits(h.rows[u]) if w < u]
        for x in range(g.n):
            gr = g.rows[x]
            if all((gr >> phi[w]) & 1 for w in earlier):
                phi[u] = x
                total += extend(u + 1)
        return total

    return extend(0)


def hom_density_exact(h: Graph, g: Graph) -> Fraction:
    return Fraction(hom_count(h, g), g.n ** h.n)


def hom_density(h: Graph, g: Graph) -> float:
    """Homomorphism density ``t(h; g)``."""
    return float(hom_density_exact(h, g))


def is_free_of(g: Graph, forbidden: Sequence[Graph]) -> bool:
    """True iff no induced subgraph of ``g`` is isomorphic to a forbidden graph.

    Forbidden graphs larger than ``g`` cannot occur and are skipped.
    """
    for f in forbidden:
        if f.n > g.n:
            continue
        e = f.num_edges
        if f.n == 1 or e == comb(f.n, 2) or e == 0:
            # complete or edgeless: edge count alone decides isomorphism
            for sub in combinations(range(g.n), f.n):
                if _induced_edges(g, sub) == e:
                    return False
            continue
        key = canonical_mask(f)
        for sub in combinations(range(g.n), f.n):
            if _induced_edges(g, sub) == e and canonical_mask(g.induced(sub)) == key:
                return False
    return True


def _induced_edges(g, sub):
    m = 0
    for v in sub:
        m |= 1 << v
    return sum((g.rows[v] & m).bit_count() for v in sub) // 2


# -- graph6 -----------------------------------------------------------------

_HEADER = ">>graph6<<"


def to_graph6(g: Graph) -> str:
    """Encode ``g`` in the graph6 format (without header)."""
    n = g.n
    if n <= 62:
        out = [chr(n + 63)]
    else:
        out = ["~"] + [chr(((n >> s) & 63) + 63) for s in (12, 6, 0)]
    bits = [(g.rows[i] >> j) & 1 for (i, j) in pair_list(n)]
    bits += [0] * (-len(bits) % 6)
    for k in range(0, len(bits), 6):
        v = 0
        for b in bits[k:k + 6]:
            v = (v << 1) | b
        out.append(chr(v + 63))
    return "".join(out)


def from_graph6(text: str) -> Graph:
    """Decode one graph6 string.  Raises :class:`ParseError` with a byte offset."""
    s = text.strip()
    base = 0
    if s.startswith(_HEADER):
        base = len(_HEADER)
        s = s[base:]
    if not s:
        raise ParseError("empty graph6 string", base)
    for k, ch in enumerate(s):
        if not 63 <= ord(ch) <= 126:
            raise ParseError(f"invalid graph6 character {ch!r}", base + k)
    if s[0] == "~":
        if len(s) >= 2 and s[1] == "~":
            raise ParseError("graphs with more than 258047 vertices are not supported", base + 1)
        if len(s) < 4:
            raise ParseError("truncated vertex count", base + len(s))
        n = ((ord(s[1]) - 63) << 12) | ((ord(s[2]) - 63) << 6) | (ord(s[3]) - 63)
        head = 4
    else:
        n = ord(s[0]) - 63
        head = 1
    if n < 1:
        raise ParseError("graph6 encodes a graph with no vertices", base)
    if n > MAX_VERTICES:
        raise CapacityError(f"graph6 string has {n} vertices; limit is {MAX_VERTICES}")
    need = -(-comb(n, 2) // 6)
    body = s[head:]
    if len(body) != need:
        raise ParseError(f"expected {need} data bytes for n={n}, got {len(body)}", base + head + min(len(body), need))
    rows = [0] * n
    pairs = pair_list(n)
    for k, ch in enumerate(body):
        v = ord(ch) - 63
        for b in range(6):
            idx = 6 * k + b
            if (v >> (5 - b)) & 1:
                if idx >= len(pairs):
                    raise ParseError("nonzero padding bits", base + head + k)
                i, j = pairs[idx]
                rows[i] |= 1 << j
                rows[j] |= 1 << i
    return Graph(n, tuple(rows))


def read_graph6_file(path) -> list[Graph]:
    """Newline-delimited graph6 corpus; blank lines are ignored."""
    graphs = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            if line.strip():
                graphs.append(from_graph6(line))
    return graphs


def write_graph6_file(path, graphs: Iterable[Graph]) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for g in graphs:
            fh.write(to_graph6(g) + "\n")
