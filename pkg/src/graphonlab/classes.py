"""Hereditary graph classes: membership, censuses, colouring numbers and
uniform sampling of labelled members.

Censuses never scan ``L_n`` directly.  Members of a hereditary class on
``n + 1`` vertices are one-vertex extensions of members on ``n`` vertices, so
the isomorphism classes are generated level by level and each class
contributes ``n! / |Aut|`` labelled graphs.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import accumulate
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, DomainError, EmptyClassError, Inconclusive, ParseError
from .graphs import (
    MAX_ENUMERATION,
    Graph,
    _bits,
    complete,
    cycle,
    empty,
    enumerate_labelled,
    extend_classes,
    from_graph6,
    is_free_of,
    matching,
    orbit_size,
    read_graph6_file,
    to_graph6,
    unlabelled_graphs,
)

MAX_CRS_N = 12
MAX_MCMC_N = 40
AT_CAP = "AT_CAP"
HEURISTIC = "HEURISTIC"


@dataclass(frozen=True)
class HereditaryClass:
    """A named hereditary class with a builtin membership test.

    ``kind`` is one of ``bipartite``, ``kt_free``, ``split``, ``crs``, ``all``
    or ``forbidden``; ``params`` holds ``(t,)`` or ``(r, s)`` and
    ``forbidden`` the excluded induced subgraphs.
    """

    name: str
    kind: str
    params: tuple = ()
    forbidden: tuple[Graph, ...] = field(default=(), repr=False)
    description: str = field(default="", compare=False)

    def __contains__(self, g: Graph) -> bool:
        return contains(self, g)


def bipartite() -> HereditaryClass:
    return HereditaryClass("bipartite", "bipartite", description="2-colourable graphs")


def kt_free(t: int) -> HereditaryClass:
    if int(t) != t or t < 1:
        raise DomainError(f"kt_free needs an integer t >= 1, got {t!r}")
    t = int(t)
    return HereditaryClass(f"kt_free:{t}", "kt_free", (t,), description=f"graphs without a {t}-clique")


def split() -> HereditaryClass:
    return HereditaryClass("split", "split", description="clique plus independent set")


def crs(r: int, s: int) -> HereditaryClass:
    if int(r) != r or int(s) != s or r < 1 or not 0 <= s <= r:
        raise DomainError(f"crs needs integers r >= 1 and 0 <= s <= r, got {r!r}, {s!r}")
    r, s = int(r), int(s)
    return HereditaryClass(
        f"crs:{r},{s}", "crs", (r, s),
        description=f"vertex set splits into {s} cliques and {r - s} independent sets",
    )


def all_graphs() -> HereditaryClass:
    return HereditaryClass("all", "all", description="every graph")


def forbidden(graphs: Sequence[Graph], name: str | None = None) -> HereditaryClass:
    graphs = tuple(graphs)
    if name is None:
        name = "forbidden:" + ",".join(to_graph6(g) for g in graphs)
    return HereditaryClass(name, "forbidden", (), graphs, description="induced-subgraph-free graphs")


def parse_class(text: str) -> HereditaryClass:
    """Parse the registry syntax: ``bipartite``, ``split``, ``all``,
    ``kt_free:4``, ``crs:3,1``, ``forbidden:@file.g6`` or ``forbidden:Bw,Bo``."""
    head, _, arg = text.strip().partition(":")
    try:
        if head == "bipartite" and not arg:
            return bipartite()
        if head == "split" and not arg:
            return split()
        if head == "all" and not arg:
            return all_graphs()
        if head == "kt_free":
            return kt_free(int(arg))
        if head == "crs":
            r, s = (int(x) for x in arg.split(","))
            return crs(r, s)
        if head == "forbidden" and arg:
            if arg.startswith("@"):
                return forbidden(read_graph6_file(arg[1:]), name=text.strip())
            return forbidden([from_graph6(x) for x in arg.split(",")])
    except ValueError as exc:
        if isinstance(exc, (ParseError, DomainError)):
            raise
        raise DomainError(f"bad class parameters in {text!r}") from None
    raise DomainError(f"unknown graph class {text!r}")


# -- membership ---------------------------------------------------------------


def is_bipartite(g: Graph) -> bool:
    colour = [-1] * g.n
    for root in range(g.n):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        stack = [root]
        while stack:
            v = stack.pop()
            for u in _bits(g.rows[v]):
                if colour[u] < 0:
                    colour[u] = 1 - colour[v]
                    stack.append(u)
                elif colour[u] == colour[v]:
                    return False
    return True


def crs_member(g: Graph, r: int, s: int) -> bool:
    """Whether ``V(g)`` splits into ``s`` cliques and ``r - s`` independent sets."""
    if r < 1 or not 0 <= s <= r:
        raise DomainError(f"need r >= 1 and 0 <= s <= r, got r={r}, s={s}")
    if g.n > MAX_CRS_N:
        raise CapacityError(f"crs membership is exhaustive; limited to {MAX_CRS_N} vertices")
    rows = g.rows
    parts = [0] * r
    # vertices in decreasing degree order fail faster
    order = sorted(range(g.n), key=lambda v: -rows[v].bit_count())

    def place(idx):
        if idx == len(order):
            return True
        v = order[idx]
        bit = 1 << v
        tried_empty_clique = tried_empty_indep = False
        for p in range(r):
            m = parts[p]
            if p < s:
                if m == 0:
                    if tried_empty_clique:
                        continue
                    tried_empty_clique = True
                elif m & ~rows[v]:
                    continue
            else:
                if m == 0:
                    if tried_empty_indep:
                        continue
                    tried_empty_indep = True
                elif m & rows[v]:
                    continue
            parts[p] = m | bit
            if place(idx + 1):
                parts[p] = m
                return True
            parts[p] = m
        return False

    return place(0)


def is_split_by_degrees(g: Graph) -> bool:
    """Split recognition from the degree sequence alone."""
    d = sorted((r.bit_count() for r in g.rows), reverse=True)
    m = max(i for i in range(1, g.n + 1) if d[i - 1] >= i - 1)
    return sum(d[:m]) == m * (m - 1) + sum(d[m:])


def contains(c: HereditaryClass, g: Graph) -> bool:
    """Membership test of ``g`` in ``c``."""
    kind = c.kind
    if kind == "all":
        return True
    if kind == "bipartite":
        return is_bipartite(g)
    if kind == "kt_free":
        return is_free_of(g, [complete(c.params[0])])
    if kind == "split":
        if g.n <= MAX_CRS_N:
            return crs_member(g, 2, 1)
        return is_split_by_degrees(g)
    if kind == "crs":
        return crs_member(g, *c.params)
    if kind == "forbidden":
        return is_free_of(g, c.forbidden)
    raise DomainError(f"unknown class kind {kind!r}")


SPLIT_FORBIDDEN = (matching(2), cycle(4), cycle(5))


# -- censuses -----------------------------------------------------------------


@dataclass(frozen=True)
class CensusRow:
    n: int
    labelled_count: int
    unlabelled_count: int
    exponent: float | None

    def to_dict(self) -> dict:
        return {"n": self.n, "labelled": self.labelled_count, "unlabelled": self.unlabelled_count,
                "exponent": self.exponent}


def _check_n(n, cap=MAX_ENUMERATION):
    if not 1 <= n <= cap:
        raise CapacityError(f"need 1 <= n <= {cap}, got {n}")


@lru_cache(maxsize=None)
def members(c: HereditaryClass, n: int) -> tuple[Graph, ...]:
    """Canonical representatives of the isomorphism classes of ``c`` on ``n`` vertices."""
    _check_n(n)
    if c.kind == "all":
        return unlabelled_graphs(n)
    if n == 1:
        g = empty(1)
        return (g,) if contains(c, g) else ()
    return tuple(extend_classes(members(c, n - 1), keep=lambda h: contains(c, h)))


@lru_cache(maxsize=None)
def _orbit_table(c: HereditaryClass, n: int) -> tuple[tuple[Graph, ...], tuple[int, ...]]:
    reps = members(c, n)
    return reps, tuple(accumulate(orbit_size(g) for g in reps))


def _exponent(labelled, n):
    if n < 2 or labelled == 0:
        return None
    return math.log2(labelled) / comb(n, 2)


def census(c: HereditaryClass, n: int, method: str = "orbits") -> CensusRow:
    """Labelled and unlabelled member counts on ``n <= 8`` vertices.

    ``method="scan"`` counts labelled members by testing every graph on
    ``[n]`` (an independent check, practical up to ``n = 6``).
    """
    _check_n(n)
    reps, cum = _orbit_table(c, n)
    if method == "orbits":
        labelled = cum[-1] if cum else 0
    elif method == "scan":
        labelled = sum(1 for g in enumerate_labelled(n) if contains(c, g))
    else:
        raise DomainError(f"unknown census method {method!r}")
    return CensusRow(n, labelled, len(reps), _exponent(labelled, n))


class ColouringNumber(NamedTuple):
    r: int
    s: int
    at_cap: bool


@lru_cache(maxsize=None)
def colouring_number(c: HereditaryClass, t_max: int = 5, n_check: int = 6) -> ColouringNumber:
    """Largest ``t <= t_max`` with ``C(t, u)`` contained in ``c`` for some ``u``.

    Containment is certified on all graphs with ``n_check`` vertices (one per
    isomorphism class, membership being isomorphism invariant).  ``s`` is the
    smallest witnessing ``u``; ``at_cap`` flags that ``t_max`` itself passed,
    so the true value may be larger.
    """
    if not 1 <= t_max <= 5:
        raise CapacityError(f"t_max must be in 1..5, got {t_max}")
    if not 1 <= n_check <= 7:
        raise CapacityError(f"n_check must be in 1..7, got {n_check}")
    reps = unlabelled_graphs(n_check)
    inside = [contains(c, g) for g in reps]
    found = None
    for t in range(1, t_max + 1):
        for u in range(t + 1):
            if all(ok or not crs_member(g, t, u) for g, ok in zip(reps, inside)):
                found = (t, u)
                break
    if found is None:
        raise Inconclusive(f"{c.name}: no C(t,u) with t <= {t_max} is contained at n = {n_check}")
    return ColouringNumber(found[0], found[1], found[0] == t_max)


def max_entropy_prediction(c: HereditaryClass, t_max: int = 5, n_check: int = 6) -> float:
    """``1 - 1/r`` for the colouring number ``r`` of ``c``.

    The class of all graphs has ``r`` infinite and prediction 1.
    """
    if c.kind == "all":
        return 1.0
    cn = colouring_number(c, t_max, n_check)
    if cn.at_cap:
        raise Inconclusive(f"{c.name}: colouring number is at least {cn.r} (cap reached)")
    return 1.0 - 1.0 / cn.r


@dataclass(frozen=True)
class GrowthSeries:
    cls: HereditaryClass
    rows: tuple[CensusRow, ...]
    prediction: float | None
    colouring: ColouringNumber | None


def growth_series(c: HereditaryClass, n_max: int) -> GrowthSeries:
    """Census rows for ``n = 2..n_max`` with the predicted limit of the exponent."""
    _check_n(n_max)
    rows = tuple(census(c, n) for n in range(2, n_max + 1))
    try:
        prediction = max_entropy_prediction(c)
    except Inconclusive:
        prediction = None
    colouring = None
    if c.kind != "all":
        try:
            colouring = colouring_number(c)
        except Inconclusive:
            pass
    return GrowthSeries(c, rows, prediction, colouring)


# -- uniform sampling ---------------------------------------------------------


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def draw_uniform(c: HereditaryClass, n: int, rng: np.random.Generator) -> Graph:
    """Uniform labelled member of ``c`` on ``[n]`` using ``rng``."""
    if c.kind == "all":
        # every labelled graph is a member: one fair coin per pair
        bits = rng.integers(0, 2, size=comb(n, 2))
        return Graph.from_mask(n, int(sum(int(b) << i for i, b in enumerate(bits))))
    reps, cum = _orbit_table(c, n)
    if not reps:
        raise EmptyClassError(f"{c.name} has no members on {n} vertices")
    x = int(rng.integers(cum[-1]))
    g = reps[bisect_right(cum, x)]
    return g.relabel(rng.permutation(n).tolist())


def uniform_exact(c: HereditaryClass, n: int, seed) -> Graph:
    """Uniformly random labelled member of ``c`` on ``n <= 8`` vertices.

    An isomorphism class is chosen with probability proportional to its
    number of labellings, then a uniform relabelling is applied.
    """
    _check_n(n)
    return draw_uniform(c, n, _rng(seed))


class ChainDraw(NamedTuple):
    graph: Graph
    steps: int
    seed: object
    tag: str = HEURISTIC


def _has_clique(rows, cand, size):
    if size == 0:
        return True
    while cand.bit_count() >= size:
        v = cand.bit_length() - 1
        cand &= ~(1 << v)
        if _has_clique(rows, cand & rows[v], size - 1):
            return True
    return False


def _toggle_ok(c, rows, n, u, v, adding):
    if c.kind == "all":
        return True
    if c.kind == "kt_free":
        if not adding:
            return True
        return not _has_clique(rows, rows[u] & rows[v], c.params[0] - 2)
    new = list(rows)
    new[u] ^= 1 << v
    new[v] ^= 1 << u
    g = Graph._trusted(n, tuple(new))
    if c.kind == "bipartite" and not adding:
        return True
    return contains(c, g)


def mcmc_chain(c: HereditaryClass, n: int, seed, burn_in: int = 0, thin: int = 1):
    """Single-edge-toggle Metropolis chain on the members of ``c``.

    Proposals are symmetric and the target is uniform, so a toggle is
    accepted iff the result stays in the class.  Yields the state every
    ``thin`` steps after ``burn_in`` steps; mixing is not certified.
    """
    if not 1 <= n <= MAX_MCMC_N:
        raise CapacityError(f"MCMC sampler supports 1 <= n <= {MAX_MCMC_N}, got {n}")
    if not contains(c, empty(n)):
        raise EmptyClassError(f"{c.name} does not contain the empty graph on {n} vertices")
    rng = _rng(seed)
    rows = [0] * n
    if n < 2:
        while True:
            yield Graph._trusted(n, tuple(rows))
    pairs = [(i, j) for j in range(1, n) for i in range(j)]
    t = 0
    while True:
        picks = rng.integers(len(pairs), size=4096)
        for p in picks:
            u, v = pairs[p]
            adding = not (rows[u] >> v) & 1
            if _toggle_ok(c, rows, n, u, v, adding):
                rows[u] ^= 1 << v
                rows[v] ^= 1 << u
            t += 1
            if t >= burn_in and (t - burn_in) % thin == 0:
                yield Graph._trusted(n, tuple(rows))


def uniform_mcmc(c: HereditaryClass, n: int, steps: int, seed) -> ChainDraw:
    """State of the toggle chain after ``steps`` steps from the empty graph."""
    if steps < 0:
        raise DomainError("steps must be nonnegative")
    if steps == 0:
        if not 1 <= n <= MAX_MCMC_N:
            raise CapacityError(f"MCMC sampler supports 1 <= n <= {MAX_MCMC_N}, got {n}")
        if not contains(c, empty(n)):
            raise EmptyClassError(f"{c.name} does not contain the empty graph on {n} vertices")
        return ChainDraw(empty(n), 0, seed)
    g = next(mcmc_chain(c, n, seed, burn_in=steps, thin=1))
    return ChainDraw(g, steps, seed)


__all__ = [
    "HereditaryClass", "CensusRow", "ColouringNumber", "GrowthSeries", "ChainDraw",
    "bipartite", "kt_free", "split", "crs", "all_graphs", "forbidden", "parse_class",
    "contains", "crs_member", "is_bipartite", "is_split_by_degrees", "census", "members",
    "colouring_number", "max_entropy_prediction", "growth_series", "uniform_exact",
    "draw_uniform", "mcmc_chain", "uniform_mcmc", "SPLIT_FORBIDDEN", "AT_CAP", "HEURISTIC",
]

