"""Step graphons.

A :class:`StepGraphon` is constant on the cells ``I_i x I_j`` of a finite
partition of ``[0, 1]`` into consecutive intervals ``I_1, ..., I_k``.  Block
masses are kept as exact :class:`~fractions.Fraction` values so that chains of
refinements and averagings do not accumulate drift; the value matrix is a
read-only float array.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

from .errors import CapacityError, DomainError, ParseError
from .graphs import MAX_VERTICES, Graph, count_labelled, orbit_size, pair_list, unlabelled_graphs

SCHEMA = "graphonlab/stepgraphon/v1"
ZERO_TOL = 1e-15
MAX_MAPS = 1 << 22


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Symmetric step function on ``[0,1]^2`` with values in ``[0,1]``.

    Parameters
    ----------
    measures : sequence of rationals
        Positive block masses; normalized to sum exactly to one (the raw sum
        must already be within ``1e-12`` of one).
    values : array_like, shape (k, k)
        Symmetric matrix of block values.
    """

    measures: tuple[Fraction, ...]
    values: np.ndarray

    def __init__(self, measures, values):
        ms = tuple(_as_fraction(m) for m in measures)
        vals = np.array(values, dtype=float)
        k = len(ms)
        if k < 1:
            raise DomainError("a step graphon needs at least one block")
        if vals.shape != (k, k):
            raise DomainError(f"values must be {k}x{k}, got shape {vals.shape}")
        if any(m <= 0 for m in ms):
            raise DomainError("block masses must be positive")
        total = sum(ms)
        if abs(float(total) - 1.0) > 1e-12:
            raise DomainError(f"block masses sum to {float(total)!r}, not 1")
        if total != 1:
            ms = tuple(m / total for m in ms)
        if not np.all(np.isfinite(vals)):
            raise DomainError("values must be finite")
        if not np.array_equal(vals, vals.T):
            raise DomainError("value matrix must be symmetric")
        if vals.min() < 0.0 or vals.max() > 1.0:
            raise DomainError("values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "measures", ms)
        object.__setattr__(self, "values", vals)

    @property
    def k(self) -> int:
        return len(self.measures)

    @property
    def mu(self) -> np.ndarray:
        """Block masses as floats."""
        return np.array([float(m) for m in self.measures])

    @property
    def boundaries(self) -> list[Fraction]:
        out = [Fraction(0)]
        for m in self.measures:
            out.append(out[-1] + m)
        return out

    def __eq__(self, other):
        if not isinstance(other, StepGraphon):
            return NotImplemented
        return self.measures == other.measures and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.measures, self.values.tobytes()))

    def __repr__(self):
        ms = ", ".join(str(m) for m in self.measures)
        return f"StepGraphon(measures=[{ms}], values={self.values.tolist()})"

    def permute(self, order: Sequence[int]) -> StepGraphon:
        """Blocks rearranged so that new block ``t`` is old block ``order[t]``."""
        order = list(order)
        return type(self)([self.measures[i] for i in order], self.values[np.ix_(order, order)])

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "measures": [f"{m.numerator}/{m.denominator}" for m in self.measures],
            "values": [[repr(float(x)) for x in row] for row in self.values],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> StepGraphon:
        if not isinstance(doc, dict) or "measures" not in doc or "values" not in doc:
            raise ParseError("step graphon document needs 'measures' and 'values'")
        schema = doc.get("schema", SCHEMA)
        if not str(schema).endswith("/v1"):
            raise ParseError(f"unsupported schema {schema!r}")
        try:
            ms = [_as_fraction(m) for m in doc["measures"]]
            vals = [[float(x) for x in row] for row in doc["values"]]
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad step graphon entry: {exc}") from None
        return cls(ms, vals)

    @classmethod
    def from_json(cls, text: str) -> StepGraphon:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from None
        return cls.from_dict(doc)


# -- constructors -----------------------------------------------------------


def _uniform(k):
    return [Fraction(1, k)] * k


def _param_fraction(x, name) -> Fraction:
    try:
        return _as_fraction(x)
    except (TypeError, ValueError, ZeroDivisionError):
        raise DomainError(f"{name} must be a number, got {x!r}") from None


def constant(p) -> StepGraphon:
    p = float(_param_fraction(p, "p"))
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"constant graphon needs 0 <= p <= 1, got {p}")
    return StepGraphon([1], [[p]])


def from_graph(g: Graph) -> StepGraphon:
    """The graphon ``W_G``: ``n`` uniform blocks carrying the adjacency matrix."""
    return StepGraphon(_uniform(g.n), g.adjacency())


def _check_int(x, name, lo):
    if isinstance(x, bool) or int(x) != x or x < lo:
        raise DomainError(f"{name} must be an integer >= {lo}, got {x!r}")
    return int(x)


def turan(r) -> StepGraphon:
    """Limit of the Turan graphs ``T(n, r)``: 1 off the diagonal blocks."""
    r = _check_int(r, "r", 1)
    return StepGraphon(_uniform(r), 1.0 - np.eye(r))


def wrs(r, s) -> StepGraphon:
    """``1/2`` between distinct blocks; diagonal block ``i`` is 1 if ``i < s`` else 0."""
    r = _check_int(r, "r", 1)
    s = _check_int(s, "s", 0)
    if s > r:
        raise DomainError(f"need 0 <= s <= r, got r={r}, s={s}")
    vals = np.full((r, r), 0.5)
    for i in range(r):
        vals[i, i] = 1.0 if i < s else 0.0
    return StepGraphon(_uniform(r), vals)


def string_a(a) -> StepGraphon:
    """The string-graph family: ``wrs(4, 4)`` with its first block split at ``a``.

    The two parts (masses ``a`` and ``1/4 - a``) are internally complete and
    mutually non-adjacent.  ``a = 0`` gives ``wrs(4, 4)`` itself.
    """
    a = _param_fraction(a, "a")
    if not 0 <= a <= Fraction(1, 8):
        raise DomainError(f"string family needs 0 <= a <= 1/8, got {a}")
    if a == 0:
        return wrs(4, 4)
    q = Fraction(1, 4)
    vals = np.full((5, 5), 0.5)
    np.fill_diagonal(vals, 1.0)
    vals[0, 1] = vals[1, 0] = 0.0
    return StepGraphon([a, q - a, q, q, q], vals)


_KINDS = {
    "constant": constant,
    "from_graph": from_graph,
    "graph": from_graph,
    "turan": turan,
    "wrs": wrs,
    "string_a": string_a,
    "string": string_a,
}


def make(kind: str, *params) -> StepGraphon:
    """Dispatch to a named constructor (``constant``, ``from_graph``, ``turan``,
    ``wrs``, ``string_a``)."""
    try:
        fn = _KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown graphon kind {kind!r}; choose from {sorted(_KINDS)}") from None
    return fn(*params)


# -- entropy and densities --------------------------------------------------


def binary_entropy(x: float) -> float:
    """``h(x) = -x log2 x - (1-x) log2(1-x)``, with ``h(0) = h(1) = 0``."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy is defined on [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def clipped_entropy(x: float) -> float:
    """``h(min(x, 1/2))`` for ``x >= 0``; nondecreasing, equal to 1 past 1/2."""
    x = float(x)
    if x < 0.0:
        raise DomainError(f"clipped entropy needs x >= 0, got {x}")
    return binary_entropy(min(x, 0.5))


def _h_array(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inner = (v > 0.0) & (v < 1.0)
    x = v[inner]
    out[inner] = -x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x)
    return out


def entropy(w: StepGraphon) -> float:
    """Graphon entropy: the mass-weighted mean of ``h`` over the blocks."""
    mu = w.mu
    return float(mu @ _h_array(w.values) @ mu)


def edge_density(w: StepGraphon) -> float:
    mu = w.mu
    return float(mu @ w.values @ mu)


def randomness_support(w: StepGraphon) -> StepGraphon:
    """Indicator of ``0 < W < 1`` on the same blocks."""
    v = w.values
    sup = ((v > ZERO_TOL) & (v < 1.0 - ZERO_TOL)).astype(float)
    return StepGraphon(w.measures, sup)


# -- partitions and stepping ------------------------------------------------


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of block mass to groups.

    ``weights[b, g]`` is the fraction of block ``b`` placed in group ``g``;
    each row sums to one.  A 0/1 matrix is an ordinary grouping of blocks,
    fractional rows split a block between groups.
    """

    weights: tuple[tuple[Fraction, ...], ...]

    def __init__(self, weights):
        rows = tuple(tuple(_as_fraction(x) for x in row) for row in weights)
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise DomainError("partition weights must be a non-empty rectangular matrix")
        for b, r in enumerate(rows):
            if any(x < 0 for x in r) or sum(r) != 1:
                raise DomainError(f"block {b} must be split into nonnegative parts summing to 1")
        object.__setattr__(self, "weights", rows)

    @property
    def n_blocks(self) -> int:
        return len(self.weights)

    @property
    def n_groups(self) -> int:
        return len(self.weights[0])

    @classmethod
    def from_assignment(cls, labels: Sequence[int]) -> Partition:
        labels = list(labels)
        # groups renumbered by first appearance, empty groups dropped
        seen = {}
        for x in labels:
            seen.setdefault(x, len(seen))
        m = len(seen)
        return cls([[1 if seen[x] == g else 0 for g in range(m)] for x in labels])

    @classmethod
    def identity(cls, k: int) -> Partition:
        return cls.from_assignment(range(k))

    @classmethod
    def intervals(cls, w: StepGraphon, m: int) -> Partition:
        """The ``m``-interval equipartition of ``[0,1]`` expressed on the blocks of ``w``."""
        if m < 1:
            raise DomainError(f"need m >= 1, got {m}")
        bounds = w.boundaries
        rows = []
        for b in range(w.k):
            lo, hi = bounds[b], bounds[b + 1]
            row = []
            for g in range(m):
                glo, ghi = Fraction(g, m), Fraction(g + 1, m)
                overlap = max(Fraction(0), min(hi, ghi) - max(lo, glo))
                row.append(overlap / (hi - lo))
            rows.append(row)
        return cls(rows)

    def group_masses(self, w: StepGraphon) -> list[Fraction]:
        return [sum(w.measures[b] * self.weights[b][g] for b in range(w.k)) for g in range(self.n_groups)]

    def labels(self) -> list[int] | None:
        """Group of each block, or None if some block is split."""
        out = []
        for row in self.weights:
            hits = [g for g, x in enumerate(row) if x]
            if len(hits) != 1:
                return None
            out.append(hits[0])
        return out


def step(w: StepGraphon, p: Partition) -> StepGraphon:
    """Conditional expectation of ``w`` on the product cells of ``p``.

    Groups of zero mass are dropped.
    """
    if p.n_blocks != w.k:
        raise DomainError(f"partition covers {p.n_blocks} blocks, graphon has {w.k}")
    masses = p.group_masses(w)
    keep = [g for g, m in enumerate(masses) if m > 0]
    x = np.array([[float(p.weights[b][g]) for g in keep] for b in range(w.k)])
    mu = w.mu
    a = x * mu[:, None]
    mass = a.sum(axis=0)
    vals = (a.T @ w.values @ a) / np.outer(mass, mass)
    vals = np.clip((vals + vals.T) / 2.0, 0.0, 1.0)
    return StepGraphon([masses[g] for g in keep], vals)


def bar(w: StepGraphon, k: int) -> StepGraphon:
    """Average of ``w`` over the squares of the ``k``-interval equipartition."""
    return step(w, Partition.intervals(w, k))


def split_pieces(w: StepGraphon, p: Partition) -> tuple[StepGraphon, StepGraphon, list[tuple[int, int]]]:
    """``w`` and ``step(w, p)`` written on one common set of pieces.

    A piece is the part of block ``b`` assigned to group ``g``.  Returns the
    two graphons (same measures) and the ``(b, g)`` label of each piece.
    Rearranging pieces is measure preserving and applied to both sides, so
    cut distances between the two outputs equal those between ``w`` and the
    stepped graphon on ``[0,1]^2``.
    """
    stepped = step(w, p)
    masses = p.group_masses(w)
    keep = [g for g, m in enumerate(masses) if m > 0]
    gidx = {g: t for t, g in enumerate(keep)}
    pieces = [(b, g) for b in range(w.k) for g in keep if p.weights[b][g] > 0]
    ms = [w.measures[b] * p.weights[b][g] for b, g in pieces]
    bi = [b for b, _ in pieces]
    gi = [gidx[g] for _, g in pieces]
    left = StepGraphon(ms, w.values[np.ix_(bi, bi)])
    right = StepGraphon(ms, stepped.values[np.ix_(gi, gi)])
    return left, right, pieces


def common_refine(u: StepGraphon, v: StepGraphon) -> tuple[StepGraphon, StepGraphon]:
    """Both graphons written on the overlay of their interval partitions."""
    bu, bv = u.boundaries, v.boundaries
    cuts = sorted(set(bu) | set(bv))
    iu = iv = 0
    ui, vi, ms = [], [], []
    for lo, hi in zip(cuts, cuts[1:]):
        while bu[iu + 1] <= lo:
            iu += 1
        while bv[iv + 1] <= lo:
            iv += 1
        ui.append(iu)
        vi.append(iv)
        ms.append(hi - lo)
    return (
        StepGraphon(ms, u.values[np.ix_(ui, ui)]),
        StepGraphon(ms, v.values[np.ix_(vi, vi)]),
    )


# -- induced densities and W-random graphs -----------------------------------


@lru_cache(maxsize=64)
def _maps(k: int, m: int) -> np.ndarray:
    if k ** m > MAX_MAPS:
        raise CapacityError(f"{k}^{m} block maps exceed the limit of {MAX_MAPS}")
    return np.indices((k,) * m).reshape(m, -1).T.copy()


class _DensityTable:
    """Per-map weights and pair values for ``p(H; w)`` over all ``H`` on ``m`` vertices."""

    def __init__(self, w: StepGraphon, m: int):
        phi = _maps(w.k, m)
        mu = w.mu
        self.weight = np.prod(mu[phi], axis=1) if m else np.ones(1)
        self.pairs = pair_list(m)
        self.on = [w.values[phi[:, i], phi[:, j]] for i, j in self.pairs]
        self.off = [1.0 - x for x in self.on]

    def p(self, g: Graph) -> float:
        acc = self.weight.copy()
        rows = g.rows
        for t, (i, j) in enumerate(self.pairs):
            acc *= self.on[t] if (rows[i] >> j) & 1 else self.off[t]
        return float(acc.sum())


MAX_PATTERN = 12


def p_induced(h: Graph, w: StepGraphon) -> float:
    """Probability that ``G(|h|, w)`` equals the labelled graph ``h``."""
    if h.n > MAX_PATTERN:
        raise CapacityError(f"pattern graphs are limited to {MAX_PATTERN} vertices")
    return _DensityTable(w, h.n).p(h)


def is_kr_free(w: StepGraphon, r: int) -> bool:
    """Whether ``p(K_r; w) = 0``.

    A block whose diagonal value is positive already carries every clique,
    so ``w`` is ``K_r``-free iff its diagonal is zero and the off-diagonal
    support graph on the blocks has clique number below ``r``.
    """
    r = _check_int(r, "r", 1)
    if r == 1:
        return False
    sup = w.values > ZERO_TOL
    k = w.k
    if r == 2:
        return not sup.any()
    if sup.diagonal().any():
        return False
    nbr = [sum(1 << j for j in range(k) if sup[i, j] and i != j) for i in range(k)]
    return _clique_number(nbr, k) < r


def _clique_number(nbr, k):
    best = 0

    def grow(size, cand):
        nonlocal best
        if not cand:
            best = max(best, size)
            return
        if size + cand.bit_count() <= best:
            return
        while cand:
            v = cand.bit_length() - 1
            cand &= ~(1 << v)
            grow(size + 1, cand & nbr[v])
            if size + cand.bit_count() <= best:
                return

    grow(0, (1 << k) - 1)
    return best


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def sample(w: StepGraphon, n: int, seed) -> Graph:
    """Draw ``G(n, w)``: block labels i.i.d. by mass, then independent edges.

    ``seed`` keys a counter-based Philox stream, so a draw depends only on
    ``(w, n, seed)``.
    """
    if not 1 <= n <= MAX_VERTICES:
        raise CapacityError(f"sampling needs 1 <= n <= {MAX_VERTICES}, got {n}")
    rng = _rng(seed)
    return _draw(w, n, rng)


def sample_labels(w: StepGraphon, n: int, rng) -> np.ndarray:
    mu = w.mu
    return rng.choice(w.k, size=n, p=mu / mu.sum())


def _draw(w, n, rng):
    x = sample_labels(w, n, rng)
    prob = w.values[np.ix_(x, x)]
    coins = rng.random((n, n))
    adj = np.triu(coins < prob, 1)
    rows = [0] * n
    for i, j in zip(*np.nonzero(adj)):
        rows[i] |= 1 << int(j)
        rows[j] |= 1 << int(i)
    return Graph._trusted(n, tuple(rows))


MAX_RG_ENTROPY = 7


def exact_rg_entropy(w: StepGraphon, n: int) -> float:
    """Shannon entropy (bits) of the labelled random graph ``G(n, w)``.

    ``p(H; w)`` is invariant under relabelling ``H``, so the sum over all
    labelled graphs is taken over isomorphism classes weighted by orbit size.
    """
    if not 1 <= n <= MAX_RG_ENTROPY:
        raise CapacityError(f"exact random-graph entropy needs 1 <= n <= {MAX_RG_ENTROPY}")
    table = _DensityTable(w, n)
    total = 0.0
    for g in unlabelled_graphs(n):
        p = table.p(g)
        if p > 0.0:
            total -= orbit_size(g) * p * math.log2(p)
    return total


def rg_entropy_lower_bound(w: StepGraphon, n: int) -> float:
    """``C(n,2) * Ent(w)``, a lower bound for :func:`exact_rg_entropy`."""
    return comb(n, 2) * entropy(w)


def labelled_distribution(w: StepGraphon, n: int) -> np.ndarray:
    """``p(H; w)`` for every ``H`` on ``[n]``, indexed by edge mask."""
    if n > 6:
        raise CapacityError("the labelled distribution table is limited to n <= 6")
    table = _DensityTable(w, n)
    return np.array([table.p(Graph.from_mask(n, m)) for m in range(count_labelled(n))])


__all__ = [
    "StepGraphon", "Partition", "constant", "from_graph", "turan", "wrs", "string_a", "make",
    "binary_entropy", "clipped_entropy", "entropy", "edge_density", "randomness_support",
    "step", "bar", "split_pieces", "common_refine", "p_induced", "is_kr_free", "sample",
    "exact_rg_entropy", "rg_entropy_lower_bound", "labelled_distribution",
]
