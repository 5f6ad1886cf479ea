"""Cut norm, cut distance and weak regularity for step functions.

For a step kernel the supremum defining the cut norm is attained at unions
of blocks (the form is bilinear in the block averages of ``f`` and ``g``), so
the exact routine scans block subsets ``S`` and picks the best ``T`` per
block sign.  Cut *distances* minimize over rearrangements; everything here
returns certified upper bounds of the true infimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import factorial
from typing import Sequence

import numpy as np

from .errors import CapacityError, DomainError, ParseError
from .graphons import (
    Partition,
    StepGraphon,
    _as_fraction,
    bar,
    clipped_entropy,
    common_refine,
    entropy,
    from_graph,
    split_pieces,
    step,
)
from .graphs import Graph, canonical_mask, count_labelled, enumerate_labelled, pair_list

KERNEL_SCHEMA = "graphonlab/kernel/v1"
MAX_EXACT_BLOCKS = 24
MAX_PERMUTATION_M = 9
MAX_ASSIGNMENTS = 20000
MAX_BLOCK_PERMUTATION = 6
UPPER_BOUND = "UPPER_BOUND"


@dataclass(frozen=True, eq=False)
class Kernel:
    """Signed symmetric step function with values in ``[-1, 1]``."""

    measures: tuple[Fraction, ...]
    values: np.ndarray

    def __init__(self, measures, values):
        ms = tuple(_as_fraction(m) for m in measures)
        vals = np.array(values, dtype=float)
        k = len(ms)
        if k < 1 or vals.shape != (k, k):
            raise DomainError(f"kernel needs a {k}x{k} value matrix, got {vals.shape}")
        if any(m <= 0 for m in ms):
            raise DomainError("block masses must be positive")
        total = sum(ms)
        if abs(float(total) - 1.0) > 1e-12:
            raise DomainError(f"block masses sum to {float(total)!r}, not 1")
        if total != 1:
            ms = tuple(m / total for m in ms)
        if not np.array_equal(vals, vals.T):
            raise DomainError("kernel values must be symmetric")
        if not np.all(np.isfinite(vals)) or np.abs(vals).max() > 1.0:
            raise DomainError("kernel values must lie in [-1, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "measures", ms)
        object.__setattr__(self, "values", vals)

    @property
    def k(self) -> int:
        return len(self.measures)

    @property
    def mu(self) -> np.ndarray:
        return np.array([float(m) for m in self.measures])

    @classmethod
    def difference(cls, u: StepGraphon, v: StepGraphon) -> Kernel:
        """``u - v`` on the common refinement of the two block structures."""
        a, b = common_refine(u, v)
        return cls(a.measures, a.values - b.values)

    def to_dict(self) -> dict:
        return {
            "schema": KERNEL_SCHEMA,
            "measures": [f"{m.numerator}/{m.denominator}" for m in self.measures],
            "values": [[repr(float(x)) for x in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Kernel:
        if not isinstance(doc, dict) or "measures" not in doc or "values" not in doc:
            raise ParseError("kernel document needs 'measures' and 'values'")
        try:
            ms = [_as_fraction(m) for m in doc["measures"]]
            vals = [[float(x) for x in row] for row in doc["values"]]
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad kernel entry: {exc}") from None
        return cls(ms, vals)

    @classmethod
    def from_json(cls, text: str) -> Kernel:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from None
        return cls.from_dict(doc)


@dataclass(frozen=True)
class CutResult:
    value: float
    witness: tuple[tuple[int, ...], tuple[int, ...]]
    exact: bool

    def to_dict(self) -> dict:
        s, t = self.witness
        return {"value": self.value, "S": list(s), "T": list(t), "exact": self.exact}


def evaluate_cut(kern: Kernel, s: Sequence[int], t: Sequence[int]) -> float:
    """``|sum_{i in S, j in T} mu_i mu_j K_ij|``."""
    mu = kern.mu
    s, t = list(s), list(t)
    if not s or not t:
        return 0.0
    return abs(float(mu[s] @ kern.values[np.ix_(s, t)] @ mu[t]))


@lru_cache(maxsize=32)
def _subset_bits(k: int) -> np.ndarray:
    idx = np.arange(1 << k, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(float)


def _weighted(kern: Kernel) -> np.ndarray:
    mu = kern.mu
    return mu[:, None] * kern.values * mu[None, :]


def _subset_sums(a: np.ndarray, low_bits: int = 16):
    """Yield ``(first_index, R)`` where row ``i`` of ``R`` is the sum of the rows
    of ``a`` selected by subset ``first_index + i``."""
    k = a.shape[0]
    lo = min(k, low_bits)
    table = np.zeros((1, k))
    for i in range(lo):
        table = np.concatenate([table, table + a[i]])
    for high in range(1 << (k - lo)):
        offset = np.zeros(k)
        for i in range(k - lo):
            if (high >> i) & 1:
                offset += a[lo + i]
        yield high << lo, table + offset


def cut_norm_exact(kern: Kernel) -> CutResult:
    """Exact cut norm of a step kernel with at most 24 blocks."""
    k = kern.k
    if k > MAX_EXACT_BLOCKS:
        raise CapacityError(f"exact cut norm limited to {MAX_EXACT_BLOCKS} blocks, got {k}")
    a = _weighted(kern)
    best, best_s, best_sign = -1.0, 0, 1
    for first, r in _subset_sums(a):
        pos = np.maximum(r, 0.0).sum(axis=1)
        neg = np.maximum(-r, 0.0).sum(axis=1)
        for arr, sign in ((pos, 1), (neg, -1)):
            j = int(np.argmax(arr))
            if arr[j] > best:
                best, best_s, best_sign = float(arr[j]), first + j, sign
    s = [i for i in range(k) if (best_s >> i) & 1]
    r = a[s].sum(axis=0) if s else np.zeros(k)
    t = [j for j in range(k) if best_sign * r[j] > 0]
    witness = (tuple(s), tuple(t))
    return CutResult(evaluate_cut(kern, *witness), witness, True)


def cut_norm_heuristic(kern: Kernel, restarts: int = 8, seed=0) -> CutResult:
    """Alternating maximization from random starting sets (a lower bound)."""
    a = _weighted(kern)
    k = kern.k
    rng = np.random.Generator(np.random.Philox(seed))
    best, best_w = 0.0, ((), ())
    starts = [np.ones(k, dtype=bool)] + [rng.random(k) < 0.5 for _ in range(max(restarts, 1))]
    for s0 in starts:
        for sign in (1.0, -1.0):
            s = s0.copy()
            val = -1.0
            for _ in range(100):
                t = sign * (s.astype(float) @ a) > 0
                s_new = sign * (a @ t.astype(float)) > 0
                new_val = sign * float(s_new.astype(float) @ a @ t.astype(float))
                if new_val <= val + 1e-15:
                    break
                s, val = s_new, new_val
            t = sign * (s.astype(float) @ a) > 0
            w = (tuple(np.flatnonzero(s).tolist()), tuple(np.flatnonzero(t).tolist()))
            v = evaluate_cut(kern, *w)
            if v > best:
                best, best_w = v, w
    return CutResult(best, best_w, False)


def cut_norm(kern: Kernel, restarts: int = 8, seed=0) -> CutResult:
    """Exact when the kernel is small enough, heuristic otherwise."""
    if kern.k <= MAX_EXACT_BLOCKS:
        return cut_norm_exact(kern)
    return cut_norm_heuristic(kern, restarts=restarts, seed=seed)


def _batch_cut_norms(mu: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Exact cut norms of a stack of kernels sharing the block masses ``mu``."""
    kernels = np.asarray(kernels, dtype=float)
    p, k, _ = kernels.shape
    bits = _subset_bits(k)
    weighted = kernels * mu[None, :, None] * mu[None, None, :]
    out = np.empty(p)
    step_ = max(1, (1 << 22) // (bits.shape[0] * k))
    for lo in range(0, p, step_):
        r = np.einsum("sk,pkj->psj", bits, weighted[lo:lo + step_])
        pos = np.where(r > 0, r, 0.0).sum(axis=2)
        neg = -np.where(r < 0, r, 0.0).sum(axis=2)
        out[lo:lo + step_] = np.maximum(pos.max(axis=1), neg.max(axis=1))
    return out


# -- distances --------------------------------------------------------------


def d_box(u: StepGraphon, v: StepGraphon) -> float:
    """``||u - v||_box`` at the given (identity) alignment."""
    return cut_norm_exact(Kernel.difference(u, v)).value


@dataclass(frozen=True)
class DeltaBound:
    """Upper bound on a cut distance together with the alignment attaining it."""

    value: float
    alignment: tuple[int, ...]
    method: str
    kind: str = UPPER_BOUND

    def to_dict(self) -> dict:
        return {"value": self.value, "alignment": list(self.alignment), "method": self.method, "kind": self.kind}


def _anneal(n_items, cost, swap_ok, rng, iters, start):
    cur = list(start)
    cur_cost = cost(cur)
    best, best_cost = list(cur), cur_cost
    temp0 = 0.05
    for it in range(iters):
        i, j = rng.integers(0, n_items, size=2)
        if i == j or not swap_ok(cur, i, j):
            continue
        cur[i], cur[j] = cur[j], cur[i]
        c = cost(cur)
        temp = temp0 * (1.0 - it / iters) + 1e-9
        if c <= cur_cost or rng.random() < math.exp((cur_cost - c) / temp):
            cur_cost = c
            if c < best_cost:
                best, best_cost = list(cur), c
        else:
            cur[i], cur[j] = cur[j], cur[i]
    return best, best_cost


def _block_permutation_bound(u: StepGraphon, v: StepGraphon):
    best, best_p = math.inf, None
    for p in permutations(range(v.k)):
        val = d_box(u, v.permute(p))
        if val < best:
            best, best_p = val, p
            if val == 0.0:
                break
    return best, best_p


def delta_box_upper(u: StepGraphon, v: StepGraphon, m: int, *, seed=0, iters: int = 4000) -> DeltaBound:
    """Upper bound for the cut distance at resolution ``m``.

    Both graphons are averaged onto the ``m``-interval equipartition and the
    cells of the second are permuted to minimize ``d_box``: exhaustively for
    ``m <= 9``, by simulated annealing beyond.  When ``v`` has at most
    ``MAX_BLOCK_PERMUTATION`` blocks, rearrangements of its own blocks compete
    as well (these reach zero on block-permuted copies of ``u``).
    """
    if m < 1:
        raise DomainError(f"resolution must be >= 1, got {m}")
    um, vm = bar(u, m), bar(v, m)
    mu = um.mu
    U, V = um.values, vm.values
    if m <= MAX_PERMUTATION_M:
        best, best_p = math.inf, tuple(range(m))
        batch = []

        def flush():
            nonlocal best, best_p
            ks = np.stack([U - V[np.ix_(p, p)] for p in batch])
            vals = _batch_cut_norms(mu, ks)
            j = int(np.argmin(vals))
            if vals[j] < best:
                best, best_p = float(vals[j]), batch[j]
            batch.clear()

        for p in permutations(range(m)):
            batch.append(p)
            if len(batch) >= 2048:
                flush()
        if batch:
            flush()
        grid = DeltaBound(d_box(um, vm.permute(best_p)), best_p, "exhaustive")
    else:
        rng = np.random.Generator(np.random.Philox(seed))

        def cost(p):
            return float(_batch_cut_norms(mu, (U - V[np.ix_(p, p)])[None])[0])

        p, _ = _anneal(m, cost, lambda cur, i, j: True, rng, iters, range(m))
        grid = DeltaBound(d_box(um, vm.permute(p)), tuple(p), "annealing")
    if v.k <= MAX_BLOCK_PERMUTATION:
        value, p = _block_permutation_bound(u, v)
        if value < grid.value:
            return DeltaBound(value, p, "block-permutation")
    return grid


@lru_cache(maxsize=256)
def _alignment_layout(n: int, w: StepGraphon):
    """Pieces of the overlay of the ``1/n`` grid with ``w``'s blocks."""
    grid = [Fraction(i, n) for i in range(n + 1)]
    cuts = sorted(set(grid) | set(w.boundaries))
    pos, blk, ms = [], [], []
    bounds = w.boundaries
    ib = 0
    for lo, hi in zip(cuts, cuts[1:]):
        while bounds[ib + 1] <= lo:
            ib += 1
        pos.append(int(lo * n))
        blk.append(ib)
        ms.append(hi - lo)
    # positions lying inside one block are interchangeable
    profile = {}
    for p, b, m in zip(pos, blk, ms):
        profile.setdefault(p, []).append((b, m))
    classes = {}
    for p in range(n):
        classes.setdefault(tuple(profile[p]), []).append(p)
    groups = sorted(classes.values())
    return np.array(pos), np.array(blk), np.array([float(m) for m in ms]), ms, groups


def _assignments(vertices, groups):
    """All ways to fill the position groups with the vertices (multinomial)."""
    if not groups:
        yield []
        return
    for chosen in combinations(vertices, len(groups[0])):
        rest = [x for x in vertices if x not in chosen]
        for tail in _assignments(rest, groups[1:]):
            yield [chosen] + tail


def _order_from(assign, groups, n):
    order = [0] * n
    for chosen, positions in zip(assign, groups):
        for x, p in zip(chosen, positions):
            order[p] = x
    return order


def delta_graph_graphon(g: Graph, w: StepGraphon, *, seed=0, iters: int = 3000,
                        max_assignments: int = MAX_ASSIGNMENTS) -> DeltaBound:
    """Upper bound on the cut distance between ``W_g`` and ``w``.

    Vertices of ``g`` are placed on the ``1/n`` grid; positions lying inside
    the same block of ``w`` are interchangeable, so the search runs over
    assignments of vertices to groups of positions (exhaustive while the
    multinomial count stays below ``max_assignments``, annealing otherwise).
    ``alignment[p]`` is the vertex placed at position ``p``.
    """
    n = g.n
    pos, blk, mu, ms, groups = _alignment_layout(n, w)
    adj = np.array(g.adjacency(), dtype=float)
    wv = w.values[np.ix_(blk, blk)]

    def kernels(orders):
        o = np.asarray(orders)[:, pos]
        return adj[o[:, :, None], o[:, None, :]] - wv[None]

    count = factorial(n)
    for grp in groups:
        count //= factorial(len(grp))
    if count <= max_assignments:
        best, best_o = math.inf, None
        batch = []

        def flush():
            nonlocal best, best_o
            if not batch:
                return
            vals = _batch_cut_norms(mu, kernels(batch))
            j = int(np.argmin(vals))
            if vals[j] < best:
                best, best_o = float(vals[j]), batch[j]
            batch.clear()

        for assign in _assignments(list(range(n)), groups):
            batch.append(_order_from(assign, groups, n))
            if len(batch) >= 512:
                flush()
        flush()
        order, method = best_o, "exhaustive"
    else:
        rng = np.random.Generator(np.random.Philox(seed))
        group_of = {p: t for t, grp in enumerate(groups) for p in grp}

        def cost(o):
            return float(_batch_cut_norms(mu, kernels([o]))[0])

        order, _ = _anneal(n, cost, lambda cur, i, j: group_of[i] != group_of[j], rng, iters, range(n))
        method = "annealing"
    kern = Kernel(ms, kernels([order])[0])
    return DeltaBound(cut_norm_exact(kern).value, tuple(order), method)


# -- weak regularity --------------------------------------------------------


def weak_regularity_bound(k: int) -> float:
    """``4 / sqrt(log2 k)``."""
    if k < 2:
        raise DomainError("the weak regularity bound needs k >= 2")
    return 4.0 / math.sqrt(math.log2(k))


@dataclass(frozen=True, eq=False)
class RegularityResult:
    partition: Partition
    residual: float
    exact: bool
    residual_upper: float
    bound: float
    stepped: StepGraphon
    subject: StepGraphon = field(repr=False)


def _residual(w: StepGraphon, p: Partition, seed):
    left, right, _ = split_pieces(w, p)
    kern = Kernel(left.measures, left.values - right.values)
    res = cut_norm(kern, restarts=16, seed=seed)
    if res.exact:
        return res.value, True, res.value
    l1 = float(kern.mu @ np.abs(kern.values) @ kern.mu)
    return res.value, False, l1


def _rebalance(w: StepGraphon, labels: list[int], k: int) -> Partition:
    # lay the groups out consecutively, then cut the line into k equal pieces
    order = sorted(range(w.k), key=lambda b: (labels[b], b))
    moved = Partition.intervals(w.permute(order), k)
    rows = [None] * w.k
    for t, b in enumerate(order):
        rows[b] = moved.weights[t]
    return Partition(rows)


def _greedy_labels(w: StepGraphon, cap: int, seed) -> list[int]:
    labels = [0] * w.k
    for it in range(64):
        left, right, pieces = split_pieces(w, Partition.from_assignment(labels))
        res = cut_norm(Kernel(left.measures, left.values - right.values), restarts=16, seed=(seed, it))
        if res.value <= 1e-12:
            break
        s, t = (set(pieces[i][0] for i in part) for part in res.witness)
        n_groups = len(set(labels))
        for refine in (lambda b: (labels[b], b in s, b in t), lambda b: (labels[b], b in s),
                       lambda b: (labels[b], b in t)):
            keys = [refine(b) for b in range(w.k)]
            if len(set(keys)) <= cap:
                break
        else:
            break
        if len(set(keys)) == n_groups:
            break
        relabel = {}
        labels = [relabel.setdefault(x, len(relabel)) for x in keys]
    return labels


def weak_regularity(subject: Graph | StepGraphon, k: int, *, seed=0) -> RegularityResult:
    """Greedy Frieze-Kannan partition into ``k`` equal-mass parts.

    Repeatedly extracts a high-discrepancy pair ``(S, T)`` of the residual
    and refines the current grouping of blocks by it while at most ``cap``
    groups result; the grouping is then rebalanced into ``k`` equal parts by
    laying the groups out consecutively and cutting at multiples of ``1/k``.
    Caps run over the divisors of ``k`` (so coarser solutions are refined,
    not discarded), and the plain ``k``-interval equipartition competes too;
    the candidate with the smallest certified residual wins.
    """
    if k < 2:
        raise DomainError(f"weak regularity needs k >= 2, got {k}")
    w = from_graph(subject) if isinstance(subject, Graph) else subject
    candidates = [Partition.intervals(w, k)]
    for cap in (d for d in range(2, k + 1) if k % d == 0):
        candidates.append(_rebalance(w, _greedy_labels(w, cap, seed), k))
    best = None
    for p in candidates:
        r, exact, upper = _residual(w, p, seed)
        key = (upper, r)
        if best is None or key < best[0]:
            best = (key, p, r, exact, upper)
    _, p, r, exact, upper = best
    return RegularityResult(p, r, exact, upper, weak_regularity_bound(k), step(w, p), w)


# -- ball counts ------------------------------------------------------------


MAX_BALL_N = 6


@dataclass(frozen=True)
class BallCount:
    n: int
    delta: float
    n_hat: int
    n_full: int
    n_full_kind: str = "LOWER_BOUND"

    def to_dict(self) -> dict:
        return {"n": self.n, "delta": self.delta, "n_hat": self.n_hat, "n_full": self.n_full,
                "n_full_kind": self.n_full_kind}


@lru_cache(maxsize=16)
def ball_distances(n: int, w: StepGraphon) -> tuple[np.ndarray, np.ndarray]:
    """Per labelled graph on ``[n]`` (indexed by edge mask): ``d_box(W_G, w)``
    and an upper bound of ``delta_box(G, w)`` that never exceeds it."""
    if not 1 <= n <= MAX_BALL_N:
        raise CapacityError(f"ball counts need 1 <= n <= {MAX_BALL_N}, got {n}")
    pos, blk, mu, _, _ = _alignment_layout(n, w)
    total = count_labelled(n)
    masks = np.arange(total, dtype=np.int64)
    pairs = pair_list(n)
    adj = np.zeros((total, n, n))
    for b, (i, j) in enumerate(pairs):
        bit = ((masks >> b) & 1).astype(float)
        adj[:, i, j] = bit
        adj[:, j, i] = bit
    wv = w.values[np.ix_(blk, blk)]
    d_hat = _batch_cut_norms(mu, adj[:, pos[:, None], pos[None, :]] - wv[None])
    per_class = {}
    d_full = np.empty(total)
    for g in enumerate_labelled(n):
        m = g.edge_mask
        c = canonical_mask(g)
        if c not in per_class:
            per_class[c] = delta_graph_graphon(Graph.from_mask(n, c), w).value
        d_full[m] = min(per_class[c], d_hat[m])
    d_hat.setflags(write=False)
    d_full.setflags(write=False)
    return d_hat, d_full


def count_balls(n: int, delta: float, w: StepGraphon) -> BallCount:
    """Number of graphs on ``[n]`` within ``delta`` of ``w``.

    ``n_hat`` uses ``d_box`` at the identity alignment (exact count);
    ``n_full`` uses an upper bound of the cut distance, hence is a certified
    lower bound of the true count.
    """
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    d_hat, d_full = ball_distances(n, w)
    n_hat = int(np.count_nonzero(d_hat <= delta))
    n_full = int(np.count_nonzero(d_full <= delta))
    assert n_hat <= n_full
    return BallCount(n, float(delta), n_hat, n_full)


def hat_ball_bound(n: int, k: int, delta: float, w: StepGraphon) -> float:
    """Upper bound on ``log2(n_hat) / n^2`` from an equipartition of ``[n]`` into ``k`` sets.

    Uses the ``k``-interval equipartition of ``[0,1]``, which corresponds to an
    equipartition of ``[n]`` when ``k`` divides ``n``.
    """
    if not 1 <= k <= n:
        raise DomainError("need 1 <= k <= n")
    if n % k:
        raise DomainError("the interval equipartition matches [n] only when k divides n")
    return (0.5 * entropy(bar(w, k)) + 0.5 * clipped_entropy(4 * k * k * delta)
            + 2 * k * k * math.log2(n) / n ** 2)


__all__ = [
    "Kernel", "CutResult", "DeltaBound", "RegularityResult", "BallCount",
    "evaluate_cut", "cut_norm_exact", "cut_norm_heuristic", "cut_norm", "d_box",
    "delta_box_upper", "delta_graph_graphon", "weak_regularity", "weak_regularity_bound",
    "ball_distances", "count_balls", "hat_ball_bound",
]
