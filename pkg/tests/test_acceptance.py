"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS`` or ``criterion N: FAIL`` line
to the terminal (outside pytest's capture) before asserting.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from graphonlab.classes import bipartite, census, colouring_number, crs, growth_series, kt_free, split
from graphonlab.classes import all_graphs
from graphonlab.cutmetrics import Kernel, count_balls, cut_norm_exact, cut_norm_heuristic, hat_ball_bound
from graphonlab.experiments import run_convergence, run_regularity, standard_corpus
from graphonlab.graphons import (
    StepGraphon,
    constant,
    edge_density,
    entropy,
    exact_rg_entropy,
    from_graph,
    is_kr_free,
    labelled_distribution,
    p_induced,
    sample,
    string_a,
    turan,
    wrs,
)
from graphonlab.graphs import Graph, count_labelled, unlabelled_graphs, orbit_size


@pytest.fixture
def verdict(capsys):
    """Print the PASS/FAIL line for a criterion, then assert it."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} ({title}): {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  [{detail}]"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return record


def test_criterion_01_entropy_identities(verdict):
    worst = max(abs(entropy(wrs(r, s)) - (1 - 1 / r)) for r in range(1, 7) for s in range(r + 1))
    rng = np.random.default_rng(101)
    graphs = []
    for _ in range(100):
        n = int(rng.integers(1, 20))
        graphs.append(Graph.from_mask(n, int(rng.integers(0, 2 ** min(62, math.comb(n, 2))))))
    random_free = all(entropy(from_graph(g)) == 0.0 for g in graphs)
    ok = worst <= 1e-12 and entropy(constant(Fraction(1, 2))) == 1.0 and random_free
    verdict(1, "entropy identities", ok, f"max err {worst:.1e}")


def test_criterion_02_string_family(verdict):
    errs = [abs(edge_density(string_a(a)) - float(Fraction(5, 8) - a / 2 + 2 * a * a))
            for a in (Fraction(0), Fraction(1, 16), Fraction(1, 8))]
    grid = [Fraction(i, 64) for i in range(9)]
    dens = [edge_density(string_a(a)) for a in grid]
    ok = max(errs) <= 1e-12 and min(dens) == dens[-1] and abs(dens[-1] - 19 / 32) <= 1e-12
    verdict(2, "string-graph density", ok, f"max err {max(errs):.1e}")


def test_criterion_03_colouring_numbers(verdict):
    expected = [(bipartite(), (2, 0)), (split(), (2, 1)), (kt_free(3), (2, 0)),
                (kt_free(5), (4, 0)), (crs(3, 2), (3, 2))]
    start = time.perf_counter()
    got = [colouring_number(c, t_max=5, n_check=6) for c, _ in expected]
    elapsed = time.perf_counter() - start
    ok = all((cn.r, cn.s) == want for cn, (_, want) in zip(got, expected)) and elapsed <= 300
    verdict(3, "colouring numbers", ok, f"{elapsed:.1f}s")


def test_criterion_04_census_oracle(verdict):
    ok = (census(kt_free(3), 3).labelled_count == 7
          and census(bipartite(), 3).labelled_count == 7
          and census(all_graphs(), 3).labelled_count == 8
          and census(all_graphs(), 4).unlabelled_count == 11)
    for c in (bipartite(), split(), kt_free(3), kt_free(4), crs(3, 1), all_graphs()):
        for n in range(1, 8):
            row = census(c, n)
            ok &= row.unlabelled_count <= row.labelled_count <= math.factorial(n) * row.unlabelled_count
    verdict(4, "census oracle", ok)


def test_criterion_05_growth_trends(verdict):
    ok = True
    detail = []
    for c in (kt_free(3), split()):
        gs = growth_series(c, 8)
        exps = {r.n: r.exponent for r in gs.rows}
        ok &= gs.prediction == 0.5
        ok &= all(exps[n] > 0.5 for n in range(2, 9)) and exps[8] < exps[4]
        detail.append(f"{c.name}: a4={exps[4]:.4f} a8={exps[8]:.4f}")
    verdict(5, "growth trends", ok, "; ".join(detail))


def _brute_cut_norm(kern):
    k = kern.k
    best = 0.0
    mu = [float(m) for m in kern.measures]
    for s in itertools.product((0, 1), repeat=k):
        for t in itertools.product((0, 1), repeat=k):
            total = sum(mu[i] * mu[j] * kern.values[i, j] for i in range(k) for j in range(k) if s[i] and t[j])
            best = max(best, abs(total))
    return best


def test_criterion_06_cut_norm_oracle(verdict):
    rng = np.random.default_rng(6)
    worst, heuristic_ok = 0.0, True
    for i in range(100):
        k = 1 + i % 10
        v = rng.uniform(-1, 1, size=(k, k))
        raw = rng.integers(1, 10, size=k)
        kern = Kernel([Fraction(int(x), int(raw.sum())) for x in raw], (v + v.T) / 2)
        exact = cut_norm_exact(kern).value
        brute = _brute_cut_norm(kern) if k <= 6 else _vector_brute(kern)
        worst = max(worst, abs(exact - brute))
        heuristic_ok &= cut_norm_heuristic(kern, seed=i).value <= exact + 1e-12
    verdict(6, "cut-norm oracle", worst <= 1e-12 and heuristic_ok, f"max err {worst:.1e}")


def _vector_brute(kern):
    # same 2^k x 2^k enumeration, with the inner sums done by matrix products
    k = kern.k
    mu = np.array([float(m) for m in kern.measures])
    ind = np.array(list(itertools.product((0, 1), repeat=k)), dtype=float) * mu
    return float(np.abs(ind @ kern.values @ ind.T).max())


def test_criterion_07_ball_counts(verdict):
    w = wrs(2, 0)
    ordered = monotone = True
    for n in (3, 4, 5, 6):
        prev = (0, 0)
        for delta in (0.0, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5):
            bc = count_balls(n, delta, w)
            ordered &= bc.n_hat <= bc.n_full
            monotone &= bc.n_hat >= prev[0] and bc.n_full >= prev[1]
            prev = (bc.n_hat, bc.n_full)
    bc = count_balls(6, 0.05, w)
    lhs = math.log2(bc.n_hat) / 36 if bc.n_hat else -math.inf
    rhs = hat_ball_bound(6, 2, 0.05, w)
    verdict(7, "ball counts", ordered and monotone and lhs <= rhs,
            f"N_hat={bc.n_hat}, lhs={lhs:.4g}, bound={rhs:.4g}")


def test_criterion_08_weak_regularity(verdict):
    corpus = standard_corpus(0)
    has_random = any(label == "sample:constant:0.5:64" for label, _ in corpus)
    rep = run_regularity(corpus, [2, 4, 8], 0)
    within = all(r["residual"] <= r["bound"] for r in rep.rows)
    certified = all(r["residual_upper"] <= r["bound"] for r in rep.rows)
    semicont = all(r["entropy_stepped"] >= r["entropy_subject"] - 1e-12 for r in rep.rows)
    ok = len(corpus) == 20 and has_random and len(rep.rows) == 60 and within and certified and semicont
    worst = max(r["residual"] for r in rep.rows)
    verdict(8, "weak regularity", ok, f"{len(rep.rows)} rows, max residual {worst:.4g}")


ENTROPY_RATE_GOLDENS = {3: 0.7989274071999327, 7: 0.7391302496253788}


def test_criterion_09_entropy_rate(verdict):
    ok = True
    for w in (wrs(2, 0), wrs(2, 1), constant(Fraction(1, 2))):
        for n in range(1, 8):
            ok &= exact_rg_entropy(w, n) >= math.comb(n, 2) * entropy(w) - 1e-9
    w = wrs(2, 0)
    ratio = {n: exact_rg_entropy(w, n) / math.comb(n, 2) for n in (3, 7)}
    ok &= abs(ratio[7] - 0.5) < abs(ratio[3] - 0.5)
    ok &= all(abs(ratio[n] - ENTROPY_RATE_GOLDENS[n]) <= 1e-12 for n in (3, 7))
    verdict(9, "entropy rate", ok, f"ratio n=3 {ratio[3]:.6f}, n=7 {ratio[7]:.6f}")


def test_criterion_10_convergence_probe(verdict):
    rep = run_convergence(kt_free(3), wrs(2, 0), [4, 6, 8], 200, 2026)
    medians = {r["n"]: r["median"] for r in rep.rows}
    exact = all(r["method"] == "exact" for r in rep.rows)
    verdict(10, "convergence probe", exact and medians[8] < medians[4],
            f"medians {medians[4]:.4g} -> {medians[6]:.4g} -> {medians[8]:.4g}")


def _random_kr_free(rng, r):
    # blocks coloured with r colours; same-colour pairs (and the diagonal) get 0
    k = int(rng.integers(1, 7))
    colour = rng.integers(0, r, size=k)
    v = rng.random((k, k))
    v = (v + v.T) / 2
    v[colour[:, None] == colour[None, :]] = 0.0
    raw = rng.integers(1, 10, size=k)
    return StepGraphon([Fraction(int(x), int(raw.sum())) for x in raw], v)


def test_criterion_11_erdos_simonovits(verdict):
    rng = np.random.default_rng(11)
    ok = True
    for r in (1, 2, 3):
        for _ in range(100):
            w = _random_kr_free(rng, r)
            ok &= is_kr_free(w, r + 1)
            ok &= edge_density(w) <= 1 - 1 / r + 1e-12
    for r in range(1, 7):
        ok &= is_kr_free(turan(r), r + 1) and not is_kr_free(turan(r), r)
    verdict(11, "Erdos-Simonovits", ok)


LAW_CASES = [
    (wrs(2, 1), 3),
    (StepGraphon([Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)],
                 [[0.9, 0.2, 0.5], [0.2, 0.0, 0.7], [0.5, 0.7, 0.4]]), 4),
    (turan(3), 4),
]


def test_criterion_12_sampling_law(verdict):
    draws = 100_000
    worst = 0.0
    ok = True
    for case, (w, n) in enumerate(LAW_CASES):
        counts = np.zeros(count_labelled(n))
        for i in range(draws):
            counts[sample(w, n, [12, case, i]).edge_mask] += 1
        p = labelled_distribution(w, n)
        se = np.sqrt(p * (1 - p) / draws)
        dev = np.abs(counts / draws - p)
        ok &= bool(np.all(dev[se == 0] == 0))
        z = dev[se > 0] / se[se > 0]
        worst = max(worst, float(z.max()))
    rng = np.random.default_rng(1212)
    for _ in range(10):
        k = int(rng.integers(1, 5))
        v = rng.random((k, k))
        w = StepGraphon([Fraction(1, k)] * k, (v + v.T) / 2)
        for n in range(1, 6):
            total = sum(orbit_size(h) * p_induced(h, w) for h in unlabelled_graphs(n))
            ok &= abs(total - 1) <= 1e-9
    verdict(12, "sampling law", ok and worst <= 4, f"max |z| {worst:.2f}")
