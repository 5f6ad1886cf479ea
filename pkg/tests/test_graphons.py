import itertools
import json
import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphonlab.errors import CapacityError, DomainError, ParseError
from graphonlab.graphons import (
    Partition,
    StepGraphon,
    bar,
    binary_entropy,
    clipped_entropy,
    common_refine,
    constant,
    edge_density,
    entropy,
    exact_rg_entropy,
    from_graph,
    is_kr_free,
    labelled_distribution,
    make,
    p_induced,
    randomness_support,
    rg_entropy_lower_bound,
    sample,
    step,
    string_a,
    turan,
    wrs,
)
from graphonlab.graphs import Graph, complete, complete_bipartite, count_labelled, cycle, enumerate_labelled, path


@st.composite
def step_graphons(draw, max_k=5, binary=False, coarse=False):
    k = draw(st.integers(1, max_k))
    weights = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
    if binary or coarse:
        levels = [0.0, 1.0] if binary else [0.0, 0.25, 0.5, 1.0]
        upper = draw(st.lists(st.sampled_from(levels), min_size=k * k, max_size=k * k))
    else:
        upper = draw(st.lists(st.floats(0, 1), min_size=k * k, max_size=k * k))
    v = np.array(upper).reshape(k, k)
    v = np.triu(v) + np.triu(v, 1).T
    total = sum(weights)
    return StepGraphon([Fraction(x, total) for x in weights], v)


def oracle_entropy(w):
    mu = [float(m) for m in w.measures]
    return sum(mu[i] * mu[j] * binary_entropy(w.values[i, j]) for i in range(w.k) for j in range(w.k))


def oracle_p_induced(h, w):
    """Sum over block assignments of the probability of exactly ``h``."""
    mu = [float(m) for m in w.measures]
    total = 0.0
    for labels in itertools.product(range(w.k), repeat=h.n):
        p = math.prod(mu[b] for b in labels)
        for i, j in itertools.combinations(range(h.n), 2):
            x = w.values[labels[i], labels[j]]
            p *= x if h.has_edge(i, j) else 1.0 - x
        total += p
    return total


# -- construction -------------------------------------------------------------------


def test_invalid_graphons_rejected():
    with pytest.raises(DomainError):
        StepGraphon([Fraction(1, 2), Fraction(1, 3)], [[0, 0], [0, 0]])
    with pytest.raises(DomainError):
        StepGraphon([1], [[1.5]])
    with pytest.raises(DomainError):
        StepGraphon([Fraction(1, 2)] * 2, [[0, 1], [0, 0]])
    with pytest.raises(DomainError):
        StepGraphon([0, 1], [[0, 0], [0, 0]])
    with pytest.raises(DomainError):
        StepGraphon([1], [[float("nan")]])


def test_masses_within_tolerance_are_normalized():
    w = StepGraphon([0.5, 0.5 + 1e-13], [[0, 1], [1, 0]])
    assert sum(w.measures) == 1


def test_named_constructors():
    w = wrs(2, 0)
    assert w.measures == (Fraction(1, 2), Fraction(1, 2))
    assert w.values.tolist() == [[0.0, 0.5], [0.5, 0.0]]
    assert turan(1).values.tolist() == [[0.0]]
    assert make("turan", 3) == turan(3)
    assert string_a(0) == wrs(4, 4)
    with pytest.raises(DomainError):
        make("nonsense")
    with pytest.raises(DomainError):
        wrs(2, 3)
    with pytest.raises(DomainError):
        string_a("1/4")


def test_values_are_read_only():
    w = turan(2)
    with pytest.raises(ValueError):
        w.values[0, 0] = 1.0


@settings(max_examples=30, deadline=None)
@given(step_graphons())
def test_json_round_trip(w):
    back = StepGraphon.from_json(w.to_json())
    assert back == w
    assert json.loads(w.to_json())["schema"].endswith("/v1")


def test_json_errors():
    with pytest.raises(ParseError):
        StepGraphon.from_json("{")
    with pytest.raises(ParseError):
        StepGraphon.from_json('{"measures": ["1"]}')
    with pytest.raises(ParseError):
        StepGraphon.from_json('{"schema": "x/v2", "measures": ["1"], "values": [["0"]]}')


# -- entropy ------------------------------------------------------------------------


def test_binary_entropy_examples():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 == binary_entropy(1.0)
    assert clipped_entropy(0.75) == 1.0
    with pytest.raises(DomainError):
        binary_entropy(1.5)


@pytest.mark.parametrize("r", range(1, 7))
def test_entropy_of_max_entropy_shapes(r):
    for s in range(r + 1):
        assert abs(entropy(wrs(r, s)) - (1 - 1 / r)) <= 1e-12


def test_entropy_examples():
    assert entropy(constant(0.5)) == 1.0
    assert entropy(from_graph(cycle(5))) == 0.0


@settings(max_examples=50, deadline=None)
@given(step_graphons())
def test_entropy_matches_oracle(w):
    assert abs(entropy(w) - oracle_entropy(w)) <= 1e-12


def test_entropy_subadditivity_on_random_pairs():
    rng = np.random.default_rng(11)
    x = np.sort(rng.random((10_000, 2)), axis=1)
    for x1, x2 in x:
        assert abs(binary_entropy(x2) - binary_entropy(x1)) <= binary_entropy(x2 - x1) + 1e-12


def test_binomial_entropy_bound():
    for big_n in range(31):
        for m in range(big_n + 1):
            rhs = 2 ** (big_n * binary_entropy(m / big_n)) if big_n else 1.0
            assert comb(big_n, m) <= rhs * (1 + 1e-12)


# -- densities and stepping ---------------------------------------------------------------


def test_edge_density_examples():
    assert abs(edge_density(string_a(0)) - 5 / 8) <= 1e-12
    assert abs(edge_density(string_a("1/8")) - 19 / 32) <= 1e-12
    for r in range(1, 7):
        assert abs(edge_density(turan(r)) - (1 - 1 / r)) <= 1e-12


def test_string_density_polynomial_minimum():
    grid = [Fraction(i, 128) for i in range(17)]
    dens = [edge_density(string_a(a)) for a in grid]
    for a, d in zip(grid, dens):
        assert abs(d - float(Fraction(5, 8) - a / 2 + 2 * a * a)) <= 1e-12
    assert min(dens) == dens[-1]


def test_step_examples():
    w = string_a("1/8")
    assert abs(bar(w, 1).values[0, 0] - edge_density(w)) <= 1e-12
    assert step(w, Partition.identity(w.k)) == w
    assert bar(turan(2), 2) == turan(2)


@settings(max_examples=40, deadline=None)
@given(step_graphons(max_k=8), st.data())
def test_stepping_preserves_density_and_raises_entropy(w, data):
    labels = data.draw(st.lists(st.integers(0, 3), min_size=w.k, max_size=w.k))
    s = step(w, Partition.from_assignment(labels))
    assert abs(edge_density(s) - edge_density(w)) <= 1e-12
    assert entropy(s) >= entropy(w) - 1e-12
    m = data.draw(st.integers(1, 6))
    assert entropy(bar(w, m)) >= entropy(w) - 1e-12


def test_randomness_support_examples():
    for r, s in [(2, 0), (3, 1), (4, 4)]:
        assert randomness_support(wrs(r, s)) == turan(r)
    assert not randomness_support(from_graph(path(4))).values.any()
    assert randomness_support(constant(0.5)).values.tolist() == [[1.0]]


def test_common_refine_example():
    u = StepGraphon([Fraction(1, 2)] * 2, [[0, 1], [1, 0]])
    v = StepGraphon([Fraction(1, 3), Fraction(2, 3)], [[1, 0], [0, 1]])
    a, b = common_refine(u, v)
    assert a.measures == b.measures == (Fraction(1, 3), Fraction(1, 6), Fraction(1, 2))
    assert abs(edge_density(a) - edge_density(u)) <= 1e-12
    assert abs(edge_density(b) - edge_density(v)) <= 1e-12


def test_p_induced_examples():
    assert p_induced(complete(3), wrs(2, 0)) == 0.0
    assert abs(p_induced(complete(2), constant(0.3)) - 0.3) <= 1e-12
    for w in (wrs(2, 1), string_a("1/16"), turan(3)):
        assert abs(sum(p_induced(g, w) for g in enumerate_labelled(3)) - 1) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(step_graphons(max_k=3), st.integers(1, 4), st.data())
def test_p_induced_matches_assignment_oracle(w, n, data):
    mask = data.draw(st.integers(0, count_labelled(n) - 1))
    h = Graph.from_mask(n, mask)
    assert abs(p_induced(h, w) - oracle_p_induced(h, w)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(step_graphons(max_k=4), st.integers(1, 5))
def test_labelled_distribution_sums_to_one(w, n):
    assert abs(labelled_distribution(w, n).sum() - 1) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(step_graphons(max_k=4), st.data())
def test_p_induced_is_relabelling_invariant(w, data):
    n = data.draw(st.integers(2, 5))
    h = Graph.from_mask(n, data.draw(st.integers(0, count_labelled(n) - 1)))
    perm = data.draw(st.permutations(range(n)))
    assert abs(p_induced(h, w) - p_induced(h.relabel(perm), w)) <= 1e-12


# -- clique freeness ----------------------------------------------------------------------


@pytest.mark.parametrize("r", range(1, 7))
def test_turan_clique_freeness(r):
    assert is_kr_free(turan(r), r + 1)
    assert not is_kr_free(turan(r), r)


def test_constant_half_is_never_clique_free():
    for r in range(2, 8):
        assert not is_kr_free(constant(0.5), r)


@settings(max_examples=60, deadline=None)
@given(step_graphons(max_k=4, coarse=True), st.integers(2, 4))
def test_kr_free_agrees_with_clique_density(w, r):
    assert is_kr_free(w, r) == (p_induced(complete(r), w) == 0.0)


# -- sampling -------------------------------------------------------------------------


def test_sample_examples():
    for seed in range(5):
        assert sample(constant(1), 9, seed) == complete(9)
        g = sample(wrs(2, 0), 20, seed)
        assert _two_colourable(g)


def _two_colourable(g):
    colour = {}
    for root in range(g.n):
        if root in colour:
            continue
        colour[root] = 0
        stack = [root]
        while stack:
            v = stack.pop()
            for u in range(g.n):
                if g.has_edge(u, v):
                    if u not in colour:
                        colour[u] = 1 - colour[v]
                        stack.append(u)
                    elif colour[u] == colour[v]:
                        return False
    return True


def test_sample_is_deterministic_per_seed():
    w = string_a("1/16")
    assert sample(w, 30, 123) == sample(w, 30, 123)
    assert sample(w, 30, 123) != sample(w, 30, 124)


def test_sample_edge_frequency():
    edges = sum(sample(constant(0.5), 32, seed).num_edges for seed in range(1000))
    freq = edges / (1000 * comb(32, 2))
    assert abs(freq - 0.5) <= 0.01


def test_sample_caps():
    with pytest.raises(CapacityError):
        sample(constant(0.5), 65, 0)


# -- entropy of the random graph -------------------------------------------------------------


def test_rg_entropy_examples():
    for n in range(1, 6):
        assert abs(exact_rg_entropy(constant(0.5), n) - comb(n, 2)) <= 1e-9
        assert exact_rg_entropy(constant(1), n) == 0.0
    assert abs(exact_rg_entropy(wrs(2, 0), 2) - binary_entropy(0.25)) <= 1e-12
    with pytest.raises(CapacityError):
        exact_rg_entropy(constant(0.5), 8)


@settings(max_examples=20, deadline=None)
@given(step_graphons(max_k=3), st.integers(2, 5))
def test_rg_entropy_against_labelled_sum(w, n):
    p = labelled_distribution(w, n)
    p = p[p > 0]
    oracle = float(-(p * np.log2(p)).sum())
    assert abs(exact_rg_entropy(w, n) - oracle) <= 1e-9
    assert exact_rg_entropy(w, n) >= rg_entropy_lower_bound(w, n) - 1e-9


def test_empirical_law_small_case():
    w, n, draws = wrs(2, 1), 3, 20_000
    counts = np.zeros(count_labelled(n))
    for seed in range(draws):
        counts[sample(w, n, seed).edge_mask] += 1
    p = labelled_distribution(w, n)
    se = np.sqrt(p * (1 - p) / draws)
    assert np.all(np.abs(counts / draws - p) <= 4 * se + 1e-12)


@settings(max_examples=20, deadline=None)
@given(step_graphons(max_k=5, binary=True))
def test_binary_graphons_are_random_free(w):
    assert entropy(w) == 0.0
    assert entropy(from_graph(complete_bipartite(3, 4))) == 0.0
