import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from graphonlab.errors import CapacityError, DomainError, ParseError, SizeError
from graphonlab.graphs import (
    Graph,
    automorphism_count,
    canonical_mask,
    canonicalize,
    complete,
    complete_bipartite,
    count_labelled,
    cycle,
    empty,
    enumerate_labelled,
    from_graph6,
    hom_density,
    hom_density_exact,
    induced_count,
    induced_density,
    induced_density_exact,
    is_free_of,
    is_isomorphic,
    matching,
    orbit_size,
    pair_list,
    path,
    read_graph6_file,
    to_graph6,
    unlabelled_graphs,
    write_graph6_file,
)


@st.composite
def graphs(draw, min_n=1, max_n=7):
    n = draw(st.integers(min_n, max_n))
    mask = draw(st.integers(0, (1 << (n * (n - 1) // 2)) - 1))
    return Graph.from_mask(n, mask)


def brute_canonical(g):
    """Smallest edge mask over all vertex relabellings."""
    return min(g.relabel(p).edge_mask for p in itertools.permutations(range(g.n)))


def brute_aut(g):
    return sum(1 for p in itertools.permutations(range(g.n)) if g.relabel(p) == g)


def brute_induced(h, g):
    # injective maps V(h) -> V(g) that preserve edges and non-edges
    hits = 0
    for image in itertools.permutations(range(g.n), h.n):
        if all(h.has_edge(a, b) == g.has_edge(image[a], image[b]) for a, b in itertools.combinations(range(h.n), 2)):
            hits += 1
    return hits


# -- construction and invariants ------------------------------------------------


def test_rows_must_be_symmetric_and_loopless():
    with pytest.raises(DomainError):
        Graph(2, (0b10, 0b00))
    with pytest.raises(DomainError):
        Graph(1, (0b1,))
    with pytest.raises(DomainError):
        Graph(0, ())


def test_vertex_cap():
    assert empty(64).n == 64
    with pytest.raises(CapacityError):
        empty(65)


def test_from_edges_rejects_loops_and_out_of_range():
    with pytest.raises(DomainError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(DomainError):
        Graph.from_edges(3, [(0, 3)])


@given(graphs())
def test_mask_round_trip(g):
    assert Graph.from_mask(g.n, g.edge_mask) == g
    assert Graph.from_matrix(g.adjacency()) == g
    assert g.complement().complement() == g
    assert g.num_edges == len(g.edges())


def test_pair_order_matches_graph6_columns():
    assert pair_list(4) == ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3))


# -- enumeration ----------------------------------------------------------------


@pytest.mark.parametrize("n, count", [(1, 1), (2, 2), (3, 8), (4, 64), (5, 1024)])
def test_enumerate_labelled_counts(n, count):
    gs = list(enumerate_labelled(n))
    assert len(gs) == count == count_labelled(n)
    assert len({g.edge_mask for g in gs}) == count


def test_enumeration_cap():
    with pytest.raises(CapacityError):
        next(enumerate_labelled(9))


def test_four_vertex_classes():
    forms = {canonical_mask(g) for g in enumerate_labelled(4)}
    assert len(forms) == 11
    assert len(unlabelled_graphs(4)) == 11


@pytest.mark.parametrize("n", range(1, 6))
def test_unlabelled_classes_match_brute_force(n):
    oracle = {brute_canonical(g) for g in enumerate_labelled(n)}
    assert len(unlabelled_graphs(n)) == len(oracle)


def test_unlabelled_counts_known_sequence():
    assert [len(unlabelled_graphs(n)) for n in range(1, 8)] == [1, 2, 4, 11, 34, 156, 1044]


@pytest.mark.parametrize("n", range(1, 6))
def test_orbit_sizes_sum_to_labelled_count(n):
    assert sum(orbit_size(g) for g in unlabelled_graphs(n)) == 2 ** (n * (n - 1) // 2)


# -- canonical forms --------------------------------------------------------------


def test_path_relabelled_two_ways():
    a = Graph.from_edges(3, [(0, 1), (1, 2)])
    b = Graph.from_edges(3, [(1, 0), (0, 2)])
    assert canonicalize(a) == canonicalize(b)
    assert canonicalize(complete(3)) == complete(3)


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=7), st.randoms(use_true_random=False))
def test_canonical_form_is_invariant_and_idempotent(g, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    c = canonicalize(g)
    assert canonicalize(g.relabel(perm)) == c
    assert canonicalize(c) == c
    assert is_isomorphic(c, g)


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=6), graphs(max_n=6))
def test_canonical_equality_agrees_with_brute_force(a, b):
    if a.n != b.n:
        assert not is_isomorphic(a, b)
        return
    assert (canonical_mask(a) == canonical_mask(b)) == (brute_canonical(a) == brute_canonical(b))


@settings(max_examples=30, deadline=None)
@given(graphs(max_n=6))
def test_automorphism_count_against_brute_force(g):
    assert automorphism_count(g) == brute_aut(g)


def test_automorphisms_of_named_graphs():
    assert automorphism_count(complete(5)) == 120
    assert automorphism_count(cycle(6)) == 12
    assert automorphism_count(path(4)) == 2
    assert automorphism_count(complete_bipartite(2, 3)) == 12


def test_regular_graphs_with_symmetry_canonicalize():
    # vertex-transitive inputs stress individualization
    petersen = Graph.from_edges(10, [(i, (i + 1) % 5) for i in range(5)]
                                + [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
                                + [(i, i + 5) for i in range(5)])
    assert automorphism_count(petersen) == 120
    shuffled = petersen.relabel([3, 7, 1, 9, 0, 5, 2, 8, 6, 4])
    assert canonicalize(shuffled) == canonicalize(petersen)
    assert not is_isomorphic(petersen, cycle(10))


# -- densities ------------------------------------------------------------------


def test_induced_density_examples():
    k1, k2 = complete(1), complete(2)
    assert induced_density(k2, complete(3)) == 1.0
    assert induced_density(k1, cycle(5)) == 1.0
    assert induced_density_exact(k2, path(3)) == Fraction(2, 3)


def test_hom_density_examples():
    assert hom_density_exact(complete(2), complete(3)) == Fraction(2, 3)
    assert hom_density(complete(1), cycle(4)) == 1.0
    assert hom_density(complete(3), complete_bipartite(3, 3)) == 0.0


def test_pattern_larger_than_host():
    with pytest.raises(SizeError):
        induced_density(complete(4), complete(3))


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=4), graphs(min_n=4, max_n=6))
def test_induced_count_against_brute_force(h, g):
    assert induced_count(h, g) == brute_induced(h, g)


@settings(max_examples=25, deadline=None)
@given(graphs(max_n=6))
def test_self_density_positive(h):
    assert induced_density(h, h) > 0
    assert hom_density(complete(1), h) == 1.0


@settings(max_examples=15, deadline=None)
@given(graphs(min_n=3, max_n=6), st.integers(1, 3))
def test_induced_densities_of_all_patterns_sum_to_one(g, m):
    m = min(m, g.n)
    total = sum(induced_density_exact(h, g) * orbit_size(h) for h in unlabelled_graphs(m))
    assert total == 1


# -- forbidden subgraphs ----------------------------------------------------------


def test_is_free_of_examples():
    assert is_free_of(cycle(4), [complete(3)])
    assert not is_free_of(complete(4), [complete(3)])
    assert not is_free_of(cycle(4), [matching(2), cycle(4), cycle(5)])


@settings(max_examples=30, deadline=None)
@given(graphs(max_n=7), graphs(max_n=4))
def test_is_free_of_agrees_with_induced_count(g, f):
    expected = f.n > g.n or induced_count(f, g) == 0
    assert is_free_of(g, [f]) == expected


# -- graph6 -----------------------------------------------------------------------


def test_graph6_examples():
    assert to_graph6(complete(3)) == "Bw"
    assert to_graph6(empty(1)) == "@"
    assert from_graph6("Bw") == complete(3)
    assert from_graph6(">>graph6<<Bw") == complete(3)


@pytest.mark.parametrize("n", range(1, 7))
def test_graph6_round_trip_exhaustive(n):
    for g in enumerate_labelled(n):
        assert from_graph6(to_graph6(g)) == g


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 64), st.data())
def test_graph6_round_trip_random(n, data):
    mask = data.draw(st.integers(0, (1 << (n * (n - 1) // 2)) - 1))
    g = Graph.from_mask(n, mask)
    text = to_graph6(g)
    assert from_graph6(text) == g
    assert (text[0] == "~") == (n >= 63)


@pytest.mark.parametrize("bad", ["", "B", "Bww", "B\x7f", "~??"])
def test_graph6_rejects_malformed(bad):
    with pytest.raises(ParseError):
        from_graph6(bad)


def test_graph6_parse_error_reports_offset():
    with pytest.raises(ParseError, match="byte"):
        from_graph6("C ")


def test_graph6_file_round_trip(tmp_path):
    gs = [complete(3), cycle(5), empty(2)]
    path_ = tmp_path / "gs.g6"
    write_graph6_file(path_, gs)
    assert read_graph6_file(path_) == gs
