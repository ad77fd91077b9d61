import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from seqnet.core.errors import DivergenceError, InvalidComparisonError, InvalidParameterError, InvalidWeightsError
from seqnet.services.graph_core import Graph, complete, new_empty
from seqnet.services.metrics import (
    Dominance,
    aggregate_kb,
    aggregate_kb_squared,
    compare_profiles,
    diffusion_centrality,
    katz_bonacich,
    kb_series,
    lambda_max,
    rooted_kb,
    spectral_radius,
    walk_count,
    walk_count_weighted,
    walk_dominates,
    walk_profile,
)
from seqnet.services.structures import quasi_complete, quasi_star

SINGLE_LINK = Graph.from_edges(3, [(0, 1)])
PATH3 = Graph.from_edges(3, [(0, 1), (1, 2)])
TRIANGLE = complete(3)


def random_weighted(n, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.6), 1)
    return Graph(upper + upper.T)


# Test walk counts
def test_walk_count():
    assert walk_count(SINGLE_LINK, 2) == 2
    assert walk_count(PATH3, 2) == 6
    assert walk_count(TRIANGLE, 3) == 24
    assert walk_count(TRIANGLE, 0) == 3

    with pytest.raises(InvalidParameterError):
        walk_count(TRIANGLE, -1)


def test_walk_count_weighted():
    assert walk_count_weighted(SINGLE_LINK, 1, [2.0, 1.0, 0.0]) == 3
    assert walk_count_weighted(new_empty(3), 1, [5.0, 1.0, 2.0]) == 0
    assert walk_count_weighted(PATH3, 3, [1.0, 1.0, 1.0]) == walk_count(PATH3, 3)

    with pytest.raises(InvalidWeightsError):
        walk_count_weighted(PATH3, 1, [1.0, 1.0])
    with pytest.raises(InvalidWeightsError):
        walk_count_weighted(PATH3, 1, [1.0, -1.0, 1.0])


def test_walk_profile_csv():
    profile = walk_profile(TRIANGLE, 3)
    assert profile.counts == (3.0, 6.0, 12.0, 24.0)
    assert profile.k_max == 3
    assert profile.to_csv() == "k,count\n0,3\n1,6\n2,12\n3,24\n"


def test_walk_profile_matches_matrix_powers():
    G = quasi_complete(6, 9)
    for k in range(8):
        assert walk_count(G, k) == pytest.approx(np.linalg.matrix_power(G.w, k).sum(), rel=1e-12)


# Test walk dominance
def test_walk_dominates():
    assert walk_dominates(TRIANGLE, TRIANGLE).verdict is Dominance.EQUAL

    p3 = Graph.from_edges(4, [(0, 1), (1, 2)])
    matching = Graph.from_edges(4, [(0, 1), (2, 3)])
    verdict = walk_dominates(p3, matching)
    assert verdict.verdict is Dominance.STRICTLY_DOMINATES
    assert verdict.dominates
    assert walk_dominates(matching, p3).verdict is Dominance.DOMINATED_STRICTLY
    assert walk_dominates(matching, p3).flipped().dominates

    qc, qs = quasi_complete(7, 8), quasi_star(7, 8)
    assert walk_dominates(qc, qs, k_max=15).verdict is Dominance.INCOMPARABLE

    with pytest.raises(InvalidComparisonError):
        walk_dominates(new_empty(3), new_empty(4))


def test_compare_profiles_from_k():
    a = walk_profile(Graph.from_edges(4, [(0, 1), (1, 2)]), 6)
    b = walk_profile(Graph.from_edges(4, [(0, 1), (2, 3)]), 6)
    verdict = compare_profiles(a, b, k_from=2)
    assert verdict.verdict is Dominance.STRICTLY_DOMINATES
    assert verdict.k_checked == 6


# Test Katz-Bonacich centrality
def test_katz_bonacich_closed_forms():
    b = katz_bonacich(new_empty(4), 0.3)
    assert np.allclose(b.values, 1.0)
    assert b.aggregate == pytest.approx(4.0)
    assert aggregate_kb_squared(new_empty(7), 0.2) == pytest.approx(7.0)

    dyad = katz_bonacich(SINGLE_LINK, 0.5)
    assert dyad.values == pytest.approx([2.0, 2.0, 1.0])
    assert rooted_kb(SINGLE_LINK, 0.5, 2) == pytest.approx(1.0)
    assert dyad.to_csv().splitlines()[0] == "node,value"


def test_katz_bonacich_decay_checks():
    with pytest.raises(InvalidParameterError):
        katz_bonacich(TRIANGLE, -0.1)
    # lambda_max(K3) = 2
    with pytest.raises(DivergenceError):
        katz_bonacich(TRIANGLE, 0.5)
    katz_bonacich(TRIANGLE, 0.49)


# Test decays exactly at 1/lambda_max, where the eigensolve may round lambda_max down
@pytest.mark.parametrize("n", [3, 4, 5, 8])
def test_kb_divergence_at_boundary(n):
    G = complete(n)
    phi = 1.0 / (n - 1)
    with pytest.raises(DivergenceError):
        katz_bonacich(G, phi)
    with pytest.raises(DivergenceError):
        aggregate_kb(G, phi)
    with pytest.raises(DivergenceError):
        aggregate_kb_squared(G, phi)


def test_table_values():
    assert aggregate_kb_squared(quasi_complete(7, 8), 0.01) == pytest.approx(7.3370, abs=1e-4)
    assert aggregate_kb_squared(quasi_star(7, 8), 0.01) == pytest.approx(7.3374, abs=5e-5)


def test_aggregate_kb_weighted_nodes():
    G = quasi_complete(5, 6)
    assert aggregate_kb(G, 0.1) == pytest.approx(katz_bonacich(G, 0.1).aggregate)
    theta = np.array([1.0, 2.0, 0.0, 0.5, 3.0])
    expected = np.ones(5) @ np.linalg.solve(np.eye(5) - 0.1 * G.w, theta)
    assert aggregate_kb(G, 0.1, theta) == pytest.approx(expected, rel=1e-12)


@hyp_settings(max_examples=50, deadline=None)
@given(n=st.integers(min_value=2, max_value=8), seed=st.integers(min_value=0, max_value=10_000),
       fraction=st.floats(min_value=0.05, max_value=0.9))
def test_kb_matches_walk_series(n, seed, fraction):
    G = random_weighted(n, seed)
    lam = lambda_max(G)
    phi = fraction / lam if lam > 0 else 0.3
    assert aggregate_kb(G, phi) == pytest.approx(kb_series(G, phi), rel=1e-8)
    assert aggregate_kb_squared(G, phi) == pytest.approx(kb_series(G, phi, squared=True), rel=1e-8)


# Test diffusion centrality
def test_diffusion_centrality():
    assert np.allclose(diffusion_centrality(TRIANGLE, 0.3, 0).values, 1.0)
    assert diffusion_centrality(SINGLE_LINK, 1.0, 2).aggregate == pytest.approx(7.0)

    G = quasi_complete(6, 7)
    assert diffusion_centrality(G, 0.05, 200).aggregate == pytest.approx(aggregate_kb(G, 0.05), abs=1e-8)

    with pytest.raises(InvalidParameterError):
        diffusion_centrality(G, 1.5, 3)
    with pytest.raises(InvalidParameterError):
        diffusion_centrality(G, 0.5, -1)


# Test spectral radius
def test_spectral_radius():
    assert spectral_radius(complete(5)) == pytest.approx(4.0, abs=1e-8)
    assert spectral_radius(SINGLE_LINK) == pytest.approx(1.0, abs=1e-8)
    star = Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    assert spectral_radius(star) == pytest.approx(2.0, abs=1e-8)
    assert spectral_radius(new_empty(4)) == 0.0


@hyp_settings(max_examples=40, deadline=None)
@given(n=st.integers(min_value=2, max_value=8), seed=st.integers(min_value=0, max_value=10_000))
def test_spectral_radius_matches_networkx(n, seed):
    G = random_weighted(n, seed)
    expected = max(np.linalg.eigvalsh(nx.to_numpy_array(nx.from_numpy_array(G.w))), default=0.0)
    assert spectral_radius(G) == pytest.approx(max(expected, 0.0), abs=1e-6)
