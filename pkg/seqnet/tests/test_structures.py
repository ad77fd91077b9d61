import networkx as nx
from networkx.algorithms import threshold
import numpy as np
import pytest

from seqnet.core.errors import InvalidBudgetError, InvalidInputError, SizeLimitError
from seqnet.services.graph_core import Graph, complete, enumerate_graph_classes, isomorphic, link_count, new_empty
from seqnet.services.metrics import aggregate_kb_squared
from seqnet.services.structures import (
    classify,
    clique_size,
    enumerate_nsg,
    is_nsg,
    is_quasi_complete,
    is_weighted_nsg,
    nsg_successors,
    quasi_complete,
    quasi_star,
    violating_pairs,
    weighted_nested,
)

CYCLE4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
STAR = Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


# Test NSG recognition
def test_is_nsg():
    assert is_nsg(new_empty(4))
    assert is_nsg(STAR)
    assert is_nsg(STAR).ordering[0] == 0

    certificate = is_nsg(CYCLE4)
    assert not certificate
    assert certificate.violating_pair == (0, 1)
    # Opposite nodes share both neighbours; adjacent ones have disjoint outer neighborhoods
    assert set(violating_pairs(CYCLE4)) == {(0, 1), (1, 2), (2, 3), (0, 3)}


def test_is_nsg_matches_threshold_graphs():
    for n in range(1, 7):
        for G in enumerate_graph_classes(n):
            expected = threshold.is_threshold_graph(nx.from_numpy_array(G.w))
            assert bool(is_nsg(G)) == expected


def test_weighted_nsg():
    for G in enumerate_nsg(6, 7):
        assert is_weighted_nsg(G)

    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = 0.5
    w[2, 3] = w[3, 2] = 0.5
    two_links = Graph(w)
    assert not is_weighted_nsg(two_links)
    assert not weighted_nested(two_links, 0, 2)
    assert weighted_nested(two_links, 0, 1)


# Test quasi-complete graphs
def test_clique_size():
    assert [clique_size(t) for t in (0, 1, 2, 3, 5, 6, 8, 10)] == [1, 2, 2, 3, 3, 4, 4, 5]


def test_quasi_complete():
    path = quasi_complete(3, 2)
    assert path == Graph.from_edges(3, [(0, 1), (0, 2)])

    decomposition = is_quasi_complete(quasi_complete(7, 8))
    assert decomposition.p == 4
    assert decomposition.overflow == 2
    assert decomposition.links == 8
    assert set(decomposition.clique_nodes[:2]) == {0, 1}
    assert decomposition.spoke_node == 4

    triangle = is_quasi_complete(complete(3))
    assert triangle.p == 3
    assert triangle.overflow == 0
    assert triangle.spoke_node is None

    assert is_quasi_complete(quasi_star(7, 8)) is None
    assert is_quasi_complete(CYCLE4) is None

    with pytest.raises(InvalidBudgetError):
        quasi_complete(4, 7)


def test_quasi_complete_sequence_n5():
    previous = new_empty(5)
    for t in range(1, 11):
        G = quasi_complete(5, t)
        assert link_count(G) == t
        assert is_quasi_complete(G) is not None
        assert np.all(G.w >= previous.w)
        previous = G
    assert quasi_complete(5, 10) == complete(5)


def test_is_quasi_complete_relabeled():
    G = quasi_complete(7, 9)
    perm = [3, 6, 0, 5, 1, 2, 4]
    relabeled = Graph(G.w[np.ix_(np.argsort(perm), np.argsort(perm))])
    assert is_quasi_complete(relabeled) is not None


# Test quasi-stars
def test_quasi_star():
    assert isomorphic(quasi_star(7, 6), Graph.from_edges(7, [(0, k) for k in range(1, 7)]))
    for n in range(2, 8):
        for t in range(n * (n - 1) // 2 + 1):
            G = quasi_star(n, t)
            assert link_count(G) == t
            assert is_nsg(G)
    assert aggregate_kb_squared(quasi_star(7, 8), 0.01) == pytest.approx(7.3374, abs=5e-5)


# Test NSG enumeration
def test_enumerate_nsg():
    classes = enumerate_nsg(7, 8)
    assert len(classes) == 4
    assert all(is_nsg(G) for G in classes)
    assert sum(is_quasi_complete(G) is not None for G in classes) == 1
    assert sum(isomorphic(G, quasi_star(7, 8)) for G in classes) == 1

    assert len(enumerate_nsg(3, 2)) == 1
    assert enumerate_nsg(4, 0)[0] == new_empty(4)

    with pytest.raises(SizeLimitError):
        enumerate_nsg(11, 3)
    with pytest.raises(InvalidBudgetError):
        enumerate_nsg(4, 7)


def test_enumerate_nsg_matches_exhaustive_classes():
    for n in range(2, 7):
        classes = enumerate_graph_classes(n)
        for t in range(n * (n - 1) // 2 + 1):
            expected = sum(1 for G in classes if link_count(G) == t and is_nsg(G))
            assert len(enumerate_nsg(n, t)) == expected


# Test NSG successors
def test_nsg_successors():
    assert len(nsg_successors(new_empty(4))) == 1
    # Partial quasi-complete: extend the spoke or start a new one
    assert len(nsg_successors(quasi_complete(7, 8))) == 2
    # Clique with spare nodes: only a new spoke keeps nestedness
    assert len(nsg_successors(quasi_complete(7, 6))) == 1

    with pytest.raises(InvalidInputError):
        nsg_successors(CYCLE4)


def test_classify():
    assert classify(quasi_complete(7, 8)) == "QC"
    assert classify(quasi_star(7, 8)) == "QS"
    others = [G for G in enumerate_nsg(7, 8)
              if is_quasi_complete(G) is None and not isomorphic(G, quasi_star(7, 8))]
    assert {classify(G) for G in others} == {"NSG"}
    assert classify(CYCLE4) == "other"
