"""
Nested split graphs and quasi-complete graphs.

Recognition, construction and enumeration of the two graph families, the
weighted generalization of nestedness, and the NSG successors of a graph.
"""
import logging
from dataclasses import dataclass
from itertools import combinations, product
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms import threshold

from seqnet.core.errors import InvalidBudgetError, InvalidInputError, SizeLimitError
from seqnet.services.graph_core import (
    MAX_CANONICAL_NODES,
    WEIGHT_TOLERANCE,
    Graph,
    canonical_form,
    capacity,
    degrees,
    is_unweighted,
    isomorphic,
    link_count,
    neighbor_masks,
    permute,
    successors,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NsgCertificate:
    """
    Witness for (or against) nestedness.

    Exactly one of ordering and violating_pair is set.
    """
    ordering: Optional[Tuple[int, ...]] = None
    violating_pair: Optional[Tuple[int, int]] = None

    @property
    def is_nsg(self) -> bool:
        return self.ordering is not None

    def __bool__(self) -> bool:
        return self.is_nsg


@dataclass(frozen=True)
class QcDecomposition:
    """
    Clique plus spoke structure of a quasi-complete graph.

    Attributes:
        p: clique size
        overflow: links from the spoke node into the clique
        clique_nodes: nodes of the clique, hubs linked to the spoke first
        spoke_node: node carrying the overflow links, None when overflow is 0
    """
    p: int
    overflow: int
    clique_nodes: Tuple[int, ...]
    spoke_node: Optional[int]

    @property
    def links(self) -> int:
        return self.p * (self.p - 1) // 2 + self.overflow


def _check_budget(n: int, t: int) -> None:
    if t < 0 or t > capacity(n):
        raise InvalidBudgetError(f"Link budget {t} is outside [0, {capacity(n)}] for n={n}")


def _nested_masks(a: int, b: int) -> bool:
    return a & b == a or a & b == b


def is_nsg(G: Graph) -> NsgCertificate:
    """
    Check whether the neighborhoods of G form a chain under inclusion.

    For every pair i < j, N_i minus {j} and N_j minus {i} must be nested.
    The witness ordering sorts nodes by degree (descending), then by index;
    otherwise the first violating pair in lexicographic order is returned.
    """
    masks = neighbor_masks(G)
    for i, j in combinations(range(G.n), 2):
        a = masks[i] & ~(1 << j)
        b = masks[j] & ~(1 << i)
        if not _nested_masks(a, b):
            return NsgCertificate(violating_pair=(i, j))
    deg = [bin(m).count("1") for m in masks]
    return NsgCertificate(ordering=tuple(sorted(range(G.n), key=lambda v: (-deg[v], v))))


def violating_pairs(G: Graph) -> List[Tuple[int, int]]:
    """All pairs i < j whose neighborhoods are not nested."""
    masks = neighbor_masks(G)
    return [
        (i, j)
        for i, j in combinations(range(G.n), 2)
        if not _nested_masks(masks[i] & ~(1 << j), masks[j] & ~(1 << i))
    ]


def weighted_nested(G: Graph, i: int, j: int) -> bool:
    """Whether row i dominates row j (or the converse) outside {i, j}."""
    others = [k for k in range(G.n) if k not in (i, j)]
    gi, gj = G.w[i, others], G.w[j, others]
    return bool(np.all(gi >= gj - WEIGHT_TOLERANCE) or np.all(gj >= gi - WEIGHT_TOLERANCE))


def is_weighted_nsg(G: Graph) -> NsgCertificate:
    """
    Weighted nestedness: for every pair, one row dominates the other
    componentwise outside the pair, with tolerance 1e-12.
    """
    for i, j in combinations(range(G.n), 2):
        if not weighted_nested(G, i, j):
            return NsgCertificate(violating_pair=(i, j))
    strength = degrees(G)
    return NsgCertificate(ordering=tuple(sorted(range(G.n), key=lambda v: (-strength[v], v))))


def clique_size(t: int) -> int:
    """Largest p with p(p-1)/2 <= t."""
    p = 1
    while (p + 1) * p // 2 <= t:
        p += 1
    return p


def quasi_complete(n: int, t: int) -> Graph:
    """
    Build the quasi-complete graph with t links on n nodes.

    Nodes 0..p-1 form a clique and node p links to nodes 0..overflow-1.

    Raises:
        InvalidBudgetError: If t is outside [0, n(n-1)/2]
    """
    _check_budget(n, t)
    p = min(clique_size(t), n)
    overflow = t - p * (p - 1) // 2
    edges = list(combinations(range(p), 2))
    edges.extend((p, k) for k in range(overflow))
    return Graph.from_edges(n, edges)


def _is_clique(G: Graph, nodes) -> bool:
    return all(G.w[a, b] == 1.0 for a, b in combinations(nodes, 2))


def is_quasi_complete(G: Graph) -> Optional[QcDecomposition]:
    """
    Recognize a quasi-complete graph structurally.

    Returns:
        The clique/spoke decomposition, or None when G is not quasi-complete
    """
    if not is_unweighted(G):
        return None
    t = link_count(G)
    p = min(clique_size(t), G.n)
    overflow = t - p * (p - 1) // 2
    deg = degrees(G).astype(int)
    expected = sorted([p] * overflow + [p - 1] * (p - overflow) + ([overflow] if overflow else []), reverse=True)
    actual = sorted(deg.tolist(), reverse=True)
    if actual[: len(expected)] != expected or any(actual[len(expected):]):
        return None

    candidates = [v for v in range(G.n) if deg[v] >= p - 1]
    for clique in combinations(candidates, p):
        if not _is_clique(G, clique):
            continue
        outside = [v for v in range(G.n) if v not in clique and deg[v] > 0]
        if overflow == 0:
            if not outside:
                return QcDecomposition(p, 0, tuple(clique), None)
            continue
        if len(outside) != 1:
            continue
        spoke = outside[0]
        hubs = tuple(v for v in clique if G.w[spoke, v] == 1.0)
        if len(hubs) != overflow:
            continue
        rest = tuple(v for v in clique if v not in hubs)
        return QcDecomposition(p, overflow, hubs + rest, spoke)
    return None


def quasi_star(n: int, t: int) -> Graph:
    """
    Build the quasi-star with t links on n nodes.

    Node 0 links to 1, 2, ... until the budget or the nodes run out; the
    remaining links go from node 1 to 2, 3, ... and so on.

    Raises:
        InvalidBudgetError: If t is outside [0, n(n-1)/2]
    """
    _check_budget(n, t)
    edges = []
    hub = 0
    while len(edges) < t:
        for k in range(hub + 1, n):
            if len(edges) == t:
                break
            edges.append((hub, k))
        hub += 1
    return Graph.from_edges(n, edges)


def _from_creation_sequence(sequence: List[str]) -> Graph:
    nx_graph = threshold.threshold_graph(sequence)
    n = len(sequence)
    G = Graph(nx.to_numpy_array(nx_graph, nodelist=range(n)))
    deg = degrees(G)
    order = sorted(range(n), key=lambda v: (-deg[v], v))
    # Highest degree first so that node 1 is the dominating hub in reports
    perm = [0] * n
    for new, old in enumerate(order):
        perm[old] = new
    return permute(G, perm)


def enumerate_nsg(n: int, t: int) -> List[Graph]:
    """
    One representative per isomorphism class of NSGs with t links.

    Threshold graphs are generated from creation sequences (each new node
    isolated or dominating) with the first symbol fixed, filtered to t
    links and deduplicated by canonical form.

    Raises:
        SizeLimitError: If n exceeds 10
        InvalidBudgetError: If t is outside [0, n(n-1)/2]
    """
    if n > MAX_CANONICAL_NODES:
        raise SizeLimitError(f"NSG enumeration is limited to {MAX_CANONICAL_NODES} nodes, got {n}")
    _check_budget(n, t)
    found = {}
    for tail in product("id", repeat=n - 1):
        # A dominating node at position q links to the q nodes before it
        if sum(q for q, symbol in enumerate(tail, start=1) if symbol == "d") != t:
            continue
        G = _from_creation_sequence(["d", *tail])
        found.setdefault(canonical_form(G), G)
    logger.debug(f"n={n}, t={t}: {len(found)} NSG classes")
    return [found[key] for key in sorted(found)]


def nsg_successors(G: Graph) -> List[Graph]:
    """
    Successors of an NSG that are themselves NSGs, one per isomorphism class.

    Raises:
        InvalidInputError: If G is not an NSG
    """
    if not is_unweighted(G) or not is_nsg(G):
        raise InvalidInputError("nsg_successors requires an unweighted NSG")
    found = {}
    for H in successors(G):
        if is_nsg(H):
            found.setdefault(canonical_form(H), H)
    return list(found.values())


def classify(G: Graph) -> str:
    """Structural label for reports: "QC", "QS", "NSG" or "other"."""
    if not is_unweighted(G):
        return "NSG" if is_weighted_nsg(G) else "other"
    if is_quasi_complete(G) is not None:
        return "QC"
    if G.n <= MAX_CANONICAL_NODES and isomorphic(G, quasi_star(G.n, link_count(G))):
        return "QS"
    return "NSG" if is_nsg(G) else "other"
