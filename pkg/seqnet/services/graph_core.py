"""
Dense graph representation and succession operations.

Graphs are immutable symmetric weight matrices with entries in [0, 1] and
a zero diagonal. Node indices are 0-based here; reports and file formats
shift them to 1-based labels.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from seqnet.core.errors import (
    InvalidComparisonError,
    InvalidEditError,
    InvalidInputError,
    InvalidPathError,
    InvalidSizeError,
    OccupiedLinkError,
    SizeLimitError,
)

logger = logging.getLogger(__name__)

MAX_NODES = 64
MAX_CANONICAL_NODES = 10
MAX_CLASS_ENUMERATION_NODES = 7
WEIGHT_TOLERANCE = 1e-12
MASS_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Undirected graph stored as a dense weight matrix.

    Attributes:
        w: n x n symmetric matrix with entries in [0, 1] and zero diagonal
    """
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidSizeError(f"Adjacency matrix must be square, got shape {w.shape}")
        n = w.shape[0]
        if n < 1 or n > MAX_NODES:
            raise InvalidSizeError(f"Node count must be in [1, {MAX_NODES}], got {n}")
        if not np.allclose(w, w.T, rtol=0.0, atol=WEIGHT_TOLERANCE):
            raise InvalidInputError("Adjacency matrix is not symmetric")
        if np.any(np.abs(np.diag(w)) > WEIGHT_TOLERANCE):
            raise InvalidInputError("Adjacency matrix has a non-zero diagonal")
        if np.any(w < -WEIGHT_TOLERANCE) or np.any(w > 1.0 + WEIGHT_TOLERANCE):
            raise InvalidInputError("Link weights must lie in [0, 1]")
        w = np.clip((w + w.T) / 2.0, 0.0, 1.0)
        # Entries within WEIGHT_TOLERANCE of 0 or 1 are exactly 0 or 1
        w[w <= WEIGHT_TOLERANCE] = 0.0
        w[w >= 1.0 - WEIGHT_TOLERANCE] = 1.0
        np.fill_diagonal(w, 0.0)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        """Build an unweighted graph from 0-based node pairs."""
        w = np.zeros((n, n))
        for i, j in edges:
            if i == j:
                raise InvalidEditError(f"Self-loop at node {i + 1}")
            w[i, j] = w[j, i] = 1.0
        return cls(w)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and bool(
            np.allclose(self.w, other.w, rtol=0.0, atol=WEIGHT_TOLERANCE)
        )

    def __hash__(self) -> int:
        # Graphs equal within WEIGHT_TOLERANCE agree on their exact 0 and 1 entries
        return hash((self.n, (self.w == 0.0).tobytes(), (self.w == 1.0).tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, links={total_weight(self):g})"


@dataclass(frozen=True)
class LinkEdit:
    """Addition of the link between two distinct nodes (stored with i < j)."""
    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j:
            raise InvalidEditError(f"Link endpoints coincide at node {self.i + 1}")
        if self.i < 0 or self.j < 0:
            raise InvalidEditError(f"Negative node index in ({self.i}, {self.j})")
        if self.i > self.j:
            i, j = self.j, self.i
            object.__setattr__(self, "i", i)
            object.__setattr__(self, "j", j)

    def touches(self, node: int) -> bool:
        return node in (self.i, self.j)

    def other(self, node: int) -> int:
        """Endpoint opposite to node."""
        return self.j if node == self.i else self.i


@dataclass(frozen=True, order=True)
class CanonicalForm:
    """Permutation-invariant key of an unweighted graph."""
    key: bytes

    def hex(self) -> str:
        return self.key.hex()


@dataclass(frozen=True)
class FormationPath:
    """
    Sequence of graphs G(1)..G(T) formed from the empty graph.

    Attributes:
        graphs: snapshots after each period
        weighted: whether periods add one unit of mass instead of one link
    """
    graphs: Tuple[Graph, ...]
    weighted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if not self.graphs:
            raise InvalidPathError("A formation path needs at least one period")
        n = self.graphs[0].n
        if any(g.n != n for g in self.graphs):
            raise InvalidPathError("All graphs of a path must share the node count")

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def horizon(self) -> int:
        return len(self.graphs)

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, t: int) -> Graph:
        return self.graphs[t]

    def __iter__(self):
        return iter(self.graphs)

    def previous(self, t: int) -> Graph:
        """Graph before period t (0-based), the empty graph for t == 0."""
        return new_empty(self.n) if t == 0 else self.graphs[t - 1]


EditLike = Union[LinkEdit, Tuple[int, int]]


def _as_edit(e: EditLike) -> LinkEdit:
    return e if isinstance(e, LinkEdit) else LinkEdit(int(e[0]), int(e[1]))


def new_empty(n: int) -> Graph:
    """
    Create the empty graph on n nodes.

    Args:
        n: Node count

    Returns:
        Graph without links

    Raises:
        InvalidSizeError: If n is not in [1, 64]
    """
    if n < 1 or n > MAX_NODES:
        raise InvalidSizeError(f"Node count must be in [1, {MAX_NODES}], got {n}")
    return Graph(np.zeros((n, n)))


def complete(n: int) -> Graph:
    w = np.ones((n, n))
    np.fill_diagonal(w, 0.0)
    return Graph(w)


def is_unweighted(G: Graph) -> bool:
    return bool(np.all((G.w == 0.0) | (G.w == 1.0)))


def total_weight(G: Graph) -> float:
    """Sum of link weights (the link count for unweighted graphs)."""
    return float(np.triu(G.w, 1).sum())


def link_count(G: Graph) -> int:
    return int(round(total_weight(G)))


def capacity(n: int) -> int:
    """Number of node pairs, n(n-1)/2."""
    return n * (n - 1) // 2


def degrees(G: Graph) -> np.ndarray:
    return G.w.sum(axis=1)


def neighbors(G: Graph, i: int) -> frozenset:
    """Nodes with a positive link weight to i."""
    return frozenset(int(k) for k in np.flatnonzero(G.w[i] > 0.0))


def neighbor_masks(G: Graph) -> List[int]:
    """Neighborhoods of an unweighted graph as integer bitmasks."""
    masks = []
    for i in range(G.n):
        mask = 0
        for k in np.flatnonzero(G.w[i] > 0.0):
            mask |= 1 << int(k)
        masks.append(mask)
    return masks


def _require_unweighted(G: Graph, operation: str) -> None:
    if not is_unweighted(G):
        raise InvalidInputError(f"{operation} requires an unweighted graph")


def _check_node(G: Graph, node: int) -> None:
    if node < 0 or node >= G.n:
        raise InvalidEditError(f"Node {node + 1} is outside 1..{G.n}")


def add_link(G: Graph, e: EditLike) -> Graph:
    """
    Add one link to an unweighted graph.

    Args:
        G: Unweighted graph
        e: Link to add

    Returns:
        The succeeding graph G + E_ij

    Raises:
        InvalidEditError: If the endpoints coincide or are out of range
        OccupiedLinkError: If the link is already present
    """
    edit = _as_edit(e)
    _require_unweighted(G, "add_link")
    _check_node(G, edit.i)
    _check_node(G, edit.j)
    if G.w[edit.i, edit.j] != 0.0:
        raise OccupiedLinkError(f"Link ({edit.i + 1},{edit.j + 1}) is already present")
    w = G.w.copy()
    w[edit.i, edit.j] = w[edit.j, edit.i] = 1.0
    return Graph(w)


def remove_link(G: Graph, e: EditLike) -> Graph:
    edit = _as_edit(e)
    w = G.w.copy()
    w[edit.i, edit.j] = w[edit.j, edit.i] = 0.0
    return Graph(w)


def open_pairs(G: Graph) -> List[LinkEdit]:
    """Unlinked pairs (i < j) in lexicographic order."""
    return [
        LinkEdit(i, j)
        for i, j in combinations(range(G.n), 2)
        if G.w[i, j] == 0.0
    ]


def successors(G: Graph) -> List[Graph]:
    """
    All graphs obtained from G by adding one link.

    Args:
        G: Unweighted graph

    Returns:
        One graph per open pair, in lexicographic pair order; empty for a complete graph
    """
    _require_unweighted(G, "successors")
    return [add_link(G, e) for e in open_pairs(G)]


def labeled_successors(G: Graph) -> List[Tuple[LinkEdit, Graph]]:
    _require_unweighted(G, "successors")
    return [(e, add_link(G, e)) for e in open_pairs(G)]


def link_edits(G: Graph, H: Graph) -> List[LinkEdit]:
    """Pairs whose weight is larger in H than in G."""
    diff = H.w - G.w
    return [
        LinkEdit(i, j)
        for i, j in combinations(range(G.n), 2)
        if diff[i, j] > WEIGHT_TOLERANCE
    ]


def permute(G: Graph, perm: Sequence[int]) -> Graph:
    """
    Relabel nodes so that node i becomes perm[i].

    Args:
        G: Graph to relabel
        perm: A permutation of 0..n-1

    Returns:
        The relabeled graph
    """
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(G.n)):
        raise InvalidInputError(f"Not a permutation of 0..{G.n - 1}: {perm.tolist()}")
    inverse = np.argsort(perm)
    return Graph(G.w[np.ix_(inverse, inverse)])


def swap_nodes(G: Graph, i: int, j: int) -> Graph:
    perm = list(range(G.n))
    perm[i], perm[j] = j, i
    return permute(G, perm)


def _refine_colors(masks: List[int], n: int) -> List[int]:
    """Colour refinement from degrees until the partition is stable."""
    colors = [bin(m).count("1") for m in masks]
    while True:
        signatures = [
            (colors[v], tuple(sorted(colors[u] for u in range(n) if masks[v] >> u & 1)))
            for v in range(n)
        ]
        ranking = {sig: rank for rank, sig in enumerate(sorted(set(signatures)))}
        refined = [ranking[sig] for sig in signatures]
        if len(set(refined)) == len(set(colors)):
            return refined
        colors = refined


@lru_cache(maxsize=200_000)
def _canonical_key(n: int, packed: bytes) -> bytes:
    bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8))[: n * n]
    adjacency = bits.reshape(n, n).astype(bool)
    masks = [sum(1 << int(k) for k in np.flatnonzero(adjacency[v])) for v in range(n)]
    colors = _refine_colors(masks, n)

    # Slot order of colour classes: position p may only hold a node of slot_colors[p]
    slot_colors = sorted(colors)
    best: Optional[List[int]] = None
    placed: List[int] = []
    used = [False] * n

    def is_twin(u: int, v: int) -> bool:
        return (masks[u] & ~(1 << v)) == (masks[v] & ~(1 << u))

    def search(bits_so_far: List[int]) -> None:
        nonlocal best
        pos = len(placed)
        if pos == n:
            if best is None or bits_so_far > best:
                best = list(bits_so_far)
            return
        tried: List[int] = []
        for v in range(n):
            if used[v] or colors[v] != slot_colors[pos]:
                continue
            if any(is_twin(u, v) for u in tried):
                continue
            tried.append(v)
            column = [1 if masks[placed[r]] >> v & 1 else 0 for r in range(pos)]
            extended = bits_so_far + column
            if best is not None and extended < best[: len(extended)]:
                continue
            placed.append(v)
            used[v] = True
            search(extended)
            used[v] = False
            placed.pop()

    search([])
    return bytes([n]) + np.packbits(np.array(best or [], dtype=np.uint8)).tobytes()


def canonical_form(G: Graph) -> CanonicalForm:
    """
    Compute the canonical key of an unweighted graph.

    The key is the lexicographically largest column-ordered upper-triangle
    bit string over all orderings that respect the refined degree partition.

    Args:
        G: Unweighted graph with at most 10 nodes

    Returns:
        Key equal for two graphs exactly when they are isomorphic

    Raises:
        SizeLimitError: If G has more than 10 nodes
    """
    if G.n > MAX_CANONICAL_NODES:
        raise SizeLimitError(
            f"Exact canonical forms are limited to {MAX_CANONICAL_NODES} nodes, got {G.n}"
        )
    _require_unweighted(G, "canonical_form")
    packed = np.packbits(G.w.astype(np.uint8).ravel()).tobytes()
    return CanonicalForm(_canonical_key(G.n, packed))


def isomorphic(G: Graph, H: Graph) -> bool:
    """
    Check whether two unweighted graphs are isomorphic.

    Raises:
        InvalidComparisonError: If the node counts differ
    """
    if G.n != H.n:
        raise InvalidComparisonError(f"Cannot compare graphs on {G.n} and {H.n} nodes")
    if link_count(G) != link_count(H):
        return False
    if sorted(degrees(G)) != sorted(degrees(H)):
        return False
    return canonical_form(G) == canonical_form(H)


def enumerate_graph_classes(n: int, max_links: Optional[int] = None) -> List[Graph]:
    """
    One representative per isomorphism class of unweighted graphs on n nodes.

    Classes are generated layer by layer through succession, so the result
    is ordered by link count and, within a layer, by canonical key.

    Raises:
        SizeLimitError: If n exceeds 7
    """
    if n > MAX_CLASS_ENUMERATION_NODES:
        raise SizeLimitError(
            f"Class enumeration is limited to {MAX_CLASS_ENUMERATION_NODES} nodes, got {n}"
        )
    top = capacity(n) if max_links is None else min(max_links, capacity(n))
    layer = [new_empty(n)]
    classes = list(layer)
    for t in range(1, top + 1):
        found = {}
        for G in layer:
            for H in successors(G):
                found.setdefault(canonical_form(H), H)
        layer = [found[key] for key in sorted(found)]
        classes.extend(layer)
        logger.debug(f"n={n}: {len(layer)} classes with {t} links")
    return classes


def is_successor(G: Graph, H: Graph) -> bool:
    """Whether H adds exactly one link to the unweighted graph G."""
    diff = H.w - G.w
    if np.any(diff < -WEIGHT_TOLERANCE):
        return False
    upper = np.triu(diff, 1)
    return bool(np.count_nonzero(upper > WEIGHT_TOLERANCE) == 1 and abs(upper.sum() - 1.0) < MASS_TOLERANCE)


def is_feasible_path(s: FormationPath) -> bool:
    """Check the succession constraint of an unweighted path from the empty graph."""
    if s.weighted:
        return False
    for t, G in enumerate(s.graphs):
        if not is_unweighted(G) or not is_successor(s.previous(t), G):
            return False
    return True


def validate_path(s: FormationPath) -> None:
    """
    Raise InvalidPathError at the first period breaking the succession constraint.
    """
    for t, G in enumerate(s.graphs):
        if not is_unweighted(G):
            raise InvalidPathError(f"Period {t + 1} holds a weighted graph")
        if not is_successor(s.previous(t), G):
            raise InvalidPathError(f"Period {t + 1} does not add exactly one link")


def path_from_edits(n: int, edits: Iterable[EditLike]) -> FormationPath:
    """Fold a sequence of link additions into a formation path."""
    G = new_empty(n)
    graphs = []
    for e in edits:
        G = add_link(G, e)
        graphs.append(G)
    return FormationPath(tuple(graphs))


def path_edits(s: FormationPath) -> List[LinkEdit]:
    """The single link added in each period of an unweighted path."""
    edits = []
    for t, G in enumerate(s.graphs):
        added = link_edits(s.previous(t), G)
        if len(added) != 1:
            raise InvalidPathError(f"Period {t + 1} adds {len(added)} links")
        edits.append(added[0])
    return edits
