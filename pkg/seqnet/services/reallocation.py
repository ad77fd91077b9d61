"""
Neighbour reallocation and formation-path repair.

Moving all exclusive neighbours of j to i never lowers the number of walks
of any length, and repeating the move along a path turns every period into
a nested split graph without losing feasibility.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from seqnet.core.errors import (
    ConvergenceError,
    InvalidEditError,
    InvalidInputError,
    InvalidPathError,
    ReproductionError,
)
from seqnet.services.graph_core import (
    FormationPath,
    Graph,
    LinkEdit,
    add_link,
    is_unweighted,
    neighbor_masks,
    path_edits,
    validate_path,
)
from seqnet.services.metrics import (
    Dominance,
    DominanceVerdict,
    compare_profiles,
    katz_bonacich,
    walk_profile,
)
from seqnet.services.structures import is_nsg, is_weighted_nsg

logger = logging.getLogger(__name__)

REPAIR_CHECK_DEPTH = 10


@dataclass(frozen=True)
class ReallocationPlan:
    """Nodes L moved from source j to target i."""
    i: int
    j: int
    moved: frozenset


def _check_pair(G: Graph, i: int, j: int) -> None:
    if i == j:
        raise InvalidEditError(f"Reallocation needs two distinct nodes, got {i + 1} twice")
    for node in (i, j):
        if node < 0 or node >= G.n:
            raise InvalidEditError(f"Node {node + 1} is outside 1..{G.n}")


def reallocate_neighbors(G: Graph, i: int, j: int) -> Tuple[Graph, ReallocationPlan]:
    """
    Move every neighbour of j that is not a neighbour of i over to i.

    Args:
        G: Unweighted graph
        i: Receiving node
        j: Ceding node

    Returns:
        The reallocated graph and the plan with the full moved set L
    """
    _check_pair(G, i, j)
    if not is_unweighted(G):
        raise InvalidInputError("reallocate_neighbors requires an unweighted graph")
    moved = frozenset(
        l for l in range(G.n)
        if l not in (i, j) and G.w[i, l] == 0.0 and G.w[j, l] == 1.0
    )
    w = G.w.copy()
    for l in moved:
        w[i, l] = w[l, i] = 1.0
        w[j, l] = w[l, j] = 0.0
    return Graph(w), ReallocationPlan(i, j, moved)


def split_allocation(G: Graph, i: int, j: int, L: Sequence[int]) -> Tuple[Graph, Graph]:
    """
    Attach the node set L to i and, alternatively, to j.

    Requires N_j minus {i} to be contained in N_i minus {j} and L to avoid
    both neighborhoods.

    Returns:
        (G + sum E_il, G + sum E_jl)
    """
    _check_pair(G, i, j)
    masks = neighbor_masks(G)
    outer_i = masks[i] & ~(1 << j)
    outer_j = masks[j] & ~(1 << i)
    if outer_j & outer_i != outer_j:
        raise InvalidInputError(f"Neighborhood of node {j + 1} is not nested in that of node {i + 1}")
    L = sorted(set(L))
    if not L:
        raise InvalidInputError("The attached node set must not be empty")
    for l in L:
        if l in (i, j) or G.w[i, l] != 0.0 or G.w[j, l] != 0.0:
            raise InvalidInputError(f"Node {l + 1} cannot be attached to nodes {i + 1} and {j + 1}")
    G_hat, G_bar = G, G
    for l in L:
        G_hat = add_link(G_hat, (i, l))
        G_bar = add_link(G_bar, (j, l))
    return G_hat, G_bar


def reallocate_dominates(
    G: Graph,
    i: int,
    j: int,
    theta: Optional[Sequence[float]] = None,
    k_max: Optional[int] = None,
) -> DominanceVerdict:
    """
    Compare theta-weighted walk profiles of the reallocated graph against G for k >= 2.
    """
    k_max = 2 * G.n if k_max is None else k_max
    G_hat, _ = reallocate_neighbors(G, i, j)
    return compare_profiles(walk_profile(G_hat, k_max, theta), walk_profile(G, k_max, theta), k_from=2)


def _violating_orientations(before: Graph, edit: LinkEdit) -> List[Tuple[int, int]]:
    """
    Pairs (i, j) made non-nested by adding edit to the NSG before.

    j is an endpoint of the edit whose neighborhood was strictly nested in
    that of i before the edit; i does not see the new neighbour.
    """
    masks = neighbor_masks(before)
    pairs = []
    for e in (edit.i, edit.j):
        f = edit.other(e)
        for y in range(before.n):
            if y in (e, f):
                continue
            own = masks[e] & ~(1 << y)
            partner = masks[y] & ~(1 << e)
            strictly_nested = own & partner == own and own != partner
            if strictly_nested and not partner >> f & 1:
                pairs.append((y, e))
    degree = [bin(m).count("1") for m in masks]
    return sorted(set(pairs), key=lambda pair: (-degree[pair[0]], pair[0], pair[1]))


def _rebuild_suffix(
    graphs: List[Graph], edits: List[LinkEdit], start: int, i: int, j: int
) -> List[Graph]:
    """
    Replay the edits from period start on, redirecting links of j towards i.

    An edit touching {i, j} x {l} is placed at (i, l) when that slot is
    open, otherwise at (j, l); every other edit is copied.
    """
    rebuilt = list(graphs[:start])
    G = graphs[start - 1] if start > 0 else Graph(np.zeros_like(graphs[0].w))
    for edit in edits[start:]:
        if {edit.i, edit.j} == {i, j} or not (edit.touches(i) or edit.touches(j)):
            placed = edit
        else:
            l = edit.other(i) if edit.touches(i) else edit.other(j)
            placed = LinkEdit(i, l) if G.w[i, l] == 0.0 else LinkEdit(j, l)
        G = add_link(G, placed)
        rebuilt.append(G)
    return rebuilt


def _check_pass(old: List[Graph], new: List[Graph], k_max: int) -> None:
    for t, (before, after) in enumerate(zip(old, new)):
        verdict = compare_profiles(walk_profile(after, k_max), walk_profile(before, k_max), k_from=2)
        if verdict.verdict not in (Dominance.STRICTLY_DOMINATES, Dominance.EQUAL):
            raise ReproductionError(
                f"Repair pass lowered walk counts at period {t + 1} ({verdict.verdict.value})"
            )


def _repair_pass(graphs: List[Graph], first_bad: int) -> Tuple[List[Graph], List[Tuple[int, int]]]:
    """
    Reallocate along the path until period first_bad is an NSG.

    Every step strictly raises the walk counts of period first_bad, so the
    loop ends; a pair whose replay nests the period at once is preferred.
    """
    pairs = []
    while not is_nsg(graphs[first_bad]):
        edits = path_edits(FormationPath(tuple(graphs)))
        before = graphs[first_bad - 1] if first_bad > 0 else Graph(np.zeros_like(graphs[0].w))
        candidates = _violating_orientations(before, edits[first_bad])
        if not candidates:
            candidates = [is_nsg(graphs[first_bad]).violating_pair]
        replays = [(pair, _rebuild_suffix(graphs, edits, first_bad, *pair)) for pair in candidates]
        pair, graphs = next(
            ((pair, rebuilt) for pair, rebuilt in replays if is_nsg(rebuilt[first_bad])),
            replays[0],
        )
        pairs.append(pair)
    return graphs, pairs


def repair_trace(s: FormationPath, k_max: int = REPAIR_CHECK_DEPTH) -> List[FormationPath]:
    """
    The input path followed by the path after each repair pass.

    Each pass finds the first non-NSG period t', picks a violating pair
    (i, j) created by that period's edit with i the better-connected node,
    and replays the edits from t' on with links redirected from j to i.
    Every replayed period equals the neighbour reallocation of the original
    graph, so walk counts never drop.

    Raises:
        InvalidPathError: If s is not a feasible unweighted path
        ConvergenceError: If more than T passes are needed
        ReproductionError: If a pass lowers a walk count
    """
    if s.weighted:
        raise InvalidPathError("Path repair expects an unweighted path")
    validate_path(s)
    graphs = list(s.graphs)
    trace = [s]
    while True:
        first_bad = next((t for t, G in enumerate(graphs) if not is_nsg(G)), None)
        if first_bad is None:
            break
        if len(trace) > len(graphs):
            raise ConvergenceError(f"Path repair did not finish within {len(graphs)} passes")
        repaired, pairs = _repair_pass(graphs, first_bad)
        moves = ", ".join(f"({i + 1},{j + 1})" for i, j in pairs)
        logger.debug(f"Repair pass {len(trace)}: period {first_bad + 1}, pairs {moves}")
        _check_pass(graphs, repaired, k_max)
        graphs = repaired
        trace.append(FormationPath(tuple(graphs)))
    validate_path(trace[-1])
    logger.info(f"Path repaired in {len(trace) - 1} passes")
    return trace


def repair_path(s: FormationPath, k_max: int = REPAIR_CHECK_DEPTH) -> FormationPath:
    """
    Turn every period of a feasible unweighted path into an NSG.

    Args:
        s: Feasible unweighted formation path
        k_max: Depth of the per-pass dominance check

    Returns:
        Feasible path of the same length with an NSG in every period,
        walk-dominating s period by period

    Raises:
        InvalidPathError: If s is not feasible
    """
    return repair_trace(s, k_max)[-1]


def reallocate_weight(G: Graph, i: int, j: int) -> Graph:
    """
    Shift as much weight as possible from j's links to i's links.

    For every k outside {i, j}, min(g_jk, 1 - g_ik) moves from (j, k) to
    (i, k), so afterwards g_ik = 1 or g_jk = 0. Total weight is preserved.
    """
    _check_pair(G, i, j)
    w = G.w.copy()
    for k in range(G.n):
        if k in (i, j):
            continue
        total = w[i, k] + w[j, k]
        w[i, k] = w[k, i] = min(total, 1.0)
        w[j, k] = w[k, j] = max(0.0, total - 1.0)
    return Graph(w)


def repair_weighted_path(s_w: FormationPath, phi: float, max_passes: Optional[int] = None) -> FormationPath:
    """
    Turn every period of a feasible weighted path into a weighted NSG.

    Nodes are ranked once by KB centrality at phi in the last period (ties
    to the smaller index). At the first period that is not a weighted NSG,
    the violating pair is oriented so that i outranks j, and
    reallocate_weight(., i, j) is applied to every period. Weight only ever
    moves towards higher-ranked nodes, so the passes end.

    Raises:
        InvalidPathError: If s_w is not a feasible weighted path
        ConvergenceError: If the pass cap is reached
    """
    from seqnet.services.weighted_planner import is_feasible_weighted_path

    if not is_feasible_weighted_path(s_w):
        raise InvalidPathError("repair_weighted_path expects a feasible weighted path")
    graphs = list(s_w.graphs)
    n = s_w.n
    b_values = katz_bonacich(graphs[-1], phi).values
    rank = {v: r for r, v in enumerate(sorted(range(n), key=lambda v: (-b_values[v], v)))}
    max_passes = max_passes or 50 * len(graphs) * n * n
    for passes in range(max_passes + 1):
        first_bad = next((t for t, G in enumerate(graphs) if not is_weighted_nsg(G)), None)
        if first_bad is None:
            logger.info(f"Weighted path repaired in {passes} passes")
            return FormationPath(tuple(graphs), weighted=True)
        a, b = is_weighted_nsg(graphs[first_bad]).violating_pair
        i, j = (a, b) if rank[a] < rank[b] else (b, a)
        logger.debug(f"Weighted repair pass {passes + 1}: period {first_bad + 1}, ({i + 1},{j + 1})")
        graphs = [reallocate_weight(G, i, j) for G in graphs]
    raise ConvergenceError(f"Weighted path repair did not finish within {max_passes} passes")
