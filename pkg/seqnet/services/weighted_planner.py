"""
Sequential weight allocation.

Each period adds one unit of link weight, possibly spread over several
pairs. This module samples weighted successors on a two-pair grid, builds
the one-parameter family between the two NSG successors of a
quasi-complete graph, optimizes the KB-squared step over both, and
constructs the perturbation pair that shows strictly weighted paths are
not extreme points.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from seqnet.core.config import settings, settings_helper
from seqnet.core.errors import (
    InvalidBaseError,
    InvalidInputError,
    InvalidParameterError,
    InvalidPathError,
    SaturationError,
    SizeLimitError,
)
from seqnet.services.graph_core import (
    MASS_TOLERANCE,
    WEIGHT_TOLERANCE,
    FormationPath,
    Graph,
    capacity,
    is_unweighted,
    new_empty,
)
from seqnet.services.metrics import aggregate_kb_squared
from seqnet.services.planner import DiscountSchedule, UtilitySpec, evaluate_path
from seqnet.services.structures import QcDecomposition, is_quasi_complete

logger = logging.getLogger(__name__)

REFINE_XATOL = 1e-10
SWEEP_STEP = 1e-3
DEFAULT_PERTURBATION = 1e-3

MatrixLike = Union[np.ndarray, Sequence[Sequence[float]]]


@dataclass(frozen=True, eq=False)
class WeightEdit:
    """
    One period's unit of link weight.

    Attributes:
        w: symmetric n x n matrix, entrywise >= 0, entries summing to 2
    """
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidInputError(f"Weight edit must be square, got shape {w.shape}")
        if not np.allclose(w, w.T, rtol=0.0, atol=WEIGHT_TOLERANCE):
            raise InvalidInputError("Weight edit is not symmetric")
        if np.any(w < -WEIGHT_TOLERANCE):
            raise InvalidInputError("Weight edit has negative entries")
        if np.any(np.abs(np.diag(w)) > WEIGHT_TOLERANCE):
            raise InvalidInputError("Weight edit has a non-zero diagonal")
        if abs(w.sum() - 2.0) > MASS_TOLERANCE:
            raise InvalidInputError(f"Weight edit must carry total mass 2, got {w.sum():.12g}")
        w = np.clip((w + w.T) / 2.0, 0.0, None)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def between(cls, G: Graph, H: Graph) -> "WeightEdit":
        """The edit taking G to H."""
        return cls(H.w - G.w)

    def entries(self) -> List[Tuple[int, int, float]]:
        """Non-zero (i, j, dw) with i < j, 0-based."""
        n = self.w.shape[0]
        return [
            (i, j, float(self.w[i, j]))
            for i, j in combinations(range(n), 2)
            if self.w[i, j] > WEIGHT_TOLERANCE
        ]

    def to_csv(self) -> str:
        rows = ["i,j,dw"]
        rows.extend(f"{i + 1},{j + 1},{dw!r}" for i, j, dw in self.entries())
        return "\n".join(rows) + "\n"


def apply_weight_edit(G: Graph, W: Union[WeightEdit, MatrixLike]) -> Graph:
    """
    Add one unit of weight to G.

    Raises:
        InvalidInputError: If W is not a valid edit or G + W exceeds 1 somewhere
    """
    edit = W if isinstance(W, WeightEdit) else WeightEdit(np.asarray(W, dtype=float))
    if edit.w.shape != G.w.shape:
        raise InvalidInputError(f"Edit of shape {edit.w.shape} does not fit a graph on {G.n} nodes")
    w = G.w + edit.w
    if np.any(w > 1.0 + WEIGHT_TOLERANCE):
        raise InvalidInputError("Weight edit pushes a link above 1")
    return Graph(np.clip(w, 0.0, 1.0))


def is_feasible_weighted_path(s_w: FormationPath) -> bool:
    """
    Check weighted succession from the empty graph.

    Each period's increment must be symmetric, entrywise non-negative and of
    total mass 2 (one unit per undirected pair); unweighted paths qualify.
    """
    for t, G in enumerate(s_w.graphs):
        diff = G.w - s_w.previous(t).w
        if np.any(diff < -WEIGHT_TOLERANCE):
            return False
        if not np.allclose(diff, diff.T, rtol=0.0, atol=WEIGHT_TOLERANCE):
            return False
        if abs(diff.sum() - 2.0) > MASS_TOLERANCE:
            return False
    return True


def _pair_index(n: int) -> List[Tuple[int, int]]:
    return list(combinations(range(n), 2))


def _place(G: Graph, amounts: Dict[Tuple[int, int], float]) -> Graph:
    w = np.array(G.w)
    for (i, j), a in amounts.items():
        w[i, j] = w[j, i] = min(1.0, w[i, j] + a)
    return Graph(w)


def weighted_successors_grid(G: Graph, resolution: int) -> List[Graph]:
    """
    Sample of the weighted successors of G.

    One unit of mass is placed on a single pair, or split k/r : (r-k)/r over
    two pairs. When the first pair cannot hold its share, the share is
    clamped to the pair's capacity and the rest goes to the second pair.
    Placements that do not fit are dropped and duplicates are removed.

    Raises:
        InvalidParameterError: If resolution < 1
        SaturationError: If no placement fits
    """
    if resolution < 1:
        raise InvalidParameterError(f"Grid resolution must be at least 1, got {resolution}")
    pairs = [p for p in _pair_index(G.n) if 1.0 - G.w[p] > WEIGHT_TOLERANCE]
    room = {p: 1.0 - G.w[p] for p in pairs}
    found: Dict[bytes, Graph] = {}

    def keep(amounts: Dict[Tuple[int, int], float]) -> None:
        H = _place(G, amounts)
        found.setdefault(np.round(H.w, 12).tobytes(), H)

    for p in pairs:
        if room[p] >= 1.0 - WEIGHT_TOLERANCE:
            keep({p: 1.0})
    for p, q in combinations(pairs, 2):
        for first, second in ((p, q), (q, p)):
            for k in range(1, resolution + 1):
                share = min(k / resolution, room[first])
                rest = 1.0 - share
                if rest <= room[second] + WEIGHT_TOLERANCE:
                    keep({first: share, second: rest})
    if not found:
        raise SaturationError(f"No grid placement of one unit fits (free capacity {sum(room.values()):.6g})")
    return list(found.values())


@dataclass(frozen=True)
class AlphaFamily:
    """
    Segment between the two NSG successors of a quasi-complete graph.

    G[alpha] puts alpha on the pair (next clique node, spoke) and 1 - alpha
    on the pair (top hub, first isolated node). G[1] is the quasi-complete
    successor and G[0] the other unweighted NSG successor.
    """
    base: Graph
    decomposition: QcDecomposition
    isolated: int

    @classmethod
    def of(cls, base: Graph) -> "AlphaFamily":
        """
        Raises:
            InvalidBaseError: If base is not quasi-complete or has a single NSG successor class
        """
        decomposition = is_quasi_complete(base)
        if decomposition is None:
            raise InvalidBaseError("Base graph is not quasi-complete")
        if decomposition.overflow == 0:
            raise InvalidBaseError("Base graph is a complete clique; its NSG successor is unique")
        used = set(decomposition.clique_nodes) | {decomposition.spoke_node}
        isolated = [v for v in range(base.n) if v not in used]
        if not isolated:
            raise InvalidBaseError("Base graph has no isolated node; its NSG successor is unique")
        return cls(base, decomposition, isolated[0])

    @property
    def extension_pair(self) -> Tuple[int, int]:
        d = self.decomposition
        return d.clique_nodes[d.overflow], d.spoke_node

    @property
    def spoke_pair(self) -> Tuple[int, int]:
        return self.decomposition.clique_nodes[0], self.isolated

    def member(self, alpha: float) -> Graph:
        if not 0.0 <= alpha <= 1.0:
            raise InvalidParameterError(f"alpha must lie in [0, 1], got {alpha}")
        w = np.array(self.base.w)
        (a, b), (c, d) = self.extension_pair, self.spoke_pair
        w[a, b] = w[b, a] = alpha
        w[c, d] = w[d, c] = 1.0 - alpha
        return Graph(w)


def alpha_family(base: Graph, alpha: float) -> Graph:
    """The member G[alpha] of the family spanned by the NSG successors of base."""
    return AlphaFamily.of(base).member(alpha)


def _score_grid(graphs: List[Graph], phi: float) -> List[float]:
    with ThreadPoolExecutor(max_workers=settings_helper.get_thread_count()) as pool:
        return list(pool.map(lambda H: aggregate_kb_squared(H, phi), graphs))


def best_weighted_step_kb2(G: Graph, phi: float, resolution: int) -> Graph:
    """
    Weighted successor of G maximizing aggregate KB-squared.

    The two-pair grid is scored first. When G is quasi-complete with two
    NSG successor classes, the family G[alpha] is refined by bounded
    scalar search (xatol 1e-10), cross-checked by a dense sweep at 1e-3
    spacing and both endpoints. Ties prefer the grid candidate.

    Raises:
        DivergenceError: If phi is too large for some candidate
    """
    grid = weighted_successors_grid(G, resolution)
    scores = _score_grid(grid, phi)
    best_index = int(np.argmax(scores))
    best, best_value = grid[best_index], scores[best_index]
    logger.debug(f"Grid of {len(grid)} successors, best b2 {best_value!r}")

    try:
        family = AlphaFamily.of(G)
    except InvalidBaseError as e:
        logger.debug(f"No alpha refinement: {e}")
        return best

    def value(alpha: float) -> float:
        return aggregate_kb_squared(family.member(alpha), phi)

    refined = minimize_scalar(lambda a: -value(a), bounds=(0.0, 1.0), method="bounded",
                              options={"xatol": REFINE_XATOL})
    sweep = np.linspace(0.0, 1.0, int(round(1.0 / SWEEP_STEP)) + 1)
    sweep_values = _score_grid([family.member(float(a)) for a in sweep], phi)
    sweep_alpha = float(sweep[int(np.argmax(sweep_values))])
    refined_alpha = float(refined.x)
    if abs(refined_alpha - sweep_alpha) > 2.0 * SWEEP_STEP and max(sweep_values) > -refined.fun:
        logger.warning(
            f"Bounded search settled at alpha={refined_alpha:.6f}, dense sweep prefers {sweep_alpha:.3f}"
        )

    for alpha in (1.0, 0.0, sweep_alpha, refined_alpha):
        candidate = value(alpha)
        if candidate > best_value * (1.0 + 1e-12) + 1e-15:
            best, best_value = family.member(alpha), candidate
    logger.info(f"Best weighted step: b2={best_value!r}, unweighted={is_unweighted(best)}")
    return best


def _first_weighted_period(s_w: FormationPath) -> Optional[Tuple[int, Tuple[int, int], Tuple[int, int]]]:
    for t, G in enumerate(s_w.graphs):
        interior = [
            p for p in _pair_index(G.n)
            if WEIGHT_TOLERANCE < G.w[p] < 1.0 - WEIGHT_TOLERANCE
        ]
        if len(interior) >= 2:
            return t, interior[0], interior[1]
    return None


def perturb_weighted_path(
    s_w: FormationPath, delta: float = DEFAULT_PERTURBATION
) -> Optional[Tuple[FormationPath, FormationPath]]:
    """
    Split a path with a strictly weighted period into two feasible paths.

    At the earliest period t' with interior entries g_ij and g_kl, every
    period t >= t' is rewritten as
        g+_ij = max(g_ij - delta, g_ij + g_kl - 1), g-_ij = min(g_ij + delta, 1)
        g+_kl = min(g_kl + delta, 1),              g-_kl = max(g_kl - delta, g_kl + g_ij - 1)
    with all other entries unchanged. Both pairs keep g_ij + g_kl in every
    period, and s_w is the midpoint while both entries stay interior.
    delta is capped at the smaller interior entry of t' so no weight turns
    negative.

    Returns:
        (s+, s-), or None when s_w is unweighted (an extreme point)

    Raises:
        InvalidPathError: If s_w is not a feasible weighted path
        InvalidParameterError: If delta is not positive
    """
    if delta <= 0.0:
        raise InvalidParameterError(f"Perturbation must be positive, got {delta}")
    if not is_feasible_weighted_path(s_w):
        raise InvalidPathError("perturb_weighted_path expects a feasible weighted path")
    located = _first_weighted_period(s_w)
    if located is None:
        logger.debug("Path is unweighted; it is an extreme point")
        return None
    start, (i, j), (k, l) = located
    first = s_w.graphs[start]
    step = min(delta, first.w[i, j], first.w[k, l])
    if step < delta:
        logger.debug(f"Perturbation capped at {step:g} by the interior entries of period {start + 1}")
    delta = step
    plus, minus = list(s_w.graphs[:start]), list(s_w.graphs[:start])
    for G in s_w.graphs[start:]:
        g_ij, g_kl = G.w[i, j], G.w[k, l]
        up, down = np.array(G.w), np.array(G.w)
        up[i, j] = up[j, i] = max(g_ij - delta, g_ij + g_kl - 1.0)
        up[k, l] = up[l, k] = min(g_kl + delta, 1.0)
        down[i, j] = down[j, i] = min(g_ij + delta, 1.0)
        down[k, l] = down[l, k] = max(g_kl - delta, g_kl + g_ij - 1.0)
        plus.append(Graph(up))
        minus.append(Graph(down))
    return FormationPath(tuple(plus), weighted=True), FormationPath(tuple(minus), weighted=True)


def random_weighted_path(
    n: int, T: int, rng: Optional[np.random.Generator] = None, max_split: int = 2
) -> FormationPath:
    """
    Random feasible weighted path: each period spreads one unit over at most
    max_split open pairs, topping up other open pairs when capacity runs out.
    """
    if T <= 0 or T > capacity(n):
        raise InvalidParameterError(f"Horizon {T} is outside [1, {capacity(n)}] for n={n}")
    rng = rng if rng is not None else np.random.default_rng(settings.SEED)
    pairs = _pair_index(n)
    G = new_empty(n)
    graphs = []
    for _ in range(T):
        room = np.array([1.0 - G.w[p] for p in pairs])
        open_idx = np.flatnonzero(room > WEIGHT_TOLERANCE)
        k = int(rng.integers(1, max_split + 1))
        chosen = rng.choice(open_idx, size=min(k, len(open_idx)), replace=False)
        add = np.zeros(len(pairs))
        add[chosen] = np.minimum(rng.dirichlet(np.ones(len(chosen))), room[chosen])
        left = 1.0 - add.sum()
        for idx in rng.permutation(open_idx):
            if left <= 0.0:
                break
            take = min(room[idx] - add[idx], left)
            add[idx] += take
            left -= take
        G = _place(G, {pairs[idx]: float(add[idx]) for idx in np.flatnonzero(add)})
        graphs.append(G)
    return FormationPath(tuple(graphs), weighted=True)


def best_grid_path(
    n: int,
    T: int,
    D: DiscountSchedule,
    u: UtilitySpec,
    resolution: int,
    max_paths: Optional[int] = None,
) -> Tuple[float, FormationPath]:
    """
    Best weighted path over the two-pair grid by exhaustive depth-first search.

    Partial paths reaching the same graph share their value-to-go.

    Args:
        max_paths: Cap on distinct partial paths (graph, period) expanded

    Raises:
        SizeLimitError: If the cap is exceeded
    """
    if len(D) != T:
        raise InvalidParameterError(f"Schedule has {len(D)} periods, horizon is {T}")
    limit = settings.GRID_MAX_PATHS if max_paths is None else max_paths
    memo: Dict[Tuple[int, bytes], Tuple[float, Tuple[Graph, ...]]] = {}

    def best(t: int, G: Graph) -> Tuple[float, Tuple[Graph, ...]]:
        if t == T:
            return 0.0, ()
        key = (t, np.round(G.w, 12).tobytes())
        if key in memo:
            return memo[key]
        if len(memo) >= limit:
            raise SizeLimitError(f"Grid search exceeds {limit} partial paths")
        top = (-np.inf, ())
        for H in weighted_successors_grid(G, resolution):
            gain = D[t] * u(H) if D[t] else 0.0
            rest, tail = best(t + 1, H)
            if gain + rest > top[0]:
                top = (gain + rest, (H,) + tail)
        memo[key] = top
        return top

    value, graphs = best(0, new_empty(n))
    logger.info(f"Grid search n={n}, T={T}, r={resolution}: {len(memo)} states, value {value!r}")
    return value, FormationPath(graphs, weighted=True)


def sample_grid_paths(
    n: int,
    T: int,
    D: DiscountSchedule,
    u: UtilitySpec,
    resolution: int,
    samples: int,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, FormationPath]:
    """Best of `samples` random walks through the two-pair grid."""
    rng = rng if rng is not None else np.random.default_rng(settings.SEED)
    best_value, best_path = -np.inf, None
    for _ in range(samples):
        G = new_empty(n)
        graphs = []
        for _ in range(T):
            options = weighted_successors_grid(G, resolution)
            G = options[int(rng.integers(len(options)))]
            graphs.append(G)
        path = FormationPath(tuple(graphs), weighted=True)
        value = evaluate_path(path, D, u)
        if value > best_value:
            best_value, best_path = value, path
    return best_value, best_path
