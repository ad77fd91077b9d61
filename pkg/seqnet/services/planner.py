"""
Planner service.

Objective evaluation over formation paths, discount schedules, greedy
design, exact dynamic programming over isomorphism classes and the
link-delegation variant.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from seqnet.core.config import settings, settings_helper
from seqnet.core.errors import (
    InvalidHorizonError,
    InvalidInputError,
    InvalidParameterError,
    InvalidScheduleError,
    NoMoveError,
    SizeLimitError,
)
from seqnet.services.games import ResponseFunction, planner_welfare, solve_equilibrium
from seqnet.services.graph_core import (
    MAX_CANONICAL_NODES,
    CanonicalForm,
    FormationPath,
    Graph,
    LinkEdit,
    add_link,
    canonical_form,
    capacity,
    degrees,
    isomorphic,
    labeled_successors,
    new_empty,
    path_edits,
)
from seqnet.services.memo_service import MemoryMemoService
from seqnet.services.metrics import (
    aggregate_kb,
    aggregate_kb_squared,
    diffusion_centrality,
    katz_bonacich,
    spectral_radius,
    walk_count_weighted,
)
from seqnet.services.structures import is_nsg

logger = logging.getLogger(__name__)

ARGMAX_TOLERANCE = 1e-12
DP_MAX_NODES = 7
DP_MAX_NODES_NSG = 9
BRUTE_FORCE_MAX_NODES = 5
MAX_OPTIMAL_PATHS = 10_000


class UtilityKind(str, Enum):
    WALK_WEIGHTED = "walks"
    KB_AGGREGATE = "kb"
    KB_SQUARED = "kb2"
    DIFFUSION = "diffusion"
    SPECTRAL_RADIUS = "spectral"
    EQUILIBRIUM_WELFARE = "welfare"


THETA_KINDS = (UtilityKind.WALK_WEIGHTED, UtilityKind.KB_AGGREGATE, UtilityKind.DIFFUSION)


@dataclass(frozen=True)
class UtilitySpec:
    """
    Instantaneous utility u(G) of the planner.

    Attributes:
        kind: utility family
        phi: decay for the KB and diffusion families
        length: truncation L for diffusion
        coeffs: weights of walk lengths 1, 2, ... for the walk-weighted family
        response: best response of the equilibrium-welfare family
        transform: convex transform of equilibrium actions
        theta: optional node weights (walk, KB and diffusion families only)
    """
    kind: UtilityKind
    phi: float = 0.0
    length: int = 0
    coeffs: Tuple[float, ...] = ()
    response: Optional[ResponseFunction] = None
    transform: str = "identity"
    theta: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.theta is not None:
            if self.kind not in THETA_KINDS:
                raise InvalidParameterError(f"Node weights are not supported by the {self.kind.value} utility")
            object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        if self.kind in (UtilityKind.KB_AGGREGATE, UtilityKind.KB_SQUARED) and self.phi < 0.0:
            raise InvalidParameterError(f"Decay must be non-negative, got {self.phi}")
        if self.kind is UtilityKind.DIFFUSION and not (0.0 <= self.phi <= 1.0 and self.length >= 0):
            raise InvalidParameterError("Diffusion needs phi in [0, 1] and L >= 0")
        if self.kind is UtilityKind.WALK_WEIGHTED:
            if not self.coeffs or any(c < 0.0 for c in self.coeffs):
                raise InvalidParameterError("Walk weights must be a non-empty non-negative sequence")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.kind is UtilityKind.EQUILIBRIUM_WELFARE and self.response is None:
            raise InvalidParameterError("Equilibrium welfare needs a best-response function")

    @classmethod
    def walk_weighted(cls, coeffs: Sequence[float], theta=None) -> "UtilitySpec":
        return cls(UtilityKind.WALK_WEIGHTED, coeffs=tuple(coeffs), theta=theta)

    @classmethod
    def kb_aggregate(cls, phi: float, theta=None) -> "UtilitySpec":
        return cls(UtilityKind.KB_AGGREGATE, phi=phi, theta=theta)

    @classmethod
    def kb_squared(cls, phi: float) -> "UtilitySpec":
        return cls(UtilityKind.KB_SQUARED, phi=phi)

    @classmethod
    def diffusion(cls, phi: float, length: int, theta=None) -> "UtilitySpec":
        return cls(UtilityKind.DIFFUSION, phi=phi, length=length, theta=theta)

    @classmethod
    def spectral(cls) -> "UtilitySpec":
        return cls(UtilityKind.SPECTRAL_RADIUS)

    @classmethod
    def equilibrium_welfare(cls, response: ResponseFunction, transform: str = "identity") -> "UtilitySpec":
        return cls(UtilityKind.EQUILIBRIUM_WELFARE, response=response, transform=transform)

    def __call__(self, G: Graph) -> float:
        """Evaluate u(G)."""
        if self.kind is UtilityKind.WALK_WEIGHTED:
            return float(sum(
                c * walk_count_weighted(G, k, self.theta)
                for k, c in enumerate(self.coeffs, start=1)
                if c
            ))
        if self.kind is UtilityKind.KB_AGGREGATE:
            return aggregate_kb(G, self.phi, self.theta)
        if self.kind is UtilityKind.KB_SQUARED:
            return aggregate_kb_squared(G, self.phi)
        if self.kind is UtilityKind.DIFFUSION:
            return diffusion_centrality(G, self.phi, self.length, self.theta).aggregate
        if self.kind is UtilityKind.SPECTRAL_RADIUS:
            return spectral_radius(G)
        trace = solve_equilibrium(G, self.response)
        return planner_welfare(trace.actions, self.transform)


@dataclass(frozen=True)
class DiscountSchedule:
    """Per-period weights D(1..T) in [0, 1]."""
    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise InvalidHorizonError("A discount schedule needs at least one period")
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise InvalidScheduleError("Discount weights must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, t: int) -> float:
        return self.values[t]

    def __iter__(self):
        return iter(self.values)

    @property
    def strictly_positive(self) -> bool:
        return all(v > 0.0 for v in self.values)


@dataclass(frozen=True)
class AgentSequence:
    """Delegated agents q_1..q_T as 1-based node labels."""
    q: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(int(x) for x in self.q))

    def validate(self, n: int) -> None:
        bad = [x for x in self.q if not 1 <= x <= n]
        if bad:
            raise InvalidInputError(f"Agents {bad} are outside 1..{n}")

    def __len__(self) -> int:
        return len(self.q)


def _check_horizon(T: int) -> None:
    if T <= 0:
        raise InvalidHorizonError(f"Horizon must be positive, got {T}")


def discount_farsighted(T: int) -> DiscountSchedule:
    """All weight on the last period: (0, ..., 0, 1)."""
    _check_horizon(T)
    return DiscountSchedule(tuple([0.0] * (T - 1) + [1.0]))


def discount_geometric(delta: float, T: int) -> DiscountSchedule:
    """D(t) = delta^(t-1)."""
    _check_horizon(T)
    if not 0.0 < delta <= 1.0:
        raise InvalidParameterError(f"Discount factor must be in (0, 1], got {delta}")
    return DiscountSchedule(tuple(delta ** t for t in range(T)))


def discount_myopic(epsilon: float, T: int) -> DiscountSchedule:
    """D(t) = epsilon^(t-1) with a small epsilon."""
    _check_horizon(T)
    if not 0.0 < epsilon <= 1.0:
        raise InvalidParameterError(f"Myopic epsilon must be in (0, 1], got {epsilon}")
    return DiscountSchedule(tuple(epsilon ** t for t in range(T)))


def evaluate_path(s: FormationPath, D: DiscountSchedule, u: UtilitySpec) -> float:
    """
    Discounted value sum_t D(t) u(G(t)); periods with D(t) = 0 are skipped.

    Raises:
        InvalidScheduleError: If |D| differs from the path length
    """
    if len(D) != len(s):
        raise InvalidScheduleError(f"Schedule has {len(D)} periods, path has {len(s)}")
    return float(sum(d * u(G) for d, G in zip(D, s) if d != 0.0))


def period_utilities(s: FormationPath, u: UtilitySpec) -> List[float]:
    return [u(G) for G in s]


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= ARGMAX_TOLERANCE * max(1.0, abs(a), abs(b))


def _check_capacity(n: int, T: int) -> None:
    _check_horizon(T)
    if T > capacity(n):
        raise InvalidHorizonError(f"Horizon {T} exceeds the {capacity(n)} node pairs of n={n}")


def greedy_step(G: Graph, u: UtilitySpec) -> Tuple[LinkEdit, Graph]:
    """
    Successor maximizing u; ties go to the smallest canonical key, then the first pair.
    """
    scored = [(e, H, u(H)) for e, H in labeled_successors(G)]
    if not scored:
        raise InvalidHorizonError("No open pair left to link")
    best = max(value for _, _, value in scored)
    tied = [(e, H) for e, H, value in scored if _near(value, best)]
    if len(tied) > 1 and G.n <= MAX_CANONICAL_NODES:
        key = min(canonical_form(H) for _, H in tied)
        tied = [(e, H) for e, H in tied if canonical_form(H) == key]
    return tied[0]


def greedy_path(n: int, T: int, u: UtilitySpec) -> FormationPath:
    """
    Myopically best successor in every period.

    Raises:
        InvalidHorizonError: If T exceeds n(n-1)/2
    """
    _check_capacity(n, T)
    G = new_empty(n)
    graphs = []
    for t in range(T):
        e, G = greedy_step(G, u)
        logger.debug(f"Greedy period {t + 1}: link ({e.i + 1},{e.j + 1})")
        graphs.append(G)
    return FormationPath(tuple(graphs))


@dataclass
class _ClassGraph:
    """Forward layers of the class-level state graph."""
    layers: List[Dict[CanonicalForm, Graph]]
    children: Dict[CanonicalForm, Tuple[CanonicalForm, ...]]


def _expand(G: Graph, restrict_to_nsg: bool) -> Dict[CanonicalForm, Graph]:
    found: Dict[CanonicalForm, Graph] = {}
    for _, H in labeled_successors(G):
        if restrict_to_nsg and not is_nsg(H):
            continue
        found.setdefault(canonical_form(H), H)
    return found


def _build_layers(n: int, T: int, restrict_to_nsg: bool) -> _ClassGraph:
    root = new_empty(n)
    layers = [{canonical_form(root): root}]
    children: Dict[CanonicalForm, Tuple[CanonicalForm, ...]] = {}
    states = 1
    with ThreadPoolExecutor(max_workers=settings_helper.get_thread_count()) as pool:
        for t in range(1, T + 1):
            current = layers[-1]
            keys = sorted(current)
            expansions = pool.map(lambda key: _expand(current[key], restrict_to_nsg), keys)
            layer: Dict[CanonicalForm, Graph] = {}
            for key, found in zip(keys, expansions):
                children[key] = tuple(sorted(found))
                for child, H in found.items():
                    layer.setdefault(child, H)
            states += len(layer)
            if states > settings.DP_MAX_STATES:
                raise SizeLimitError(
                    f"DP state space exceeds {settings.DP_MAX_STATES} classes at period {t}; "
                    f"use restrict_to_nsg"
                )
            layers.append(layer)
            logger.debug(f"DP layer {t}: {len(layer)} classes")
    logger.info(f"DP over n={n}, T={T}: {states} classes")
    return _ClassGraph(layers, children)


def _solve(
    n: int, T: int, D: DiscountSchedule, u: UtilitySpec, restrict_to_nsg: bool
) -> Tuple[_ClassGraph, List[Dict[CanonicalForm, float]], MemoryMemoService]:
    limit = DP_MAX_NODES_NSG if restrict_to_nsg else DP_MAX_NODES
    if n > limit:
        hint = "" if restrict_to_nsg else "; use restrict_to_nsg for up to 9 nodes"
        raise SizeLimitError(f"Exact DP supports at most {limit} nodes, got {n}{hint}")
    _check_capacity(n, T)
    if len(D) != T:
        raise InvalidScheduleError(f"Schedule has {len(D)} periods, horizon is {T}")
    states = _build_layers(n, T, restrict_to_nsg)
    utilities = MemoryMemoService()

    def gain(t: int, key: CanonicalForm) -> float:
        # Reward D(t) u(G) for entering class key at period t (1-based)
        if D[t - 1] == 0.0:
            return 0.0
        return D[t - 1] * utilities.get_or_compute(key, lambda: u(states.layers[t][key]))

    with ThreadPoolExecutor(max_workers=settings_helper.get_thread_count()) as pool:
        for t in range(1, T + 1):
            list(pool.map(lambda key, t=t: gain(t, key), states.layers[t]))
    logger.debug(f"{len(utilities)} class utilities evaluated")

    values: List[Dict[CanonicalForm, float]] = [dict() for _ in range(T + 1)]
    values[T] = {key: 0.0 for key in states.layers[T]}
    for t in range(T - 1, -1, -1):
        layer = states.layers[t]
        for key in layer:
            kids = states.children.get(key, ())
            if not kids:
                raise InvalidHorizonError(f"A period-{t} class has no admissible successor")
            values[t][key] = max(gain(t + 1, c) + values[t + 1][c] for c in kids)
    return states, values, utilities


def _best_children(
    states: _ClassGraph,
    values: List[Dict[CanonicalForm, float]],
    D: DiscountSchedule,
    utilities: MemoryMemoService,
    t: int,
    key: CanonicalForm,
    tol: float,
) -> List[CanonicalForm]:
    def total(child: CanonicalForm) -> float:
        g = 0.0 if D[t] == 0.0 else D[t] * utilities.get(child)
        return g + values[t + 1][child]

    target = values[t][key]
    return [
        c for c in states.children[key]
        if abs(total(c) - target) <= tol * max(1.0, abs(target))
    ]


def _lex_greater(a: Tuple[float, ...], b: Tuple[float, ...]) -> bool:
    for x, y in zip(a, b):
        if not _near(x, y):
            return x > y
    return False


def _preferred_children(
    states: _ClassGraph,
    values: List[Dict[CanonicalForm, float]],
    D: DiscountSchedule,
    utilities: MemoryMemoService,
) -> List[Dict[CanonicalForm, CanonicalForm]]:
    """
    One optimal child per state, breaking value ties lexicographically.

    Optimal children whose totals agree within ARGMAX_TOLERANCE are ranked by
    the per-period utilities along their own preferred continuations, earliest
    period first; periods with D(t) = 0 do not count. Remaining ties go to the
    smallest canonical key. Under a myopic schedule the later periods fall
    below the value tolerance, and this ranking recovers the greedy choice.
    """
    T = len(states.layers) - 1
    choice: List[Dict[CanonicalForm, CanonicalForm]] = [dict() for _ in range(T)]
    profile: Dict[CanonicalForm, Tuple[float, ...]] = {key: () for key in states.layers[T]}
    for t in range(T - 1, -1, -1):
        earlier: Dict[CanonicalForm, Tuple[float, ...]] = {}
        for key in states.layers[t]:
            best, best_profile = None, ()
            for c in _best_children(states, values, D, utilities, t, key, ARGMAX_TOLERANCE):
                head = utilities.get(c) if D[t] != 0.0 else 0.0
                candidate = (head,) + profile[c]
                if best is None or _lex_greater(candidate, best_profile):
                    best, best_profile = c, candidate
            choice[t][key] = best
            earlier[key] = best_profile
        profile = earlier
    return choice


def _labeled_step(G: Graph, child: CanonicalForm) -> Graph:
    for _, H in labeled_successors(G):
        if canonical_form(H) == child:
            return H
    raise InvalidInputError("Class successor has no labeled counterpart")


def optimal_path_dp(
    n: int,
    T: int,
    D: DiscountSchedule,
    u: UtilitySpec,
    restrict_to_nsg: bool = False,
) -> FormationPath:
    """
    Exact maximizer of evaluate_path by dynamic programming over graph classes.

    V(G, t) = max over successor classes G' of D(t+1) u(G') + V(G', t+1).
    Among optimal successors the one with the lexicographically larger
    per-period utilities is taken, then the smallest canonical key.

    Args:
        n: Node count (at most 7, or 9 with restrict_to_nsg)
        T: Horizon
        D: Discount schedule of length T
        u: Instantaneous utility
        restrict_to_nsg: Only visit NSG states

    Raises:
        SizeLimitError: If n or the state space is beyond the exact limits
    """
    states, values, utilities = _solve(n, T, D, u, restrict_to_nsg)
    G = new_empty(n)
    key = canonical_form(G)
    choice = _preferred_children(states, values, D, utilities)
    graphs = []
    for t in range(T):
        key = choice[t][key]
        G = _labeled_step(G, key)
        graphs.append(G)
    value = values[0][canonical_form(new_empty(n))]
    logger.info(f"Optimal value {value!r} (n={n}, T={T}, restrict_to_nsg={restrict_to_nsg})")
    return FormationPath(tuple(graphs))


def optimal_value_dp(
    n: int, T: int, D: DiscountSchedule, u: UtilitySpec, restrict_to_nsg: bool = False
) -> float:
    _, values, _ = _solve(n, T, D, u, restrict_to_nsg)
    return values[0][canonical_form(new_empty(n))]


def optimal_class_paths(
    n: int,
    T: int,
    D: DiscountSchedule,
    u: UtilitySpec,
    restrict_to_nsg: bool = False,
    tol: float = ARGMAX_TOLERANCE,
) -> List[FormationPath]:
    """
    Every optimal path at the class level, each realized as a labeled path.

    Raises:
        SizeLimitError: If more than 10000 optimal class sequences exist
    """
    states, values, utilities = _solve(n, T, D, u, restrict_to_nsg)
    root = new_empty(n)
    paths: List[FormationPath] = []

    def walk(t: int, key: CanonicalForm, G: Graph, prefix: List[Graph]) -> None:
        if t == T:
            if len(paths) >= MAX_OPTIMAL_PATHS:
                raise SizeLimitError(f"More than {MAX_OPTIMAL_PATHS} optimal paths")
            paths.append(FormationPath(tuple(prefix)))
            return
        for child in _best_children(states, values, D, utilities, t, key, tol):
            H = _labeled_step(G, child)
            walk(t + 1, child, H, prefix + [H])

    walk(0, canonical_form(root), root, [])
    logger.info(f"{len(paths)} optimal class paths (n={n}, T={T})")
    return paths


def myopic_optimal_path(
    n: int, T: int, u: UtilitySpec, epsilon: Optional[float] = None
) -> Tuple[FormationPath, float]:
    """
    DP optimum under a myopic schedule, halving epsilon until it matches the greedy path.

    Returns:
        The optimal path and the epsilon that produced it
    """
    epsilon = settings.MYOPIC_EPSILON if epsilon is None else epsilon
    greedy = greedy_path(n, T, u)
    path = None
    for _ in range(settings.MYOPIC_MAX_HALVINGS + 1):
        path = optimal_path_dp(n, T, discount_myopic(epsilon, T), u)
        if all(isomorphic(a, b) for a, b in zip(path, greedy)):
            return path, epsilon
        logger.debug(f"Myopic epsilon {epsilon:g} does not reproduce the greedy path; halving")
        epsilon /= 2.0
    logger.warning(f"Myopic halving exhausted at epsilon {epsilon * 2.0:g}; returning the last optimum")
    return path, epsilon * 2.0


def brute_force_optimum(n: int, T: int, D: DiscountSchedule, u: UtilitySpec) -> float:
    """
    Best value over all labeled paths by exhaustive search.

    Raises:
        SizeLimitError: If n exceeds 5
    """
    if n > BRUTE_FORCE_MAX_NODES:
        raise SizeLimitError(f"Brute force is limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    _check_capacity(n, T)
    if len(D) != T:
        raise InvalidScheduleError(f"Schedule has {len(D)} periods, horizon is {T}")
    utilities: Dict[bytes, float] = {}

    def utility(G: Graph) -> float:
        key = G.w.tobytes()
        if key not in utilities:
            utilities[key] = u(G)
        return utilities[key]

    @lru_cache(maxsize=None)
    def best(t: int, packed: bytes) -> float:
        if t == T:
            return 0.0
        G = Graph(np.frombuffer(packed, dtype=float).reshape(n, n))
        return max(
            (D[t] * utility(H) if D[t] else 0.0) + best(t + 1, H.w.tobytes())
            for _, H in labeled_successors(G)
        )

    return best(0, new_empty(n).w.tobytes())


def delegated_step(G: Graph, agent: int, phi_agent: float) -> Graph:
    """
    Let agent (0-based) link to the non-neighbour maximizing its own KB centrality.

    Ties go to the smallest index.

    Raises:
        NoMoveError: If the agent is already linked to everybody
    """
    targets = [k for k in range(G.n) if k != agent and G.w[agent, k] == 0.0]
    if not targets:
        raise NoMoveError(f"Agent {agent + 1} is already linked to every node")
    best_graph: Optional[Graph] = None
    best_value = 0.0
    for k in targets:
        H = add_link(G, (agent, k))
        value = float(katz_bonacich(H, phi_agent).values[agent])
        if best_graph is None or value > best_value + ARGMAX_TOLERANCE * max(1.0, abs(best_value)):
            best_graph, best_value = H, value
    return best_graph


def delegated_path(n: int, T: int, q: AgentSequence, phi_agent: Optional[float] = None) -> FormationPath:
    """
    Fold delegated_step over the agent sequence q (1-based labels).

    Raises:
        InvalidScheduleError: If |q| differs from T
        NoMoveError: If a delegated agent has no open pair
    """
    phi_agent = settings.DEFAULT_PHI if phi_agent is None else phi_agent
    _check_capacity(n, T)
    if len(q) != T:
        raise InvalidScheduleError(f"Agent sequence has {len(q)} entries, horizon is {T}")
    q.validate(n)
    G = new_empty(n)
    graphs = []
    for t, agent in enumerate(q.q):
        try:
            G = delegated_step(G, agent - 1, phi_agent)
        except NoMoveError as e:
            raise NoMoveError(f"Period {t + 1}: {e}") from e
        graphs.append(G)
    return FormationPath(tuple(graphs))


def delegation_recipe(s: FormationPath, phi_agent: Optional[float] = None) -> AgentSequence:
    """
    Agents whose delegated moves rebuild the planner's path up to isomorphism.

    The endpoint of the planner's edit with the smaller neighborhood is
    tried first; if it does not reproduce the planner's class, agents are
    tried by degree, then index.

    Raises:
        InvalidInputError: If no agent reproduces some period
    """
    phi_agent = settings.DEFAULT_PHI if phi_agent is None else phi_agent
    edits = path_edits(s)
    current = new_empty(s.n)
    q = []
    for t, edit in enumerate(edits):
        target = s[t]
        deg = degrees(current)
        preferred = []
        if current == s.previous(t):
            preferred = sorted((edit.i, edit.j), key=lambda v: (deg[v], v))
        others = sorted(range(s.n), key=lambda v: (deg[v], v))
        for agent in preferred + [v for v in others if v not in preferred]:
            if all(current.w[agent, k] == 1.0 for k in range(s.n) if k != agent):
                continue
            H = delegated_step(current, agent, phi_agent)
            if H == target or isomorphic(H, target):
                q.append(agent + 1)
                current = H
                break
        else:
            raise InvalidInputError(f"No delegated agent reproduces period {t + 1}")
    return AgentSequence(tuple(q))
