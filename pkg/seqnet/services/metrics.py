"""
Walk counts, centrality measures and the walk-dominance comparator.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from seqnet.core.config import settings
from seqnet.core.errors import (
    ConvergenceError,
    DivergenceError,
    InvalidComparisonError,
    InvalidParameterError,
    InvalidWeightsError,
)
from seqnet.services.graph_core import Graph, degrees

logger = logging.getLogger(__name__)

KB_RESIDUAL_TOLERANCE = 1e-10
POWER_TOLERANCE = 1e-10
# phi lambda_max within this of 1 counts as divergent; eigvalsh can round lambda_max down
DECAY_MARGIN = 1e-12
POWER_MAX_ITER = 1_000_000


class Dominance(str, Enum):
    STRICTLY_DOMINATES = "StrictlyDominates"
    DOMINATED_STRICTLY = "DominatedStrictly"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"

    def flipped(self) -> "Dominance":
        if self is Dominance.STRICTLY_DOMINATES:
            return Dominance.DOMINATED_STRICTLY
        if self is Dominance.DOMINATED_STRICTLY:
            return Dominance.STRICTLY_DOMINATES
        return self


@dataclass(frozen=True)
class DominanceVerdict:
    """Outcome of a walk-profile comparison truncated at depth k_checked."""
    verdict: Dominance
    k_checked: int

    def flipped(self) -> "DominanceVerdict":
        return DominanceVerdict(self.verdict.flipped(), self.k_checked)

    @property
    def dominates(self) -> bool:
        return self.verdict is Dominance.STRICTLY_DOMINATES


@dataclass(frozen=True)
class WalkProfile:
    """Walk counts 1'G^k 1 (or 1'G^k theta) for k = 0..k_max."""
    counts: tuple

    @property
    def k_max(self) -> int:
        return len(self.counts) - 1

    def __getitem__(self, k: int) -> float:
        return self.counts[k]

    def to_csv(self) -> str:
        rows = ["k,count"]
        rows.extend(f"{k},{_format_count(c)}" for k, c in enumerate(self.counts))
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class CentralityVector:
    """
    Per-node centrality values.

    Attributes:
        values: centrality of each node
        decay: the decay factor phi
        kind: "kb" or "diffusion"
        length: truncation length L for diffusion centrality
    """
    values: np.ndarray
    decay: float
    kind: str = "kb"
    length: Optional[int] = None

    @property
    def aggregate(self) -> float:
        return float(self.values.sum())

    @property
    def aggregate_of_squares(self) -> float:
        return float(np.dot(self.values, self.values))

    def to_csv(self) -> str:
        rows = ["node,value"]
        rows.extend(f"{i + 1},{v!r}" for i, v in enumerate(self.values.tolist()))
        return "\n".join(rows) + "\n"


def _format_count(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def node_weights(theta: Optional[Sequence[float]], n: int) -> np.ndarray:
    """
    Validate a node-weight vector, defaulting to all ones.

    Raises:
        InvalidWeightsError: On a length mismatch or a negative entry
    """
    if theta is None:
        return np.ones(n)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n,):
        raise InvalidWeightsError(f"Node weights need length {n}, got shape {theta.shape}")
    if np.any(theta < 0.0) or not np.all(np.isfinite(theta)):
        raise InvalidWeightsError("Node weights must be finite and non-negative")
    return theta


def walk_count(G: Graph, k: int) -> float:
    """
    Total number of walks of length k, 1'G^k 1.

    Computed by k matrix-vector products.
    """
    return walk_count_weighted(G, k, None)


def walk_count_weighted(G: Graph, k: int, theta: Optional[Sequence[float]]) -> float:
    """
    Theta-weighted walk count 1'G^k theta.

    Args:
        G: Graph
        k: Walk length (non-negative)
        theta: Node weights of length n

    Raises:
        InvalidWeightsError: If theta does not match the node count
    """
    if k < 0:
        raise InvalidParameterError(f"Walk length must be non-negative, got {k}")
    v = node_weights(theta, G.n)
    for _ in range(k):
        v = G.w @ v
    return float(v.sum())


def walk_profile(G: Graph, k_max: int, theta: Optional[Sequence[float]] = None) -> WalkProfile:
    """Walk counts for every length up to k_max."""
    if k_max < 0:
        raise InvalidParameterError(f"k_max must be non-negative, got {k_max}")
    v = node_weights(theta, G.n)
    counts = [float(v.sum())]
    for _ in range(k_max):
        v = G.w @ v
        counts.append(float(v.sum()))
    return WalkProfile(tuple(counts))


def compare_profiles(a: WalkProfile, b: WalkProfile, k_from: int = 0) -> DominanceVerdict:
    """
    Compare two walk profiles entry by entry from k_from on.

    Entries within a relative tolerance of WALK_TOLERANCE count as equal.
    """
    k_max = min(a.k_max, b.k_max)
    tol = settings.WALK_TOLERANCE
    greater = smaller = False
    for k in range(k_from, k_max + 1):
        x, y = a[k], b[k]
        gap = tol * max(1.0, abs(x), abs(y))
        if x > y + gap:
            greater = True
        elif y > x + gap:
            smaller = True
    if greater and smaller:
        verdict = Dominance.INCOMPARABLE
    elif greater:
        verdict = Dominance.STRICTLY_DOMINATES
    elif smaller:
        verdict = Dominance.DOMINATED_STRICTLY
    else:
        verdict = Dominance.EQUAL
    return DominanceVerdict(verdict, k_max)


def walk_dominates(G: Graph, H: Graph, k_max: Optional[int] = None) -> DominanceVerdict:
    """
    Compare total walk counts of G and H for k = 0..k_max (default 2n).

    Raises:
        InvalidComparisonError: If the graphs differ in size
    """
    if G.n != H.n:
        raise InvalidComparisonError(f"Cannot compare graphs on {G.n} and {H.n} nodes")
    k_max = 2 * G.n if k_max is None else k_max
    return compare_profiles(walk_profile(G, k_max), walk_profile(H, k_max))


def lambda_max(G: Graph) -> float:
    """Largest adjacency eigenvalue from a dense symmetric eigensolve."""
    if not np.any(G.w):
        return 0.0
    return float(np.linalg.eigvalsh(G.w)[-1])


def _check_decay(G: Graph, phi: float) -> None:
    if phi < 0.0:
        raise InvalidParameterError(f"Decay must be non-negative, got {phi}")
    lam = lambda_max(G)
    if phi * lam >= 1.0 - DECAY_MARGIN:
        raise DivergenceError(
            f"Decay {phi} is not below 1/lambda_max = {1.0 / lam:.6g}; the walk series diverges"
        )


def _kb_solve(G: Graph, phi: float, rhs: np.ndarray) -> np.ndarray:
    _check_decay(G, phi)
    system = np.eye(G.n) - phi * G.w
    lu, piv = linalg.lu_factor(system)
    solution = linalg.lu_solve((lu, piv), rhs)
    residual = float(np.linalg.norm(system @ solution - rhs))
    bound = KB_RESIDUAL_TOLERANCE * max(1.0, float(np.linalg.norm(rhs)))
    # A nan residual fails the comparison too
    if not np.all(np.isfinite(solution)) or not residual <= bound:
        raise DivergenceError(f"Katz-Bonacich solve is ill-conditioned (residual {residual:.3g})")
    return solution


def katz_bonacich(G: Graph, phi: float) -> CentralityVector:
    """
    Katz-Bonacich centrality b = (I - phi G)^-1 1.

    Args:
        G: Graph
        phi: Decay factor, 0 <= phi < 1/lambda_max(G)

    Returns:
        Centrality vector with all values >= 1

    Raises:
        InvalidParameterError: If phi is negative
        DivergenceError: If phi is not below 1/lambda_max(G)
    """
    values = _kb_solve(G, phi, np.ones(G.n))
    return CentralityVector(values=values, decay=phi, kind="kb")


def aggregate_kb(G: Graph, phi: float, theta: Optional[Sequence[float]] = None) -> float:
    """Aggregate centrality 1'(I - phi G)^-1 theta (theta defaults to ones)."""
    return float(_kb_solve(G, phi, node_weights(theta, G.n)).sum())


def aggregate_kb_squared(G: Graph, phi: float) -> float:
    """Sum of squared Katz-Bonacich centralities."""
    return katz_bonacich(G, phi).aggregate_of_squares


def rooted_kb(G: Graph, phi: float, root: int) -> float:
    """Decayed count of walks starting at one node, b_root."""
    return float(katz_bonacich(G, phi).values[root])


def diffusion_centrality(
    G: Graph, phi: float, L: int, theta: Optional[Sequence[float]] = None
) -> CentralityVector:
    """
    Diffusion centrality d = sum_{k<=L} phi^k G^k theta (theta defaults to ones).

    Raises:
        InvalidParameterError: If phi is outside [0, 1] or L is negative
    """
    if not 0.0 <= phi <= 1.0:
        raise InvalidParameterError(f"Diffusion decay must be in [0, 1], got {phi}")
    if L < 0:
        raise InvalidParameterError(f"Diffusion length must be non-negative, got {L}")
    term = node_weights(theta, G.n).copy()
    total = term.copy()
    for _ in range(L):
        term = phi * (G.w @ term)
        total += term
    return CentralityVector(values=total, decay=phi, kind="diffusion", length=L)


def spectral_radius(G: Graph) -> float:
    """
    Largest adjacency eigenvalue by power iteration on G + cI.

    The shift c is the maximum degree, which makes the Perron root strictly
    dominant in modulus even for bipartite graphs.

    Raises:
        ConvergenceError: If the iteration cap is reached
    """
    if not np.any(G.w):
        return 0.0
    shift = float(degrees(G).max())
    shifted = G.w + shift * np.eye(G.n)
    x = np.ones(G.n) / np.sqrt(G.n)
    for iteration in range(POWER_MAX_ITER):
        y = shifted @ x
        rayleigh = float(x @ y)
        residual = float(np.linalg.norm(y - rayleigh * x))
        if residual < POWER_TOLERANCE:
            logger.debug(f"Power iteration converged after {iteration + 1} steps")
            return rayleigh - shift
        x = y / np.linalg.norm(y)
    raise ConvergenceError(f"Power iteration did not converge in {POWER_MAX_ITER} steps")


def kb_series(G: Graph, phi: float, squared: bool = False, cutoff: float = 1e-14) -> float:
    """
    Aggregate KB (or KB-squared) from the walk series, truncated once a term drops below cutoff.

    Kept as an oracle for the direct solve.
    """
    _check_decay(G, phi)
    v = np.ones(G.n)
    total = 0.0
    k = 0
    while True:
        term = phi ** k * float(v.sum()) * ((k + 1) if squared else 1)
        total += term
        if k > 0 and term < cutoff:
            return total
        v = G.w @ v
        k += 1
