"""
Network games with convex, increasing best responses.

Each agent plays a*_i = psi(sum_j g_ij a*_j). Equilibria are computed by
monotone fixed-point iteration from zero, and the planner's welfare is a
convex transform of equilibrium actions summed over agents.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from seqnet.core.errors import (
    ConvergenceError,
    DivergenceError,
    InvalidParameterError,
)
from seqnet.services.graph_core import Graph
from seqnet.services.metrics import DECAY_MARGIN, lambda_max

logger = logging.getLogger(__name__)

DEFAULT_TRACE_DEPTH = 64
BLOWUP_BOUND = 1e12
VALIDATION_POINTS = 257
SHAPE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ResponseFunction:
    """
    Best-response map psi.

    Attributes:
        kind: linear, quadratic, power, exponential or tabulated
        params: coefficients of the closed-form kinds
        xs, ys: breakpoints of a tabulated (piecewise linear) response
    """
    kind: str
    params: Tuple[float, ...] = ()
    xs: Tuple[float, ...] = ()
    ys: Tuple[float, ...] = ()

    @classmethod
    def linear(cls, a: float, b: float) -> "ResponseFunction":
        """psi(x) = a + b x."""
        return cls("linear", (float(a), float(b)))._validated()

    @classmethod
    def quadratic(cls, a: float, b: float, c: float) -> "ResponseFunction":
        """psi(x) = a + b x + c x^2."""
        return cls("quadratic", (float(a), float(b), float(c)))._validated()

    @classmethod
    def power(cls, a: float, b: float, gamma: float) -> "ResponseFunction":
        """psi(x) = a + b x^gamma with gamma >= 1."""
        if gamma < 1.0:
            raise InvalidParameterError(f"Power response needs gamma >= 1, got {gamma}")
        return cls("power", (float(a), float(b), float(gamma)))._validated()

    @classmethod
    def exponential(cls, a: float, b: float) -> "ResponseFunction":
        """psi(x) = a exp(b x)."""
        return cls("exponential", (float(a), float(b)))._validated()

    @classmethod
    def tabulated(cls, xs: Sequence[float], ys: Sequence[float]) -> "ResponseFunction":
        """Piecewise linear response through (xs, ys), extended with the last slope."""
        xs = tuple(float(x) for x in xs)
        ys = tuple(float(y) for y in ys)
        if len(xs) < 2 or len(xs) != len(ys):
            raise InvalidParameterError("A tabulated response needs at least two (x, y) points")
        if xs[0] != 0.0 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise InvalidParameterError("Tabulated abscissae must start at 0 and increase strictly")
        return cls("tabulated", xs=xs, ys=ys)._validated(upper=xs[-1])

    def _validated(self, upper: float = 10.0) -> "ResponseFunction":
        if self.kind != "tabulated" and any(p < 0.0 for p in self.params):
            raise InvalidParameterError(f"{self.kind} response parameters must be non-negative")
        self.validate(upper)
        return self

    def __call__(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            a, b = self.params
            return a + b * x
        if self.kind == "quadratic":
            a, b, c = self.params
            return a + b * x + c * x * x
        if self.kind == "power":
            a, b, gamma = self.params
            return a + b * np.power(np.maximum(x, 0.0), gamma)
        if self.kind == "exponential":
            a, b = self.params
            return a * np.exp(b * x)
        if self.kind == "tabulated":
            xs, ys = np.array(self.xs), np.array(self.ys)
            slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
            inside = np.interp(x, xs, ys)
            return np.where(x > xs[-1], ys[-1] + slope * (x - xs[-1]), inside)
        raise InvalidParameterError(f"Unknown response kind '{self.kind}'")

    def derivative(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return np.full_like(x, self.params[1])
        if self.kind == "quadratic":
            _, b, c = self.params
            return b + 2.0 * c * x
        if self.kind == "power":
            _, b, gamma = self.params
            return b * gamma * np.power(np.maximum(x, 0.0), gamma - 1.0)
        if self.kind == "exponential":
            a, b = self.params
            return a * b * np.exp(b * x)
        xs, ys = np.array(self.xs), np.array(self.ys)
        slopes = np.diff(ys) / np.diff(xs)
        index = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
        return slopes[index]

    def validate(self, upper: float) -> None:
        """
        Check on a grid over [0, upper] that psi is non-negative, increasing and convex.

        Raises:
            InvalidParameterError: On any violation
        """
        grid = np.linspace(0.0, max(upper, 1e-9), VALIDATION_POINTS)
        values = self(grid)
        if values[0] < 0.0:
            raise InvalidParameterError("Best response must be non-negative at zero")
        steps = np.diff(values)
        scale = max(1.0, float(np.abs(values).max()))
        if np.any(steps < -SHAPE_TOLERANCE * scale):
            raise InvalidParameterError("Best response must be increasing")
        if np.any(np.diff(steps) < -SHAPE_TOLERANCE * scale):
            raise InvalidParameterError("Best response must be convex")


@dataclass(frozen=True)
class EquilibriumTrace:
    """
    Iterates of x^(m+1) = psi(G x^(m)) from x^(0) = 0.

    Attributes:
        iterates: retained iterates, capped at the trace depth
        converged: whether the sup-norm step fell below the tolerance
        residual: sup-norm of the last step
        iterations: number of steps taken
    """
    iterates: Tuple[np.ndarray, ...]
    converged: bool
    residual: float
    iterations: int
    actions: np.ndarray

    def to_csv(self) -> str:
        rows = ["node,action"]
        rows.extend(f"{i + 1},{a!r}" for i, a in enumerate(self.actions.tolist()))
        return "\n".join(rows) + "\n"


def solve_equilibrium(
    G: Graph,
    psi: ResponseFunction,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    trace_depth: int = DEFAULT_TRACE_DEPTH,
) -> EquilibriumTrace:
    """
    Compute the unique equilibrium by monotone iteration from zero.

    Args:
        G: Graph
        psi: Convex increasing best response
        tol: Sup-norm step tolerance (relative once actions exceed 1)
        max_iter: Iteration cap
        trace_depth: Number of leading iterates to retain

    Raises:
        DivergenceError: If psi' reaches 1/lambda_max on the iterate range
        ConvergenceError: If max_iter is exceeded
    """
    lam = lambda_max(G)
    if lam > 0.0 and float(psi.derivative(0.0)) * lam >= 1.0 - DECAY_MARGIN:
        raise DivergenceError(
            f"psi'(0) = {float(psi.derivative(0.0)):.6g} is not below 1/lambda_max = {1.0 / lam:.6g}"
        )
    x = np.zeros(G.n)
    iterates = [x]
    step = np.inf
    for m in range(1, max_iter + 1):
        x_next = psi(G.w @ x)
        if not np.all(np.isfinite(x_next)) or np.max(x_next) > BLOWUP_BOUND:
            raise DivergenceError(f"Best-response iteration escapes to infinity after {m} steps")
        step = float(np.max(np.abs(x_next - x)))
        x = x_next
        if len(iterates) < trace_depth:
            iterates.append(x)
        if step < tol * max(1.0, float(np.max(np.abs(x)))):
            break
    else:
        raise ConvergenceError(f"Equilibrium iteration did not converge in {max_iter} steps")

    aggregate = G.w @ x
    upper = float(aggregate.max()) if G.n else 0.0
    psi.validate(upper)
    if lam > 0.0 and float(psi.derivative(upper)) * lam >= 1.0:
        raise DivergenceError(
            f"psi' at the equilibrium aggregate is not below 1/lambda_max = {1.0 / lam:.6g}"
        )
    logger.debug(f"Equilibrium reached in {m} steps (step {step:.3g})")
    return EquilibriumTrace(tuple(iterates), True, step, m, x)


def iterate_vectors(G: Graph, psi: ResponseFunction, m_max: int) -> List[np.ndarray]:
    """x^(0), ..., x^(m_max) without any convergence requirement."""
    x = np.zeros(G.n)
    vectors = [x]
    for _ in range(m_max):
        x = psi(G.w @ x)
        vectors.append(x)
    return vectors


def iterate_sums(G: Graph, psi: ResponseFunction, m: int) -> float:
    """Total action sum_k x_k^(m) after m best-response steps from zero."""
    if m < 0:
        raise InvalidParameterError(f"Iteration count must be non-negative, got {m}")
    return float(iterate_vectors(G, psi, m)[-1].sum())


TRANSFORMS = {
    "identity": lambda a: a,
    "square": lambda a: a * a,
    "exp_minus_one": lambda a: np.expm1(a),
}


def planner_welfare(a: Sequence[float], transform: Union[str, Callable] = "identity") -> float:
    """
    Sum of a convex increasing transform of equilibrium actions.

    Args:
        a: Action vector
        transform: Catalog name (identity, square, exp_minus_one) or a callable

    Raises:
        InvalidParameterError: For an unknown transform name
    """
    if isinstance(transform, str):
        if transform not in TRANSFORMS:
            raise InvalidParameterError(
                f"Unknown transform '{transform}', expected one of {sorted(TRANSFORMS)}"
            )
        transform = TRANSFORMS[transform]
    return float(np.sum(transform(np.asarray(a, dtype=float))))


@dataclass(frozen=True)
class StatementViolation:
    """One failed inductive statement at iteration m."""
    statement: int
    m: int
    detail: str


def inductive_statements(
    G_hat: Graph,
    G_bar: Graph,
    i: int,
    j: int,
    psi: ResponseFunction,
    m_max: int = 12,
    strict_from: int = 2,
) -> List[StatementViolation]:
    """
    Check the inductive statements comparing iterates on G_hat (x) and G_bar (y).

    G_hat attaches a node set to i and G_bar attaches it to j. Statements:
    1. x_k >= y_k for every k outside {i, j}
    2. x_i >= y_j
    3. x_i + x_j >= y_i + y_j
    4. x and y are nondecreasing in m
    5. sum x > sum y for m >= strict_from

    With a linear psi both sums agree at m = 2, so strict_from = 3 applies.

    Returns:
        The violations found; empty when all statements hold
    """
    xs = iterate_vectors(G_hat, psi, m_max)
    ys = iterate_vectors(G_bar, psi, m_max)
    violations = []

    def below(a: float, b: float) -> bool:
        return a < b - SHAPE_TOLERANCE * max(1.0, abs(a), abs(b))

    for m, (x, y) in enumerate(zip(xs, ys)):
        for k in range(G_hat.n):
            if k not in (i, j) and below(x[k], y[k]):
                violations.append(StatementViolation(1, m, f"x_{k + 1} < y_{k + 1}"))
        if below(x[i], y[j]):
            violations.append(StatementViolation(2, m, f"x_{i + 1} < y_{j + 1}"))
        if below(x[i] + x[j], y[i] + y[j]):
            violations.append(StatementViolation(3, m, "x_i + x_j < y_i + y_j"))
        if m > 0:
            if np.any(x < xs[m - 1] - SHAPE_TOLERANCE) or np.any(y < ys[m - 1] - SHAPE_TOLERANCE):
                violations.append(StatementViolation(4, m, "iterates decreased"))
        if m >= strict_from and not below(y.sum(), x.sum()):
            violations.append(StatementViolation(5, m, f"sum x = {x.sum()!r} <= sum y = {y.sum()!r}"))
    return violations
