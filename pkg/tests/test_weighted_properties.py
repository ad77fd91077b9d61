"""
The interpolation family between NSG successors, convexity of KB in the weights,
weight reallocation and the extreme-point perturbation.
"""

import numpy as np
import pytest

from seqnet.services.graph_core import WEIGHT_TOLERANCE, Graph, capacity
from seqnet.services.metrics import (
    aggregate_kb,
    aggregate_kb_squared,
    katz_bonacich,
    lambda_max,
    walk_count_weighted,
    walk_profile,
)
from seqnet.services.planner import UtilitySpec, discount_geometric, evaluate_path
from seqnet.services.reallocation import reallocate_weight
from seqnet.services.structures import enumerate_nsg, is_quasi_complete, quasi_complete, weighted_nested
from seqnet.services.weighted_planner import (
    AlphaFamily,
    best_weighted_step_kb2,
    perturb_weighted_path,
    random_weighted_path,
)

ALPHAS = [round(0.1 * a, 1) for a in range(10)]


def family_bases():
    for t in range(2, 21):
        base = quasi_complete(22, t)
        if is_quasi_complete(base).overflow > 0:
            yield t, base


def random_weighted(rng):
    n = int(rng.integers(2, 7))
    upper = np.triu(rng.random((n, n)) * (rng.random((n, n)) < 0.7), 1)
    return upper + upper.T


class TestQuasiCompleteStepDominates:
    """Walks of the quasi-complete successor exceed every other member of the family"""

    @pytest.mark.parametrize("t, base", list(family_bases()))
    def test_family_member_walks(self, t, base):
        """k = 2..15 on 22 nodes"""
        family = AlphaFamily.of(base)
        top = walk_profile(family.member(1.0), 15)
        overflow = family.decomposition.overflow
        for alpha in ALPHAS:
            member = walk_profile(family.member(alpha), 15)
            for k in range(2, 16):
                if k == 2 and alpha == 0.0 and overflow == 1:
                    # Both unweighted successors have the same degree sum of squares here
                    assert top[k] == pytest.approx(member[k], rel=1e-12)
                else:
                    assert top[k] > member[k], f"t={t}, alpha={alpha}, k={k}"

    def test_bases_cover_both_overflows(self):
        """Bases with a single spoke link and with longer spokes are both exercised"""
        overflows = {is_quasi_complete(base).overflow for _, base in family_bases()}
        assert 1 in overflows
        assert max(overflows) >= 4

    def test_weighted_walks_node_weights(self):
        """Node-weighted walks of family members stay ordered at k = 3"""
        family = AlphaFamily.of(quasi_complete(22, 8))
        theta = np.ones(22)
        assert walk_count_weighted(family.member(1.0), 3, theta) > walk_count_weighted(family.member(0.5), 3, theta)


class TestKatzBonacichConvexity:
    """Aggregate KB is convex in the adjacency weights"""

    def check_pairs(self, count, seed):
        rng = np.random.default_rng(seed)
        violations = 0
        checked = 0
        while checked < count:
            A = random_weighted(rng)
            B = random_weighted(rng)
            if A.shape != B.shape:
                continue
            lam = max(lambda_max(Graph(A)), lambda_max(Graph(B)), 1e-9)
            phi = float(rng.uniform(0.05, 0.95)) / lam
            left = aggregate_kb(Graph((A + B) / 2.0), phi)
            right = (aggregate_kb(Graph(A), phi) + aggregate_kb(Graph(B), phi)) / 2.0
            if left > right + 1e-12 * max(1.0, right):
                violations += 1
            checked += 1
        return violations

    @pytest.mark.slow
    def test_ten_thousand_pairs(self):
        """Midpoint inequality on 10,000 random weighted pairs"""
        assert self.check_pairs(10_000, seed=3) == 0

    def test_sample_pairs(self):
        """Midpoint inequality on a quick sample"""
        assert self.check_pairs(300, seed=11) == 0


def interior_degrees(G):
    """Number of links with weight strictly between 0 and 1 at each node."""
    interior = (G.w > WEIGHT_TOLERANCE) & (G.w < 1.0 - WEIGHT_TOLERANCE)
    return interior.sum(axis=1)


class TestWeightReallocation:
    """Switching weight as far as possible from j to i raises aggregate KB-squared"""

    def test_random_non_nested_pairs(self):
        """Both orderings of b_i and b_j on random weighted graphs"""
        rng = np.random.default_rng(17)
        cases = {"higher": 0, "lower": 0}
        for _ in range(150):
            A = random_weighted(rng)
            n = A.shape[0]
            if n < 3:
                continue
            G = Graph(A)
            phi = 0.9 / (n - 1)
            b = katz_bonacich(G, phi).values
            before = aggregate_kb_squared(G, phi)
            for i in range(n):
                for j in range(n):
                    if i == j or weighted_nested(G, i, j) or abs(b[i] - b[j]) <= 1e-6:
                        continue
                    H = reallocate_weight(G, i, j)
                    assert H.w.sum() == pytest.approx(G.w.sum(), rel=1e-12)
                    assert aggregate_kb_squared(H, phi) > before, f"pair ({i}, {j}) on n={n}"
                    cases["higher" if b[i] > b[j] else "lower"] += 1
        assert cases["higher"] > 0
        assert cases["lower"] > 0


class TestWeightedStepInteriorLinks:
    """No node of an optimal weighted step carries two interior-weight links"""

    @pytest.mark.parametrize("t", range(1, 15))
    def test_quasi_complete_bases(self, t):
        """Six nodes, every quasi-complete base short of saturation"""
        H = best_weighted_step_kb2(quasi_complete(6, t), 0.05, 4)
        assert interior_degrees(H).max() <= 1

    @pytest.mark.parametrize("n", [4, 5])
    def test_nested_split_bases(self, n):
        """Every NSG class below capacity"""
        for t in range(capacity(n)):
            for base in enumerate_nsg(n, t):
                H = best_weighted_step_kb2(base, 0.05, 4)
                assert interior_degrees(H).max() <= 1, f"n={n}, t={t}"


class TestPerturbationConvexity:
    """A strictly weighted path is no better than the average of its perturbation pair"""

    def test_random_weighted_paths(self):
        """KB aggregate with a geometric schedule"""
        rng = np.random.default_rng(23)
        T = 4
        D = discount_geometric(0.8, T)
        u = UtilitySpec.kb_aggregate(0.1)
        checked = 0
        for _ in range(200):
            s_w = random_weighted_path(5, T, rng)
            pair = perturb_weighted_path(s_w)
            if pair is None:
                continue
            plus, minus = pair
            if not all(np.allclose((up.w + down.w) / 2.0, G.w, rtol=0.0, atol=1e-12)
                       for G, up, down in zip(s_w, plus, minus)):
                continue
            average = (evaluate_path(plus, D, u) + evaluate_path(minus, D, u)) / 2.0
            assert evaluate_path(s_w, D, u) <= average + 1e-12 * average
            checked += 1
        assert checked > 0
