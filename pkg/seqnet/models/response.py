"""
Report models written by experiment runs.
"""
from typing import List, Optional

from pydantic import BaseModel, Field


class PeriodReport(BaseModel):
    """
    One period of a formation path.

    Attributes:
        t: Period, 1-based
        links: Total link weight
        utility: u(G(t))
        is_nsg: Whether G(t) is a (weighted) nested split graph
        is_qc: Whether G(t) is quasi-complete
        structure: QC, QS, NSG or other
    """
    t: int = Field(..., ge=1, description="Period")
    links: float = Field(..., ge=0, description="Total link weight")
    utility: float = Field(..., description="Instantaneous utility")
    is_nsg: bool = Field(..., description="Nested split graph flag")
    is_qc: bool = Field(..., description="Quasi-complete flag")
    structure: str = Field(..., description="Structural label")


class RunSummary(BaseModel):
    """
    Summary of an experiment run.

    Attributes:
        mode: Design procedure
        nodes: Node count
        horizon: Number of periods
        utility: Utility family
        discount: Discount schedule text
        value: Discounted path value
        final_class: Structural label of G(T)
        periods: Per-period reports
        epsilon: Myopic epsilon actually used
        agents: Delegated agents, 1-based
        files: Files written, relative to the output directory
    """
    mode: str = Field(..., description="Design procedure")
    nodes: int = Field(..., description="Node count")
    horizon: int = Field(..., description="Number of periods")
    utility: str = Field(..., description="Utility family")
    discount: str = Field(..., description="Discount schedule")
    value: float = Field(..., description="Discounted path value")
    final_class: str = Field(..., description="Structural label of the last graph")
    periods: List[PeriodReport] = Field(default_factory=list, description="Per-period reports")
    epsilon: Optional[float] = Field(None, description="Myopic epsilon used")
    agents: Optional[List[int]] = Field(None, description="Delegated agents")
    files: List[str] = Field(default_factory=list, description="Files written")


class NsgTableRow(BaseModel):
    """
    One NSG class of the n=7, t=8 comparison.

    Attributes:
        label: QC, QS, G_hat or G_bar
        creation: Creation sequence of the class
        degrees: Degree sequence, descending
        computed: Aggregate KB-squared at phi
        published: Reference value to four decimals
        deviation: |computed - published|
        ok: Whether the deviation is within tolerance
    """
    label: str = Field(..., description="Class label")
    creation: str = Field(..., description="Creation sequence")
    degrees: List[int] = Field(..., description="Degree sequence")
    computed: float = Field(..., description="Computed aggregate KB-squared")
    published: float = Field(..., description="Reference value")
    deviation: float = Field(..., ge=0, description="Absolute deviation")
    ok: bool = Field(..., description="Within tolerance")


class NsgTableReport(BaseModel):
    """
    NSG comparison reproduction.

    Attributes:
        phi: Decay
        tolerance: Gate on every row
        rows: One row per class
        maximizer: Label of the class with the largest value
        passed: Whether every row and the maximizer agree with the reference
    """
    phi: float = Field(..., description="Decay")
    tolerance: float = Field(..., description="Tolerance")
    rows: List[NsgTableRow] = Field(..., description="Rows")
    maximizer: str = Field(..., description="Maximizing class")
    passed: bool = Field(..., description="Reproduction verdict")


class EquilibriumReport(BaseModel):
    """Convergence metadata of an equilibrium solve."""
    converged: bool = Field(..., description="Convergence flag")
    residual: float = Field(..., description="Last sup-norm step")
    iterations: int = Field(..., description="Iterations taken")
    lambda_max: float = Field(..., description="Largest adjacency eigenvalue")
    welfare: float = Field(..., description="Planner welfare under the chosen transform")
    transform: str = Field(..., description="Welfare transform")
