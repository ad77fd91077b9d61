"""
Request models for experiment runs.
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RunMode(str, Enum):
    """Experiment mode enumeration."""
    GREEDY = "greedy"
    OPTIMAL = "optimal"
    MYOPIC = "myopic"
    DELEGATE = "delegate"
    WEIGHTED_STEP = "weighted-step"


class UtilityName(str, Enum):
    """Utility family enumeration."""
    KB = "kb"
    KB2 = "kb2"
    DIFFUSION = "diffusion"
    SPECTRAL = "spectral"
    WALKS = "walks"
    WELFARE = "welfare"


def _split_numbers(v):
    if isinstance(v, str):
        parts = [p for p in v.replace(";", ",").split(",") if p.strip()]
        return [p.strip() for p in parts]
    return v


class ExperimentSection(BaseModel):
    """
    The [experiment] section.

    Attributes:
        nodes: Node count
        horizon: Number of periods T
        mode: greedy, optimal, myopic, delegate or weighted-step
        restrict_nsg: Restrict the DP to NSG states
        agents: Delegated agents (1-based), one per period
        agent_phi: Decay used by delegated agents
        resolution: Grid resolution of the weighted step
        seed: Seed for randomized steps
    """
    model_config = ConfigDict(extra="forbid")

    nodes: int = Field(..., ge=1, le=64, description="Node count")
    horizon: int = Field(..., ge=1, description="Number of periods")
    mode: RunMode = Field(default=RunMode.GREEDY, description="Design procedure")
    restrict_nsg: bool = Field(default=False, description="Restrict the DP to NSG states")
    agents: Optional[List[int]] = Field(default=None, description="Delegated agents, 1-based")
    agent_phi: Optional[float] = Field(default=None, ge=0.0, description="Decay of delegated agents")
    resolution: int = Field(default=4, ge=1, description="Weighted grid resolution")
    seed: Optional[int] = Field(default=None, description="Random seed")

    @field_validator("agents", mode="before")
    @classmethod
    def split_agents(cls, v):
        return _split_numbers(v)

    @model_validator(mode="after")
    def check_capacity(self):
        if self.horizon > self.nodes * (self.nodes - 1) // 2:
            raise ValueError(f"horizon {self.horizon} exceeds the node pairs of {self.nodes} nodes")
        if self.agents is not None and len(self.agents) != self.horizon:
            raise ValueError(f"{len(self.agents)} agents given for {self.horizon} periods")
        return self


class UtilitySection(BaseModel):
    """The [utility] section."""
    model_config = ConfigDict(extra="forbid")

    kind: UtilityName = Field(default=UtilityName.KB2, description="Utility family")
    phi: float = Field(default=0.01, ge=0.0, description="Decay")
    length: int = Field(default=5, ge=0, description="Diffusion truncation L")
    coeffs: List[float] = Field(default_factory=lambda: [1.0, 1.0, 1.0, 1.0], description="Walk weights")
    theta: Optional[List[float]] = Field(default=None, description="Node weights")
    transform: str = Field(default="identity", description="Welfare transform")

    @field_validator("coeffs", "theta", mode="before")
    @classmethod
    def split_lists(cls, v):
        return _split_numbers(v)


class DiscountSection(BaseModel):
    """The [discount] section: farsighted, geometric:d, myopic:e or file:PATH."""
    model_config = ConfigDict(extra="forbid")

    schedule: str = Field(default="farsighted", description="Discount schedule")

    @field_validator("schedule")
    @classmethod
    def validate_schedule(cls, v):
        kind = v.split(":", 1)[0].strip().lower()
        if kind not in ("farsighted", "geometric", "myopic", "file"):
            raise ValueError(f"unknown schedule '{v}'")
        return v.strip()


class GameSection(BaseModel):
    """The [game] section: best response such as linear:a,b or quad:a,b,c."""
    model_config = ConfigDict(extra="forbid")

    psi: Optional[str] = Field(default=None, description="Best response")


class OutputSection(BaseModel):
    """The [output] section."""
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = Field(default=None, description="Output directory")
    formats: List[str] = Field(default_factory=lambda: ["dot", "csv", "json"], description="Emitted formats")

    @field_validator("formats", mode="before")
    @classmethod
    def split_formats(cls, v):
        return _split_numbers(v)

    @field_validator("formats")
    @classmethod
    def validate_formats(cls, v):
        unknown = sorted(set(v) - {"dot", "csv", "json"})
        if unknown:
            raise ValueError(f"unknown output formats {unknown}")
        return v


class ExperimentConfig(BaseModel):
    """
    A complete experiment description.

    Attributes:
        experiment: Size, horizon and procedure
        utility: Planner utility
        discount: Discount schedule
        game: Best response for the welfare utility
        output: Output directory and formats
    """
    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentSection
    utility: UtilitySection = Field(default_factory=UtilitySection)
    discount: DiscountSection = Field(default_factory=DiscountSection)
    game: GameSection = Field(default_factory=GameSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def check_welfare(self):
        if self.utility.kind is UtilityName.WELFARE and not self.game.psi:
            raise ValueError("the welfare utility needs [game] psi")
        if self.experiment.mode is RunMode.DELEGATE and self.experiment.agents is None:
            raise ValueError("delegate mode needs [experiment] agents")
        return self
