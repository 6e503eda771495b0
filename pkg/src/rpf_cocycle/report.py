"""JSON report models written by every command."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from rpf_cocycle import __version__
from rpf_cocycle.config.models import Config


def finite_or_none(value: Optional[float]) -> Optional[float]:
    """Map inf, -inf and NaN to None so the report stays valid JSON."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def config_digest(config: Config) -> str:
    payload = json.dumps(config.model_dump(mode="json", by_alias=True), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class SystemSummary(BaseModel):
    """Sizes of the validated system and its image presentation."""

    source_symbols: int
    target_symbols: int
    irreducible: bool
    recoded_block_length: Optional[int] = Field(
        None, description="Block length of the higher-block recoding, if one was applied"
    )
    image_states: int
    image_edges: int
    measure_mode: str
    topological_pressure: Optional[float] = None


class CertificateSummary(BaseModel):
    class_degree: int
    stabilized: bool
    block: List[str]
    position: int
    symbol: str
    representatives: List[str]
    fibers: dict[str, List[str]]
    uncovered: List[str]
    profile: List[int]
    fiber_cardinality_bound: int
    fiber_degree: Optional[int] = None


class LyapunovSummary(BaseModel):
    exponents: List[Optional[float]] = Field(..., description="Non-increasing; null for -inf")
    stderr: List[Optional[float]]
    multiplicity: int
    gap: Optional[float] = None
    steps: int
    warmup: int


class PressureSummary(BaseModel):
    value: float
    stderr: Optional[float]
    steps: int
    method: str


class MultiplicitySummary(BaseModel):
    count: int
    gap: Optional[float] = None
    tolerance: float


class ConeSummary(BaseModel):
    beta: float
    seminorm_phi: float
    a: float
    b: float
    D: float
    norm_bound: float
    block_length: Optional[int] = None
    a_bound: Optional[float] = None
    t: Optional[float] = None
    k_bound: Optional[float] = None
    empirical_diameter: Optional[float] = None
    contraction_coeff: Optional[float] = None


class DecompositionSummary(BaseModel):
    word: List[str]
    windows: List[int]
    assignments: int
    nonzero: int
    max_relative_error: float
    per_symbol_identity: bool
    passed: bool


class ClauseResult(BaseModel):
    name: str
    passed: bool
    detail: str


class OrbitRecord(BaseModel):
    """Headline numbers of one additional orbit."""

    orbit_index: int
    top_exponent: Optional[float]
    pressure: Optional[float]
    multiplicity: Optional[int]
    passed: Optional[bool] = None


class Report(BaseModel):
    """
    Result of one command.

    Everything but ``wall_clock_seconds`` is a deterministic function of the
    configuration, the seed and the tool version.
    """

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "tool_version": "0.1.0",
                "command": "class-degree",
                "config_name": "phase",
                "config_digest": "3f1c...",
                "seed": 0,
            }
        }
    )

    tool_version: str = __version__
    command: str
    config_name: str
    config_digest: str
    seed: int
    system: SystemSummary
    class_degree: Optional[CertificateSummary] = None
    lyapunov: Optional[LyapunovSummary] = None
    pressure: Optional[PressureSummary] = None
    multiplicity: Optional[MultiplicitySummary] = None
    cones: Optional[ConeSummary] = None
    decomposition: Optional[DecompositionSummary] = None
    clauses: List[ClauseResult] = Field(default_factory=list)
    passed: Optional[bool] = None
    additional_orbits: List[OrbitRecord] = Field(default_factory=list)
    wall_clock_seconds: float = 0.0

    def deterministic_dump(self) -> dict:
        """Report contents without the wall-clock entry."""
        return self.model_dump(mode="json", exclude={"wall_clock_seconds"})


def write_report(report: Report, path: Union[str, Path]) -> None:
    Path(path).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")


def load_report(path: Union[str, Path]) -> Report:
    return Report.model_validate_json(Path(path).read_text(encoding="utf-8"))
