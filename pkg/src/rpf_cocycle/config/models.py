"""Data models for RPF Cocycle experiment configuration."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from rpf_cocycle.core.errors import RpfError
from rpf_cocycle.symbolic import enumerate_words, validate_sft


class SystemConfig(BaseModel):
    """Shift of finite type and one-block code."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "alphabet_x": ["a", "b"],
                "transitions": [["a", "b"], ["b", "a"]],
                "code": {"a": "z", "b": "z"},
                "target_alphabet": ["z"],
            }
        }
    )

    alphabet_x: list[str] = Field(..., min_length=1, description="Source symbols in declaration order")
    transitions: list[tuple[str, str]] = Field(..., description="Allowed pairs (c, r): c followed by r")
    code: dict[str, str] = Field(..., description="One-block code rho from source to target symbols")
    target_alphabet: Optional[list[str]] = Field(
        None, description="Target symbols; defaults to first appearance order of rho's images"
    )
    require_irreducible: bool = Field(True, description="Reject reducible transition digraphs")


class PotentialConfig(BaseModel):
    """Locally constant potential; omitted values mean phi = 0."""

    model_config = ConfigDict(
        json_schema_extra={"example": {"range": 1, "values": {"a": 0.3, "b": -0.1}, "beta": 0.5}}
    )

    range: int = Field(1, ge=1, description="Number of coordinates phi depends on")
    values: Optional[dict[str, float]] = Field(
        None, description="phi on every allowed word of length range; words are space-separated names"
    )
    beta: float = Field(0.5, gt=0.0, lt=1.0, description="Metric parameter beta in (0, 1)")


class PresentationEdge(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    source: str = Field(..., alias="from")
    target: str = Field(..., alias="to")
    label: str
    prob: float = Field(..., gt=0.0)


class PresentationConfig(BaseModel):
    """Explicit right-resolving presentation with edge probabilities."""

    states: list[str] = Field(..., min_length=1)
    edges: list[PresentationEdge] = Field(..., min_length=1)


class MeasureConfig(BaseModel):
    """Markov measure nu on the image."""

    model_config = ConfigDict(
        json_schema_extra={"example": {"mode": "bernoulli", "probabilities": {"0": 0.3, "1": 0.7}}}
    )

    mode: Literal["uniform", "bernoulli", "presentation"] = Field(
        "uniform", description="uniform, bernoulli (per-label weights) or presentation"
    )
    probabilities: Optional[dict[str, float]] = Field(None, description="Label weights for bernoulli")
    presentation: Optional[PresentationConfig] = None

    @model_validator(mode="after")
    def _check_mode(self) -> "MeasureConfig":
        if self.mode == "bernoulli" and not self.probabilities:
            raise ValueError("measure.probabilities required for bernoulli mode")
        if self.mode == "presentation" and self.presentation is None:
            raise ValueError("measure.presentation required for presentation mode")
        if self.probabilities and any(not p > 0.0 for p in self.probabilities.values()):
            raise ValueError("measure.probabilities must be positive")
        return self


class RunConfig(BaseModel):
    """Estimator parameters."""

    model_config = ConfigDict(
        json_schema_extra={"example": {"steps": 100000, "seed": 0, "batches": 20, "tol_abs": 0.001}}
    )

    steps: int = Field(100_000, ge=100, description="Orbit steps used by the estimators")
    seed: int = Field(0, ge=0, lt=2**64, description="Root seed")
    num_exponents: Optional[int] = Field(None, ge=1, description="Defaults to min(4, dimension)")
    batches: int = Field(20, ge=2, description="Batches for batch-means standard errors")
    tol_abs: float = Field(1e-3, gt=0.0, description="Absolute tolerance of the verification clauses")
    max_block_len: int = Field(6, ge=1, description="Longest block searched for the class degree")
    l_check: int = Field(8, ge=1, description="Longest word compared when checking presentations")
    warmup: int = Field(1000, ge=0, description="Orbit prefix that only evolves the QR frame")
    orbits: int = Field(1, ge=1, description="Independent orbits")
    max_assignments: int = Field(4096, ge=1, description="Limit on decomposition assignments")

    @model_validator(mode="after")
    def _check_batches(self) -> "RunConfig":
        if self.steps < 10 * self.batches:
            raise ValueError("run.steps must be at least 10 * run.batches")
        return self


class Expectations(BaseModel):
    """Known values checked by the verify command."""

    exponent: Optional[float] = None
    multiplicity: Optional[int] = Field(None, ge=1)
    class_degree: Optional[int] = Field(None, ge=1)
    pressure: Optional[float] = None


class Config(BaseModel):
    """Root configuration for RPF Cocycle."""

    model_config = ConfigDict(json_schema_extra={"title": "RPF Cocycle Configuration"})

    version: str = Field("1.0.0", description="Configuration version")
    name: str = Field("experiment", description="Experiment name used in reports")
    system: SystemConfig
    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    measure: MeasureConfig = Field(default_factory=MeasureConfig)
    run: RunConfig = Field(default_factory=RunConfig)
    expectations: Expectations = Field(default_factory=Expectations)

    @model_validator(mode="after")
    def _check_references(self) -> "Config":
        problems = cross_reference_problems(self)
        if problems:
            raise ValueError("; ".join(problems))
        return self


def cross_reference_problems(config: Config) -> list[str]:
    """Every reference between sections that points at something undeclared."""
    problems: list[str] = []
    system = config.system
    declared = set(system.alphabet_x)
    if len(declared) != len(system.alphabet_x):
        problems.append("system.alphabet_x declares a symbol twice")
    for c, r in system.transitions:
        for symbol in (c, r):
            if symbol not in declared:
                problems.append(f"system.transitions references unknown symbol {symbol!r}")
    for symbol in system.code:
        if symbol not in declared:
            problems.append(f"system.code maps unknown symbol {symbol!r}")
    missing = [s for s in system.alphabet_x if s not in system.code]
    if missing:
        problems.append(f"system.code has no image for {missing}")
    targets = system.target_alphabet or list(dict.fromkeys(system.code.values()))
    if system.target_alphabet is not None:
        for image in system.code.values():
            if image not in targets:
                problems.append(f"system.code uses undeclared target symbol {image!r}")

    measure = config.measure
    for label in (measure.probabilities or {}):
        if label not in targets:
            problems.append(f"measure.probabilities references unknown label {label!r}")
    if measure.presentation is not None:
        states = set(measure.presentation.states)
        for edge in measure.presentation.edges:
            if edge.source not in states or edge.target not in states:
                problems.append(f"measure.presentation edge {edge.source}->{edge.target} uses an unknown state")
            if edge.label not in targets:
                problems.append(f"measure.presentation edge label {edge.label!r} is unknown")

    if problems or config.potential.values is None:
        return problems
    return problems + _potential_problems(config)


def _potential_problems(config: Config) -> list[str]:
    potential = config.potential
    try:
        sft = validate_sft(config.system.alphabet_x, config.system.transitions)
    except RpfError as exc:
        return [f"system: {exc}"]
    expected = {tuple(sft.alphabet[c] for c in w) for w in enumerate_words(sft, potential.range)}
    given = {tuple(key.split()): key for key in (potential.values or {})}
    problems = []
    missing = sorted(expected - given.keys())
    if missing:
        problems.append(
            f"potential.values incomplete: missing {[' '.join(w) for w in missing[:5]]}"
        )
    extra = sorted(given.keys() - expected)
    if extra:
        problems.append(
            f"potential.values has forbidden or malformed words {[given[w] for w in extra[:5]]}"
        )
    return problems
