"""Experiment runner: builds the system from a configuration and executes one command."""

from __future__ import annotations

import concurrent.futures
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, TypeVar

import pandas as pd
from pydantic import ValidationError

from rpf_cocycle.classdeg import (
    ClassDegreeResult,
    RepresentativeFibers,
    class_degree,
    fiber_cardinality_bound,
    fiber_degree,
    representative_fibers,
)
from rpf_cocycle.cocycle import (
    BarOperatorFamily,
    LyapunovReport,
    OperatorFamily,
    PressureEstimate,
    TheoremReport,
    bar_operators,
    build_operators,
    decomposition_word,
    lyapunov_along,
    pressure_along,
    top_multiplicity,
    topological_pressure,
    verify_decomposition,
    verify_theorem,
)
from rpf_cocycle.cones import ConeParams, cone_parameter, lemma_bounds, norm_comparison_bound
from rpf_cocycle.config.models import Config, RunConfig
from rpf_cocycle.core.di import ArtifactContainer
from rpf_cocycle.core.errors import ConfigValidationError, InfiniteDiameterError, InputError
from rpf_cocycle.measure import (
    FRAME_STREAM,
    MeasurePresentation,
    custom_presentation,
    label_weight_measure,
    orbit_rng,
    sample_orbit,
    uniform_measure,
)
from rpf_cocycle.potential import Potential, validate_potential, zero_potential
from rpf_cocycle.report import (
    CertificateSummary,
    ClauseResult,
    ConeSummary,
    DecompositionSummary,
    LyapunovSummary,
    MultiplicitySummary,
    OrbitRecord,
    PressureSummary,
    Report,
    SystemSummary,
    config_digest,
    finite_or_none,
)
from rpf_cocycle.results import BatchAnalyzer
from rpf_cocycle.symbolic import (
    CodeSpec,
    Sft,
    check_presentation_language,
    higher_block,
    image_presentation,
    validate_code,
    validate_sft,
)

logger = logging.getLogger(__name__)

COMMANDS = ("validate", "class-degree", "lyapunov", "pressure", "cones", "decompose", "verify")
MAX_WORKERS = 8

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class System:
    """
    Validated system ready for computation.

    ``sft``, ``code`` and ``potential`` are the operational objects: after higher-block
    recoding when the configured range exceeds 2, the configured ones otherwise.
    """

    name: str
    source: Sft
    sft: Sft
    code: CodeSpec
    potential: Potential
    presentation: MeasurePresentation
    measure_mode: str
    recoded_block_length: Optional[int] = None


@dataclass
class ExperimentOutcome:
    """Report of one command plus the per-batch trace when the command produced one."""

    report: Report
    trace: Optional[pd.DataFrame] = None


def apply_overrides(config: Config, seed: Optional[int] = None, steps: Optional[int] = None) -> Config:
    """Return a copy of config with run.seed / run.steps replaced and revalidated."""
    update = {}
    if seed is not None:
        update["seed"] = seed
    if steps is not None:
        update["steps"] = steps
    if not update:
        return config
    try:
        run = RunConfig.model_validate({**config.run.model_dump(), **update})
    except ValidationError as exc:
        problems = []
        for error in exc.errors():
            path = ".".join(["run", *(str(p) for p in error["loc"])])
            problems.append(f"{path}: {error['msg'].removeprefix('Value error, ')}")
        raise ConfigValidationError(problems) from exc
    return config.model_copy(update={"run": run})


def build_system(config: Config) -> System:
    """
    Validate the system, potential and measure sections into computational objects.

    Raises:
        InputError: Any validation failure of the symbolic data, the potential or the measure
        LanguageMismatchError: If a presentation does not generate the image language
    """
    spec = config.system
    source = validate_sft(spec.alphabet_x, spec.transitions, spec.require_irreducible)
    code = validate_code(source, spec.code, spec.target_alphabet)

    if config.potential.values is None:
        if config.potential.range != 1:
            raise InputError("potential.values is required when potential.range > 1")
        potential = zero_potential(source, config.potential.beta)
    else:
        potential = validate_potential(
            source, config.potential.range, config.potential.values, config.potential.beta
        )

    measure = config.measure
    if measure.mode == "presentation":
        assert measure.presentation is not None
        presentation = custom_presentation(
            measure.presentation.states,
            code.target_alphabet,
            [(e.source, e.target, e.label, e.prob) for e in measure.presentation.edges],
        )
        check_presentation_language(code, presentation.graph, config.run.l_check)
    else:
        graph = image_presentation(code, config.run.l_check)
        if measure.mode == "bernoulli":
            assert measure.probabilities is not None
            presentation = label_weight_measure(graph, measure.probabilities)
        else:
            presentation = uniform_measure(graph)

    sft, op_code, op_potential, recoded = source, code, potential, None
    if potential.range > 2:
        sft, op_code, op_potential = higher_block(source, code, potential, potential.range)
        recoded = potential.range - 1
        logger.info("Recoded range-%d potential onto %d blocks", potential.range, sft.size)

    return System(
        name=config.name,
        source=source,
        sft=sft,
        code=op_code,
        potential=op_potential,
        presentation=presentation,
        measure_mode=measure.mode,
        recoded_block_length=recoded,
    )


class ExperimentRunner:
    """
    Execute one command on a configuration.

    Every derived artifact is registered in an ArtifactContainer and built on first use.
    Additional orbits run in a thread pool and are merged in orbit-index order.
    """

    def __init__(self, config: Config, container: Optional[ArtifactContainer] = None) -> None:
        """
        Initialize ExperimentRunner.

        Args:
            config: Validated configuration
            container: Optional container; a fresh one is created if not provided
        """
        self.config = config
        self.container = container or ArtifactContainer(config)
        self._register_artifacts()

    def _register_artifacts(self) -> None:
        c = self.container
        run = self.config.run
        defaults: dict[str, Callable[[], object]] = {
            "system": lambda: build_system(self.config),
            "family": lambda: _operators_of(self.system),
            "degree": lambda: class_degree(self.system.code, run.max_block_len),
            "fibers": lambda: representative_fibers(self.system.code, self.degree.certificate),
            "bar_family": lambda: bar_operators(
                self.family, self.degree.certificate, self.container.get("fibers")
            ),
            "cone_params": lambda: cone_parameter(self.system.potential),
        }
        for name, factory in defaults.items():
            if not c.has(name):
                c.register(name, factory, singleton=True)

    @property
    def system(self) -> System:
        return self.container.get("system")

    @property
    def family(self) -> OperatorFamily:
        return self.container.get("family")

    @property
    def degree(self) -> ClassDegreeResult:
        return self.container.get("degree")

    @property
    def num_exponents(self) -> int:
        requested = self.config.run.num_exponents
        return requested if requested is not None else min(4, self.family.dimension)

    def _run_orbits(self, task: Callable[[int], T], *shared: str) -> list[T]:
        orbits = self.config.run.orbits
        for name in ("system", "family", *shared):
            self.container.get(name)
        if orbits == 1:
            return [task(0)]
        results: dict[int, T] = {}
        with concurrent.futures.ThreadPoolExecutor(max_workers=min(orbits, MAX_WORKERS)) as executor:
            future_to_index = {executor.submit(task, i): i for i in range(orbits)}
            for future in concurrent.futures.as_completed(future_to_index):
                results[future_to_index[future]] = future.result()
        return [results[i] for i in range(orbits)]

    def _orbit_tail(self, orbit_index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        run = self.config.run
        orbit = sample_orbit(self.system.presentation, run.warmup + run.steps, run.seed, orbit_index)
        return orbit.symbols, orbit.symbols[run.warmup :]

    def _lyapunov_task(self, orbit_index: int) -> LyapunovReport:
        run = self.config.run
        symbols, _ = self._orbit_tail(orbit_index)
        return lyapunov_along(
            self.family,
            symbols,
            self.num_exponents,
            run.batches,
            run.warmup,
            orbit_rng(run.seed, orbit_index, FRAME_STREAM),
            seed=run.seed,
            tol=run.tol_abs,
        )

    def _pressure_task(self, orbit_index: int) -> PressureEstimate:
        _, tail = self._orbit_tail(orbit_index)
        return pressure_along(self.family, self.system.potential, tail, self.config.run.batches)

    def _verify_task(self, orbit_index: int) -> TheoremReport:
        run = self.config.run
        return verify_theorem(
            self.system.code,
            self.system.potential,
            self.system.presentation,
            steps=run.steps,
            seed=run.seed,
            num_exponents=self.num_exponents,
            batches=run.batches,
            tol_abs=run.tol_abs,
            max_block_len=run.max_block_len,
            warmup=run.warmup,
            orbit_index=orbit_index,
            max_assignments=run.max_assignments,
            expectations=self.config.expectations.model_dump(),
            strict=False,
            family=self.family,
            degree=self.degree,
            bar_family=self.container.get("bar_family"),
        )

    def run(self, command: str) -> ExperimentOutcome:
        """
        Execute a command.

        Args:
            command: One of validate, class-degree, lyapunov, pressure, cones, decompose, verify

        Returns:
            ExperimentOutcome with the report and, for estimator commands, the batch trace
        """
        if command not in COMMANDS:
            raise InputError(f"Unknown command {command!r}")
        started = time.perf_counter()
        logger.info("Running %s on %s", command, self.config.name)

        fields: dict[str, object] = {}
        trace: Optional[pd.DataFrame] = None

        if command == "class-degree":
            fields["class_degree"] = self._certificate_summary()
        elif command == "lyapunov":
            reports = self._run_orbits(self._lyapunov_task)
            fields["lyapunov"] = _lyapunov_summary(reports[0])
            fields["multiplicity"] = self._multiplicity_summary(reports[0])
            fields["additional_orbits"] = [
                OrbitRecord(
                    orbit_index=i,
                    top_exponent=finite_or_none(r.exponents[0]),
                    pressure=None,
                    multiplicity=r.multiplicity,
                )
                for i, r in enumerate(reports[1:], start=1)
            ]
            trace = BatchAnalyzer(reports[0].batch_estimates).frame()
        elif command == "pressure":
            estimates = self._run_orbits(self._pressure_task)
            fields["pressure"] = _pressure_summary(estimates[0])
            fields["additional_orbits"] = [
                OrbitRecord(orbit_index=i, top_exponent=None, pressure=e.value, multiplicity=None)
                for i, e in enumerate(estimates[1:], start=1)
            ]
            trace = BatchAnalyzer([[v] for v in estimates[0].batch_estimates]).frame()
        elif command == "cones":
            fields["class_degree"] = self._certificate_summary()
            fields["cones"] = self._cone_summary(strict=True)
        elif command == "decompose":
            fields["class_degree"] = self._certificate_summary()
            fields["decomposition"] = self._decomposition_summary()
        elif command == "verify":
            theorems = self._run_orbits(self._verify_task, "degree", "fibers", "bar_family")
            primary = theorems[0]
            fields["class_degree"] = self._certificate_summary()
            fields["lyapunov"] = _lyapunov_summary(primary.lyapunov)
            fields["pressure"] = _pressure_summary(primary.pressure)
            fields["multiplicity"] = MultiplicitySummary(
                count=primary.multiplicity.count,
                gap=finite_or_none(primary.multiplicity.gap),
                tolerance=self.config.run.tol_abs,
            )
            fields["decomposition"] = self._decomposition_from(primary)
            fields["cones"] = self._cone_summary(strict=False)
            fields["clauses"] = [
                ClauseResult(name=c.name, passed=c.passed, detail=c.detail) for c in primary.clauses
            ]
            fields["passed"] = all(t.passed for t in theorems)
            fields["additional_orbits"] = [
                OrbitRecord(
                    orbit_index=i,
                    top_exponent=finite_or_none(t.lyapunov.exponents[0]),
                    pressure=t.pressure.value,
                    multiplicity=t.multiplicity.count,
                    passed=t.passed,
                )
                for i, t in enumerate(theorems[1:], start=1)
            ]
            trace = BatchAnalyzer(primary.lyapunov.batch_estimates).frame()

        report = Report(
            command=command,
            config_name=self.config.name,
            config_digest=config_digest(self.config),
            seed=self.config.run.seed,
            system=self._system_summary(),
            wall_clock_seconds=time.perf_counter() - started,
            **fields,
        )
        return ExperimentOutcome(report=report, trace=trace)

    def _system_summary(self) -> SystemSummary:
        system = self.system
        return SystemSummary(
            source_symbols=system.source.size,
            target_symbols=system.code.target_size,
            irreducible=system.source.irreducible,
            recoded_block_length=system.recoded_block_length,
            image_states=system.presentation.num_states,
            image_edges=len(system.presentation.graph.edges),
            measure_mode=system.measure_mode,
            topological_pressure=finite_or_none(topological_pressure(self.family)),
        )

    def _certificate_summary(self) -> CertificateSummary:
        code = self.system.code
        degree = self.degree
        fibers: RepresentativeFibers = self.container.get("fibers")
        cert = degree.certificate
        names = code.source.alphabet
        return CertificateSummary(
            class_degree=degree.value,
            stabilized=degree.stabilized,
            block=[code.target_alphabet[j] for j in cert.block],
            position=cert.position,
            symbol=code.target_alphabet[cert.symbol],
            representatives=[names[s] for s in cert.representatives],
            fibers={names[s]: [names[c] for c in sorted(f)] for s, f in fibers.fibers.items()},
            uncovered=[names[c] for c in sorted(fibers.uncovered)],
            profile=list(degree.profile),
            fiber_cardinality_bound=fiber_cardinality_bound(code),
            fiber_degree=fiber_degree(code, self.config.run.max_block_len),
        )

    def _multiplicity_summary(self, report: LyapunovReport) -> Optional[MultiplicitySummary]:
        if not math.isfinite(report.exponents[0]):
            return None
        count, gap = top_multiplicity(report, self.config.run.tol_abs)
        return MultiplicitySummary(count=count, gap=finite_or_none(gap), tolerance=self.config.run.tol_abs)

    def _cone_summary(self, strict: bool) -> ConeSummary:
        params: ConeParams = self.container.get("cone_params")
        summary = ConeSummary(
            beta=params.beta,
            seminorm_phi=params.seminorm_phi,
            a=params.a,
            b=params.b,
            D=params.D,
            norm_bound=norm_comparison_bound(params),
        )
        try:
            bounds = lemma_bounds(
                self.degree.certificate, self.system.potential, params, self.container.get("bar_family")
            )
        except InfiniteDiameterError:
            if strict:
                raise
            logger.warning("Block product has infinite diameter; cone diagnostics skipped")
            return summary
        return summary.model_copy(
            update={
                "block_length": bounds.block_length,
                "a_bound": finite_or_none(bounds.a_bound),
                "t": bounds.t,
                "k_bound": finite_or_none(bounds.k_bound),
                "empirical_diameter": bounds.empirical_diameter,
                "contraction_coeff": bounds.contraction_coeff,
            }
        )

    def _decomposition_summary(self) -> DecompositionSummary:
        run = self.config.run
        cert = self.degree.certificate
        _, tail = self._orbit_tail(0)
        word = decomposition_word(tail, cert, run.max_assignments)
        bar_family: BarOperatorFamily = self.container.get("bar_family")
        check = verify_decomposition(self.family, bar_family, cert, word, run.max_assignments)
        return DecompositionSummary(
            word=[self.system.code.target_alphabet[j] for j in word],
            windows=list(check.windows),
            assignments=check.assignments,
            nonzero=check.nonzero,
            max_relative_error=check.max_rel_error,
            per_symbol_identity=check.per_symbol_identity,
            passed=check.ok,
        )

    def _decomposition_from(self, theorem: TheoremReport) -> DecompositionSummary:
        check = theorem.decomposition
        return DecompositionSummary(
            word=[self.system.code.target_alphabet[j] for j in theorem.decomposition_word],
            windows=list(check.windows),
            assignments=check.assignments,
            nonzero=check.nonzero,
            max_relative_error=check.max_rel_error,
            per_symbol_identity=check.per_symbol_identity,
            passed=check.ok,
        )


def _operators_of(system: System) -> OperatorFamily:
    return build_operators(system.sft, system.code, system.potential)


def _lyapunov_summary(report: LyapunovReport) -> LyapunovSummary:
    return LyapunovSummary(
        exponents=[finite_or_none(v) for v in report.exponents],
        stderr=[finite_or_none(v) for v in report.stderr],
        multiplicity=report.multiplicity,
        gap=finite_or_none(report.gap),
        steps=report.steps,
        warmup=report.warmup,
    )


def _pressure_summary(estimate: PressureEstimate) -> PressureSummary:
    return PressureSummary(
        value=estimate.value,
        stderr=finite_or_none(estimate.stderr),
        steps=estimate.n,
        method=estimate.method,
    )


def run_experiment(
    config: Config,
    command: str,
    seed: Optional[int] = None,
    steps: Optional[int] = None,
) -> ExperimentOutcome:
    """
    Convenience function to run one command.

    Args:
        config: Validated configuration
        command: Command name
        seed: Optional override of run.seed
        steps: Optional override of run.steps

    Returns:
        ExperimentOutcome with report and optional trace
    """
    runner = ExperimentRunner(apply_overrides(config, seed=seed, steps=steps))
    return runner.run(command)
