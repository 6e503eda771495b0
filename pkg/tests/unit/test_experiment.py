"""Tests for the experiment runner."""

import math
from unittest.mock import MagicMock, patch

import pytest

from rpf_cocycle.classdeg import class_degree
from rpf_cocycle.cocycle import build_operators
from rpf_cocycle.config import ConfigLoader, parse_config
from rpf_cocycle.core.di import ArtifactContainer
from rpf_cocycle.core.errors import (
    ConfigValidationError,
    InfiniteDiameterError,
    InputError,
    LanguageMismatchError,
)
from rpf_cocycle.experiment import (
    ExperimentRunner,
    apply_overrides,
    build_system,
    run_experiment,
)
from tests.conftest import LOG2


def load(config_dir, name, **run):
    config = ConfigLoader().load(str(config_dir / f"{name}.json"))
    if run:
        config = config.model_copy(update={"run": config.run.model_copy(update=run)})
    return config


class TestApplyOverrides:
    """Test apply_overrides."""

    def test_no_overrides(self, config_dir):
        """Test the config is returned unchanged."""
        config = load(config_dir, "phase")
        assert apply_overrides(config) is config

    def test_seed_and_steps(self, config_dir):
        """Test seed and steps are replaced."""
        config = apply_overrides(load(config_dir, "phase"), seed=5, steps=4000)
        assert config.run.seed == 5
        assert config.run.steps == 4000

    def test_steps_revalidated(self, config_dir):
        """Test overrides below 10 * batches are rejected."""
        with pytest.raises(ConfigValidationError, match="run"):
            apply_overrides(load(config_dir, "phase"), steps=150)


class TestBuildSystem:
    """Test build_system."""

    def test_phase(self, config_dir):
        """Test the phase system and its one-state image."""
        system = build_system(load(config_dir, "phase"))
        assert system.sft.alphabet == ("a", "b")
        assert system.presentation.num_states == 1
        assert system.recoded_block_length is None
        assert system.potential.pair_value(0, 1) == pytest.approx(0.3)

    def test_range_three_is_recoded(self):
        """Test range-3 potentials are moved onto 2-blocks."""
        words = ["g0 g0 g0", "g0 g0 g1", "g0 g1 g0", "g1 g0 g0", "g1 g0 g1"]
        config = parse_config(
            '{"system": {"alphabet_x": ["g0", "g1"], '
            '"transitions": [["g0", "g0"], ["g0", "g1"], ["g1", "g0"]], '
            '"code": {"g0": "0", "g1": "1"}}, '
            '"potential": {"range": 3, "values": {'
            + ", ".join(f'"{w}": {0.1 * i}' for i, w in enumerate(words))
            + "}}}"
        )
        system = build_system(config)
        assert system.recoded_block_length == 2
        assert system.sft.size == 3
        assert system.source.size == 2
        assert system.potential.range == 2
        assert system.code.rho == (0, 0, 1)

    def test_range_two_without_values(self):
        """Test a range above 1 needs an explicit table."""
        config = parse_config(
            '{"system": {"alphabet_x": ["a", "b"], "transitions": [["a", "b"], ["b", "a"]], '
            '"code": {"a": "z", "b": "z"}}, "potential": {"range": 2}}'
        )
        with pytest.raises(InputError):
            build_system(config)

    def test_presentation_language_checked(self):
        """Test a custom presentation of the wrong language is rejected."""
        config = parse_config(
            '{"system": {"alphabet_x": ["g0", "g1"], '
            '"transitions": [["g0", "g0"], ["g0", "g1"], ["g1", "g0"]], '
            '"code": {"g0": "0", "g1": "1"}}, '
            '"measure": {"mode": "presentation", "presentation": {"states": ["s"], "edges": ['
            '{"from": "s", "to": "s", "label": "0", "prob": 0.5}, '
            '{"from": "s", "to": "s", "label": "1", "prob": 0.5}]}}}'
        )
        with pytest.raises(LanguageMismatchError):
            build_system(config)


class TestExperimentRunner:
    """Test ExperimentRunner class."""

    def test_unknown_command(self, config_dir):
        """Test unknown commands are rejected."""
        with pytest.raises(InputError):
            ExperimentRunner(load(config_dir, "phase")).run("simulate")

    def test_validate(self, config_dir):
        """Test validate reports only the system."""
        report = ExperimentRunner(load(config_dir, "identity")).run("validate").report
        assert report.system.image_states == 2
        assert report.system.image_edges == 3
        assert report.class_degree is None

    def test_class_degree_phase(self, config_dir):
        """Test the phase certificate in the report."""
        report = ExperimentRunner(load(config_dir, "phase")).run("class-degree").report
        cert = report.class_degree
        assert cert.class_degree == 2
        assert cert.block == ["z"]
        assert cert.representatives == ["a", "b"]
        assert cert.fibers == {"a": ["a"], "b": ["b"]}
        assert cert.fiber_degree == 2

    def test_artifacts_are_shared(self, config_dir):
        """Test the system is built once per runner."""
        config = load(config_dir, "pairing")
        container = ArtifactContainer(config)
        factory = MagicMock(side_effect=lambda: build_system(config))
        container.register("system", factory)
        runner = ExperimentRunner(config, container)
        runner.run("class-degree")
        runner.run("decompose")
        factory.assert_called_once_with()

    def test_lyapunov_trace_and_orbits(self, config_dir):
        """Test additional orbits are reported in index order."""
        config = load(config_dir, "pairing", steps=2000, orbits=3)
        outcome = ExperimentRunner(config).run("lyapunov")
        report = outcome.report
        assert report.lyapunov.exponents[0] == pytest.approx(LOG2, abs=1e-9)
        assert report.lyapunov.exponents[1] is None
        assert [o.orbit_index for o in report.additional_orbits] == [1, 2]
        assert list(outcome.trace.columns) == ["batch", "exponent_index", "estimate"]
        assert len(outcome.trace) == 20 * 4

    def test_pressure(self, config_dir):
        """Test the pressure command on the pairing system."""
        outcome = ExperimentRunner(load(config_dir, "pairing", steps=2000)).run("pressure")
        assert outcome.report.pressure.value == pytest.approx(LOG2, abs=1e-9)
        assert outcome.report.pressure.method == "partition-dp"
        assert len(outcome.trace) == 20

    def test_cones_golden_mean(self, config_dir):
        """Test the golden-mean block diameter."""
        report = ExperimentRunner(load(config_dir, "golden_mean")).run("cones").report
        assert report.cones.a == pytest.approx(1.0)
        assert report.cones.b == pytest.approx(0.5)
        assert report.cones.empirical_diameter == pytest.approx(math.log(4.0 / 3.0))

    def test_verify_phase(self, config_dir):
        """Test the phase system verifies with multiplicity 2."""
        report = ExperimentRunner(load(config_dir, "phase", steps=2000)).run("verify").report
        assert report.passed
        assert report.multiplicity.count == 2
        assert report.decomposition.passed
        assert {c.name for c in report.clauses} >= {
            "exponent_equals_pressure",
            "multiplicity_bounded_by_class_degree",
            "decomposition_identity",
        }

    def test_verify_records_failure(self, config_dir):
        """Test failing expectations give passed = False instead of raising."""
        config = load(config_dir, "phase", steps=2000)
        config = config.model_copy(
            update={"expectations": config.expectations.model_copy(update={"multiplicity": 1})}
        )
        report = ExperimentRunner(config).run("verify").report
        assert report.passed is False
        failed = [c.name for c in report.clauses if not c.passed]
        assert failed == ["expected_multiplicity"]

    def test_verify_skips_infinite_diameter(self, config_dir):
        """Test verify logs and skips cone diagnostics on infinite diameter."""
        config = load(config_dir, "pairing", steps=2000)
        with patch("rpf_cocycle.experiment.lemma_bounds", side_effect=InfiniteDiameterError("infinite diameter")):
            report = ExperimentRunner(config).run("verify").report
        assert report.cones is not None
        assert report.cones.empirical_diameter is None

    def test_deterministic(self, config_dir):
        """Test the same config and seed give the same report."""
        config = load(config_dir, "run_choice", steps=3000)
        first = run_experiment(config, "verify", seed=4).report
        second = run_experiment(config, "verify", seed=4).report
        assert first.deterministic_dump() == second.deterministic_dump()
        assert first.seed == 4

    def test_orbit_pool_builds_system_once(self, config_dir):
        """Test parallel orbits share one system and one operator family."""
        config = load(config_dir, "run_choice", steps=2000, orbits=8)
        with (
            patch("rpf_cocycle.experiment.build_system", wraps=build_system) as system_factory,
            patch("rpf_cocycle.experiment.build_operators", wraps=build_operators) as family_factory,
        ):
            ExperimentRunner(config).run("lyapunov")
        assert system_factory.call_count == 1
        assert family_factory.call_count == 1

    def test_verify_orbits_reuse_class_degree(self, config_dir):
        """Test verify computes the class degree once for all orbits."""
        config = load(config_dir, "phase", steps=2000, orbits=4)
        with (
            patch("rpf_cocycle.experiment.class_degree", wraps=class_degree) as runner_degree,
            patch("rpf_cocycle.cocycle.class_degree") as per_orbit_degree,
        ):
            report = ExperimentRunner(config).run("verify").report
        assert runner_degree.call_count == 1
        per_orbit_degree.assert_not_called()
        assert report.passed
        assert [o.passed for o in report.additional_orbits] == [True, True, True]

    def test_orbit_pool_deterministic(self, config_dir):
        """Test multi-orbit reports do not depend on thread scheduling."""
        config = load(config_dir, "run_choice", steps=2000, orbits=6)
        first = ExperimentRunner(config).run("verify").report
        second = ExperimentRunner(config).run("verify").report
        assert first.deterministic_dump() == second.deterministic_dump()
        assert len(first.additional_orbits) == 5
