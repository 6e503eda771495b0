"""End-to-end checks of closed-form values on the reference systems."""

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from rpf_cocycle.classdeg import class_degree, minimal_transition_block, representative_fibers
from rpf_cocycle.cocycle import (
    bar_operators,
    build_operators,
    lyapunov_spectrum,
    pressure_estimate,
    transfer_word_function,
    verify_decomposition,
    verify_theorem,
)
from rpf_cocycle.cones import (
    ando_split,
    cone_membership,
    cone_parameter,
    contraction_coefficient,
    hilbert_distance,
    lemma_bounds,
)
from rpf_cocycle.config import ConfigLoader
from rpf_cocycle.experiment import run_experiment
from rpf_cocycle.measure import label_weight_measure, uniform_measure
from rpf_cocycle.potential import WordFunction, validate_potential, zero_potential
from rpf_cocycle.symbolic import enumerate_words, image_presentation
from tests.conftest import (
    ALL_SYSTEMS,
    LOG2,
    LOG_GOLDEN,
    make_golden_collapse,
    make_pairing,
    make_phase,
    make_phase_pairing,
    make_run_choice,
)

RUN_CHOICE_RATE = 0.25 * LOG2
SHIPPED = ["golden_mean", "identity", "pairing", "phase", "phase_pairing", "run_choice"]


def family_of(system):
    return build_operators(system.sft, system.code, system.potential)


def bernoulli(system, weights):
    return label_weight_measure(image_presentation(system.code), weights)


class TestClosedFormExponents:
    """Exponents, multiplicities and class degrees with known values."""

    def test_golden_collapse(self):
        """Test lambda_1 = log golden ratio on the collapsed golden mean."""
        system = make_golden_collapse()
        report = lyapunov_spectrum(family_of(system), uniform_measure(image_presentation(system.code)), 1, 10_000, 0)
        assert report.exponents[0] == pytest.approx(LOG_GOLDEN, abs=1e-6)

    @pytest.mark.parametrize("q", [0.3, 0.5])
    def test_pairing(self, q):
        """Test the pairing system for Bernoulli(q)."""
        system = make_pairing()
        measure = bernoulli(system, {"0": q, "1": 1.0 - q})
        report = lyapunov_spectrum(family_of(system), measure, 4, 10_000, 0)
        assert report.exponents[0] == pytest.approx(LOG2, abs=1e-9)
        assert report.stderr[0] == pytest.approx(0.0, abs=1e-9)
        assert report.multiplicity == 1
        assert class_degree(system.code).value == 1
        pressure = pressure_estimate(system.code, system.potential, measure, 10_000, 0)
        assert pressure.value == pytest.approx(LOG2, abs=1e-9)

    @pytest.mark.parametrize("seed", range(5))
    def test_run_choice(self, seed):
        """Test exponent and pressure both match q(1 - q) log 2."""
        system = make_run_choice()
        measure = bernoulli(system, {"a": 0.5, "b": 0.5})
        report = lyapunov_spectrum(family_of(system), measure, 3, 100_000, seed)
        pressure = pressure_estimate(system.code, system.potential, measure, 100_000, seed)
        assert report.exponents[0] == pytest.approx(RUN_CHOICE_RATE, abs=5e-3)
        assert pressure.value == pytest.approx(RUN_CHOICE_RATE, abs=5e-3)
        assert report.multiplicity == 1
        assert class_degree(system.code).value == 1

    @pytest.mark.parametrize("alpha, gamma", [(0.0, 0.0), (0.3, -0.1)])
    def test_phase(self, alpha, gamma):
        """Test lambda_1 = lambda_2 = (alpha + gamma) / 2."""
        system = make_phase(alpha, gamma)
        report = lyapunov_spectrum(family_of(system), uniform_measure(image_presentation(system.code)), 2, 10_000, 0)
        expected = (alpha + gamma) / 2.0
        assert report.exponents[0] == pytest.approx(expected, abs=1e-9)
        assert report.exponents[1] == pytest.approx(expected, abs=1e-9)
        assert report.multiplicity == 2
        assert class_degree(system.code).value == 2

    def test_phase_pairing(self):
        """Test multiplicity 2 over a nontrivial base."""
        system = make_phase_pairing()
        measure = bernoulli(system, {"0": 0.5, "1": 0.5})
        report = lyapunov_spectrum(family_of(system), measure, 4, 20_000, 0)
        assert report.exponents[0] == pytest.approx(LOG2, abs=1e-6)
        assert report.exponents[1] == pytest.approx(LOG2, abs=1e-6)
        assert report.exponents[2] == -math.inf
        assert report.multiplicity == 2
        assert class_degree(system.code).value == 2


class TestDecompositionIdentity:
    """The windowed decomposition on the reference systems."""

    @pytest.mark.parametrize(
        "factory, weights",
        [
            (make_phase, None),
            (make_pairing, {"0": 0.5, "1": 0.5}),
            (make_run_choice, {"a": 0.5, "b": 0.5}),
            (make_phase_pairing, {"0": 0.5, "1": 0.5}),
        ],
    )
    def test_identity_and_nonzero_count(self, factory, weights):
        """Test the assignment sum equals the product and the survivors count the class degree."""
        system = factory()
        degree = class_degree(system.code)
        cert = degree.certificate
        family = family_of(system)
        bar_family = bar_operators(family, cert, representative_fibers(system.code, cert))
        measure = uniform_measure(image_presentation(system.code)) if weights is None else bernoulli(system, weights)
        report = verify_theorem(system.code, system.potential, measure, steps=2_000, seed=0, strict=False)
        word = report.decomposition_word
        check = verify_decomposition(family, bar_family, cert, word)
        assert check.ok
        assert check.max_rel_error <= 1e-12
        assert check.nonzero == degree.value


class TestConeSuite:
    """Cone parameters, the Ando split and Birkhoff contraction."""

    def test_b_below_a(self):
        """Test b < a across seminorms and beta."""
        rng = np.random.default_rng(0)
        sft = make_run_choice().sft
        for _ in range(200):
            beta = float(rng.uniform(0.05, 0.95))
            values = {w: float(rng.normal(scale=3.0)) for w in enumerate_words(sft, 2)}
            params = cone_parameter(validate_potential(sft, 2, values, beta=beta))
            assert params.b < params.a

    @pytest.mark.parametrize("name", sorted(ALL_SYSTEMS))
    def test_transfer_maps_cone_into_cone(self, name):
        """Test L_j maps the a-cone into the b-cone on every reference system."""
        rng = np.random.default_rng(1)
        system = ALL_SYSTEMS[name]()
        params = cone_parameter(system.potential)
        narrow = replace(params, a=params.b)
        for _ in range(20):
            f = WordFunction(system.sft, 3, {w: float(rng.normal()) for w in enumerate_words(system.sft, 3)})
            g = ando_split(f, params).g
            for j in range(system.code.target_size):
                image = transfer_word_function(system.sft, system.code, system.potential, j, g)
                assert cone_membership(image, narrow)

    def test_ando_split_random(self):
        """Test 1000 random Ando splits."""
        rng = np.random.default_rng(2)
        systems = [make_run_choice(), make_golden_collapse(), make_pairing()]
        for i in range(1000):
            system = systems[i % len(systems)]
            beta = float(rng.uniform(0.1, 0.9))
            params = cone_parameter(zero_potential(system.sft, beta=beta))
            range_ = int(rng.integers(1, 4))
            f = WordFunction(
                system.sft, range_, {w: float(rng.normal(scale=5.0)) for w in enumerate_words(system.sft, range_)}
            )
            g, h = ando_split(f, params)
            assert cone_membership(g, params)
            assert cone_membership(h, params)
            np.testing.assert_allclose(g.as_array() - h.as_array(), f.as_array(), atol=1e-9)

    @pytest.mark.parametrize("name", sorted(ALL_SYSTEMS))
    def test_block_diameter_below_bound(self, name):
        """Test the empirical block diameter never exceeds K."""
        system = ALL_SYSTEMS[name]()
        cert = minimal_transition_block(system.code)
        family = family_of(system)
        bar_family = bar_operators(family, cert, representative_fibers(system.code, cert))
        diagnostics = lemma_bounds(cert, system.potential, cone_parameter(system.potential), bar_family)
        assert diagnostics.empirical_diameter <= diagnostics.k_bound

    def test_birkhoff_contraction_random(self):
        """Test Theta(Mu, Mv) <= tanh(diameter / 4) Theta(u, v) on 1000 random pairs."""
        rng = np.random.default_rng(3)
        for _ in range(1000):
            dim = int(rng.integers(2, 6))
            matrix = rng.uniform(0.05, 1.0, size=(dim, dim))
            u, v = rng.uniform(0.05, 1.0, size=dim), rng.uniform(0.05, 1.0, size=dim)
            bound = contraction_coefficient(matrix) * hilbert_distance(u, v)
            assert hilbert_distance(matrix @ u, matrix @ v) <= bound + 1e-12


class TestEstimatorConsistency:
    """The theorem at estimator level on every shipped configuration."""

    @pytest.mark.parametrize("name", SHIPPED)
    def test_exponent_matches_pressure(self, config_dir, name):
        """Test |lambda_1 - P| <= 3 (se sum) and multiplicity <= class degree."""
        config = ConfigLoader().load(str(config_dir / f"{name}.json"))
        report = run_experiment(config, "verify").report
        top = report.lyapunov.exponents[0]
        spread = 3.0 * ((report.lyapunov.stderr[0] or 0.0) + (report.pressure.stderr or 0.0))
        assert abs(top - report.pressure.value) <= spread + 1e-9
        assert report.multiplicity.count <= report.class_degree.class_degree


class TestDeterminism:
    """Reports depend only on config and seed."""

    def test_verify_reports_identical(self, config_dir):
        """Test two verify runs give identical reports apart from timing."""
        config = ConfigLoader().load(str(config_dir / "phase_pairing.json"))
        first = run_experiment(config, "verify", seed=17, steps=5_000).report
        second = run_experiment(config, "verify", seed=17, steps=5_000).report
        assert json.dumps(first.deterministic_dump(), sort_keys=True) == json.dumps(
            second.deterministic_dump(), sort_keys=True
        )
