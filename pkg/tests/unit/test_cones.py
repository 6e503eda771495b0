"""Tests for cone parameters, Hilbert's metric and block contraction."""

import math
from dataclasses import replace

import numpy as np
import pytest

from rpf_cocycle.classdeg import minimal_transition_block, representative_fibers
from rpf_cocycle.cocycle import bar_operators, build_operators, transfer_word_function
from rpf_cocycle.cones import (
    ando_split,
    cone_membership,
    cone_parameter,
    contraction_coefficient,
    hilbert_distance,
    lemma_bounds,
    matrix_diameter,
    norm_comparison_bound,
    projective_contraction,
)
from rpf_cocycle.core.errors import AllZeroError, InfiniteDiameterError, InputError, ZeroVectorError
from rpf_cocycle.potential import WordFunction, validate_potential, zero_potential
from rpf_cocycle.symbolic import enumerate_words
from tests.conftest import golden_mean_sft, make_golden_collapse, make_pairing, make_phase, make_run_choice


def random_function(sft, range_, rng, low=-1.0, high=1.0):
    return WordFunction(sft, range_, {w: float(rng.uniform(low, high)) for w in enumerate_words(sft, range_)})


def block_diagnostics(system):
    family = build_operators(system.sft, system.code, system.potential)
    cert = minimal_transition_block(system.code)
    bar_family = bar_operators(family, cert, representative_fibers(system.code, cert))
    return lemma_bounds(cert, system.potential, cone_parameter(system.potential), bar_family)


class TestConeParameter:
    """Test cone_parameter."""

    def test_zero_potential(self):
        """Test beta = 1/2 and |phi| = 0 give a = 1, b = 1/2 and D = 2 + 2e."""
        params = cone_parameter(zero_potential(golden_mean_sft()))
        assert params.a == pytest.approx(1.0)
        assert params.b == pytest.approx(0.5)
        assert params.D == pytest.approx(2.0 + 2.0 * math.e)

    def test_unit_seminorm(self):
        """Test |phi| = 1 gives a = 2, b = 3/2."""
        potential = validate_potential(golden_mean_sft(), 1, {"g0": 0.5, "g1": -0.5})
        params = cone_parameter(potential)
        assert params.seminorm_phi == pytest.approx(1.0)
        assert params.a == pytest.approx(2.0)
        assert params.b == pytest.approx(1.5)
        assert params.D == pytest.approx(2.0 + 4.0 * math.exp(2.0))

    def test_b_below_a(self, any_system):
        """Test the derived parameters always satisfy b < a."""
        params = cone_parameter(any_system.potential)
        assert params.b < params.a

    def test_explicit_a_too_small(self):
        """Test an explicit a with b >= a is rejected."""
        potential = validate_potential(golden_mean_sft(), 1, {"g0": 0.5, "g1": -0.5})
        with pytest.raises(InputError):
            cone_parameter(potential, a=0.1)

    def test_norm_comparison_bound(self):
        """Test the comparison constant is at least 3."""
        params = cone_parameter(zero_potential(golden_mean_sft()))
        assert norm_comparison_bound(params) == pytest.approx(max(3.0, 1.0 + math.e))

    def test_norm_comparison_holds_in_cone(self):
        """Test ||g||_beta <= bound * ||g||_inf for random g in the cone."""
        rng = np.random.default_rng(7)
        systems = [make_run_choice(), make_golden_collapse(), make_pairing()]
        for i in range(300):
            system = systems[i % len(systems)]
            params = cone_parameter(zero_potential(system.sft, beta=float(rng.uniform(0.1, 0.9))))
            g = ando_split(random_function(system.sft, int(rng.integers(1, 4)), rng, -3.0, 3.0), params).g
            assert g.norm(params.beta) <= norm_comparison_bound(params) * g.sup_norm() * (1.0 + 1e-12)


class TestConeMembership:
    """Test cone_membership."""

    def test_positive_constant(self):
        """Test positive constants lie in the cone."""
        sft = golden_mean_sft()
        params = cone_parameter(zero_potential(sft))
        assert cone_membership(WordFunction.constant(sft, 2, 3.0), params)

    def test_negative_value(self):
        """Test negative functions are excluded."""
        sft = golden_mean_sft()
        params = cone_parameter(zero_potential(sft))
        assert not cone_membership(WordFunction.constant(sft, 1, -1.0), params)

    def test_ratio_bound(self):
        """Test words agreeing on one symbol may differ by at most exp(a beta)."""
        sft = golden_mean_sft()
        params = cone_parameter(zero_potential(sft))
        inside = WordFunction(sft, 2, {(0, 0): 1.0, (0, 1): math.exp(0.5) * 0.99, (1, 0): 7.0})
        outside = WordFunction(sft, 2, {(0, 0): 1.0, (0, 1): math.exp(0.5) * 1.01, (1, 0): 7.0})
        assert cone_membership(inside, params)
        assert not cone_membership(outside, params)


class TestAndoSplit:
    """Test ando_split."""

    @pytest.mark.parametrize("seed", range(10))
    def test_split_lies_in_cone(self, seed):
        """Test f = g - h with g and h in the cone."""
        rng = np.random.default_rng(seed)
        sft = make_run_choice().sft
        params = cone_parameter(zero_potential(sft, beta=float(rng.uniform(0.2, 0.8))))
        f = random_function(sft, 3, rng, -5.0, 5.0)
        g, h = ando_split(f, params)
        assert cone_membership(g, params)
        assert cone_membership(h, params)
        for word in f.words():
            assert g[word] - h[word] == pytest.approx(f[word])


class TestDAdaptedness:
    """Test that domination inside the cone bounds the norm by D."""

    def test_random_pairs(self):
        """Test g +- f in the cone implies ||f||_beta <= D ||g||_beta on 1000 pairs."""
        rng = np.random.default_rng(11)
        systems = [make_run_choice(), make_golden_collapse(), make_pairing(), make_phase()]
        for i in range(1000):
            system = systems[i % len(systems)]
            params = cone_parameter(zero_potential(system.sft, beta=float(rng.uniform(0.1, 0.9))))
            range_ = int(rng.integers(1, 4))
            g = ando_split(random_function(system.sft, range_, rng, -2.0, 2.0), params).g
            direction = random_function(system.sft, range_, rng, -g.sup_norm(), g.sup_norm())
            scale = 1.0
            for _ in range(80):
                f = direction.map(lambda v: scale * v)
                plus = WordFunction(g.sft, range_, {w: g[w] + f[w] for w in g.words()})
                minus = WordFunction(g.sft, range_, {w: g[w] - f[w] for w in g.words()})
                if cone_membership(plus, params) and cone_membership(minus, params):
                    break
                scale /= 2.0
            else:
                pytest.fail("no dominated perturbation found")
            assert f.norm(params.beta) <= params.D * g.norm(params.beta) * (1.0 + 1e-12)


class TestTransferIntoCone:
    """Test that L_j maps the a-cone into the b-cone."""

    @pytest.mark.parametrize("seed", range(5))
    def test_image_in_smaller_cone(self, seed):
        """Test L_j g lies in the cone of parameter b for g in the cone of parameter a."""
        rng = np.random.default_rng(100 + seed)
        system = make_run_choice()
        sft = system.sft
        values = {w: float(rng.uniform(-0.5, 0.5)) for w in enumerate_words(sft, 2)}
        potential = validate_potential(sft, 2, values, beta=0.5)
        params = cone_parameter(potential)
        g = ando_split(random_function(sft, 3, rng), params).g
        narrow = replace(params, a=params.b)
        for j in range(system.code.target_size):
            image = transfer_word_function(sft, system.code, potential, j, g)
            assert image.range == 2
            assert cone_membership(image, narrow)


class TestHilbertDistance:
    """Test hilbert_distance."""

    def test_swap(self):
        """Test d((1,2),(2,1)) = log 4."""
        assert hilbert_distance([1.0, 2.0], [2.0, 1.0]) == pytest.approx(math.log(4.0))

    def test_scale_invariant(self):
        """Test positive multiples are at distance zero."""
        assert hilbert_distance([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(0.0)

    def test_support_mismatch(self):
        """Test different supports are infinitely far apart."""
        assert hilbert_distance([1.0, 0.0], [1.0, 1.0]) == math.inf

    def test_zero_vector(self):
        """Test the zero vector is rejected."""
        with pytest.raises(ZeroVectorError):
            hilbert_distance([0.0, 0.0], [1.0, 1.0])

    def test_negative_entries(self):
        """Test negative entries are rejected."""
        with pytest.raises(InputError):
            hilbert_distance([-1.0, 1.0], [1.0, 1.0])


class TestMatrixDiameter:
    """Test matrix_diameter and contraction_coefficient."""

    def test_infinite_diameter(self):
        """Test columns with different supports give infinite diameter."""
        matrix = np.array([[1.0, 1.0], [1.0, 0.0]])
        assert matrix_diameter(matrix) == math.inf
        with pytest.raises(InfiniteDiameterError):
            contraction_coefficient(matrix)

    def test_positive_matrix(self):
        """Test [[2,1],[1,1]] has diameter log 2."""
        matrix = np.array([[2.0, 1.0], [1.0, 1.0]])
        assert matrix_diameter(matrix) == pytest.approx(math.log(2.0))
        assert contraction_coefficient(matrix) == pytest.approx(math.tanh(math.log(2.0) / 4.0))

    def test_zero_columns_ignored(self):
        """Test a single nonzero column has diameter zero."""
        assert matrix_diameter(np.array([[0.0, 1.0], [0.0, 2.0]])) == 0.0

    def test_zero_matrix(self):
        """Test the zero matrix is rejected."""
        with pytest.raises(AllZeroError):
            matrix_diameter(np.zeros((2, 2)))

    @pytest.mark.parametrize("seed", range(10))
    def test_birkhoff_contraction(self, seed):
        """Test one application contracts distances by the coefficient."""
        rng = np.random.default_rng(seed)
        matrix = rng.uniform(0.1, 1.0, size=(4, 4))
        u, v = rng.uniform(0.1, 1.0, size=4), rng.uniform(0.1, 1.0, size=4)
        coeff = contraction_coefficient(matrix)
        assert hilbert_distance(matrix @ u, matrix @ v) <= coeff * hilbert_distance(u, v) + 1e-12

    def test_projective_contraction_decreases(self):
        """Test iterated distances never grow."""
        matrix = np.array([[2.0, 1.0], [1.0, 1.0]])
        distances = projective_contraction(matrix, [1.0, 5.0], [4.0, 1.0], 10)
        assert len(distances) == 11
        assert all(later <= earlier + 1e-12 for earlier, later in zip(distances, distances[1:]))
        assert distances[-1] < 1e-3


class TestLemmaBounds:
    """Test lemma_bounds on the fixture systems."""

    def test_golden_collapse(self):
        """Test the golden-mean block product has diameter log(4/3)."""
        diagnostics = block_diagnostics(make_golden_collapse())
        assert diagnostics.block_length == 3
        assert diagnostics.empirical_diameter == pytest.approx(math.log(4.0 / 3.0))
        assert diagnostics.a_bound == pytest.approx(math.e * 8.0)
        assert diagnostics.t == pytest.approx(0.5 / (8.0 * math.e * 1.5))
        assert diagnostics.k_bound == pytest.approx(2.0 * math.log(1.0 / diagnostics.t))

    @pytest.mark.parametrize("factory", [make_phase, make_pairing])
    def test_single_direction_products(self, factory):
        """Test windowed products with one column direction have diameter zero."""
        diagnostics = block_diagnostics(factory())
        assert diagnostics.empirical_diameter == 0.0
        assert diagnostics.contraction_coeff == 0.0

    def test_t_is_small_and_positive(self, any_system):
        """Test the contraction constant lies in (0, 1)."""
        diagnostics = block_diagnostics(any_system)
        assert 0.0 < diagnostics.t < 1.0
        assert diagnostics.k_bound > 0.0
