"""The verification machinery itself: finite differences, sampling, grid search."""

import math

import numpy as np
import pytest

from curvcert import (
    Norm,
    ResidualBlock,
    SamplingPlan,
    SequentialNetwork,
    builtin,
    liplt_schedule,
    operator_norm,
)
from curvcert.model import LogitPairReduction, logit_gap_and_gradient
from curvcert.modelio import generate_fixture
from curvcert.oracle import (
    exact_hessian_norm_tiny,
    finite_difference_jacobian,
    grid_adversarial_search,
    sample_pairs,
    sampled_jacobian_lipschitz_lower_bound,
    sampled_lipschitz_lower_bound,
    sampled_network_lipschitz,
)


class TestFiniteDifferences:
    def test_linear_net_exact(self):
        rng = np.random.default_rng(80)
        W = rng.standard_normal((3, 4))
        net = SequentialNetwork(blocks=(ResidualBlock(weight=W),))
        J = finite_difference_jacobian(net, rng.standard_normal(4), h=1e-5)
        assert np.max(np.abs(J - W)) < 1e-9

    def test_tanh_net_close_to_analytic(self):
        net = generate_fixture([3, 6, 2], seed=1, activation="tanh", bias_scale=0.2)
        rng = np.random.default_rng(81)
        x = rng.standard_normal(3)
        from curvcert import jacobian
        assert np.max(np.abs(finite_difference_jacobian(net, x, 1e-5)
                             - jacobian(net, x))) < 1e-5

    def test_step_sweep_error_minimum_at_intermediate_h(self):
        net = generate_fixture([3, 6, 2], seed=2, activation="sigmoid")
        rng = np.random.default_rng(82)
        x = rng.standard_normal(3)
        from curvcert import jacobian
        J = jacobian(net, x)
        errors = {h: np.max(np.abs(finite_difference_jacobian(net, x, h) - J))
                  for h in (1e-3, 1e-5, 1e-7)}
        assert errors[1e-5] < errors[1e-3]
        assert errors[1e-5] < errors[1e-7]

    def test_rejects_bad_step(self):
        net = generate_fixture([2, 2], seed=0)
        with pytest.raises(ValueError, match="positive"):
            finite_difference_jacobian(net, np.zeros(2), h=0.0)


class TestSampledLipschitz:
    def test_scalar_tanh_approaches_one(self):
        net = SequentialNetwork(blocks=(
            ResidualBlock(weight=np.eye(1), activation=builtin("tanh")),))
        plan = SamplingPlan(seed=0, n_pairs=100_000, low=-2.0, high=2.0)
        val = sampled_network_lipschitz(net, plan)
        assert 0.999 < val <= 1.0

    def test_affine_map_close_to_operator_norm(self):
        rng = np.random.default_rng(83)
        W = rng.standard_normal((5, 5))
        net = SequentialNetwork(blocks=(ResidualBlock(weight=W),))
        plan = SamplingPlan(seed=1, n_pairs=100_000)
        val = sampled_network_lipschitz(net, plan)
        exact = operator_norm(W, Norm(2))
        assert val <= exact
        assert val >= 0.98 * exact

    def test_every_net_below_liplt_bound(self):
        for seed in range(4):
            net = generate_fixture([3, 5, 5, 2], seed=seed, activation="elu")
            plan = SamplingPlan(seed=seed, n_pairs=10_000)
            assert sampled_network_lipschitz(net, plan) <= liplt_schedule(net, Norm(2)).total

    def test_generic_callable_interface(self):
        plan = SamplingPlan(seed=2, n_pairs=1000)
        val = sampled_lipschitz_lower_bound(lambda X: 3.0 * X, plan, dim=2)
        assert val == pytest.approx(3.0, rel=1e-9)


class TestSampledJacobianLipschitz:
    def test_affine_net_is_zero(self):
        rng = np.random.default_rng(84)
        net = SequentialNetwork(blocks=(
            ResidualBlock(weight=rng.standard_normal((4, 4))),))
        plan = SamplingPlan(seed=3, n_pairs=5000)
        assert sampled_jacobian_lipschitz_lower_bound(net, plan) == 0.0

    def test_single_tanh_block_approaches_deriv_lipschitz(self):
        net = SequentialNetwork(blocks=(
            ResidualBlock(weight=np.eye(1), activation=builtin("tanh")),))
        # extremum of the phi'' quotient sits at +-arctanh(1/sqrt(3))
        plan = SamplingPlan(seed=4, n_pairs=100_000, low=-1.5, high=1.5)
        val = sampled_jacobian_lipschitz_lower_bound(net, plan)
        target = 4.0 / (3.0 * math.sqrt(3.0))
        assert 0.995 * target <= val <= target

    def test_determinism_bit_identical(self):
        net = generate_fixture([3, 6, 2], seed=5, activation="softplus")
        plan = SamplingPlan(seed=6, n_pairs=5000)
        a = sampled_jacobian_lipschitz_lower_bound(net, plan)
        b = sampled_jacobian_lipschitz_lower_bound(net, plan)
        assert a == b
        X1, Y1 = sample_pairs(plan, 3)
        X2, Y2 = sample_pairs(plan, 3)
        assert np.array_equal(X1, X2) and np.array_equal(Y1, Y2)


class TestGridSearch:
    def test_dimension_cap(self):
        net = generate_fixture([4, 4, 2], seed=0)
        with pytest.raises(ValueError, match="3 input dimensions"):
            grid_adversarial_search(net, np.zeros(4), 0, Norm(2), 0.5)

    def test_linear_classifier_matches_point_to_hyperplane_distance(self):
        W = np.array([[1.0, 0.0], [0.0, 1.0]])
        net = SequentialNetwork(blocks=(ResidualBlock(weight=W),))
        x = np.array([0.8, 0.1])            # class 0, boundary x0 = x1
        pair = LogitPairReduction(1, 0)
        gap, grad = logit_gap_and_gradient(net, x, pair)
        analytic = abs(gap) / np.linalg.norm(grad)
        hit = grid_adversarial_search(net, x, 0, Norm(2),
                                      radius=1.5 * analytic, resolution=1e-3)
        assert hit is not None
        _, dist = hit
        cell = 1.5 * analytic * 1e-3 * math.sqrt(2.0)
        assert abs(dist - analytic) <= cell

    def test_no_hit_below_certified_radius(self):
        from curvcert import certify_sample
        net = generate_fixture([2, 6, 2], seed=7, activation="tanh",
                               target_norm=1.1, bias_scale=0.3)
        rng = np.random.default_rng(85)
        x = rng.uniform(-1, 1, 2)
        label = int(np.argmax(net(x)))
        cert = certify_sample(net, x, label, Norm(2))
        if cert.correct and cert.radius:
            assert grid_adversarial_search(net, x, label, Norm(2),
                                           radius=0.999 * cert.radius,
                                           resolution=2e-3) is None


class TestHessianOracle:
    def test_affine_scalar_net_zero(self):
        rng = np.random.default_rng(86)
        net = SequentialNetwork(blocks=(
            ResidualBlock(weight=rng.standard_normal((1, 4))),))
        assert exact_hessian_norm_tiny(net, rng.standard_normal(4)) < 1e-10

    def test_requires_scalar_output(self):
        net = generate_fixture([3, 4, 2], seed=0)
        with pytest.raises(ValueError, match="scalar"):
            exact_hessian_norm_tiny(net, np.zeros(3))

    def test_elu_unsupported(self):
        net = generate_fixture([3, 4, 1], seed=0, activation="elu")
        with pytest.raises(ValueError, match="second derivative"):
            exact_hessian_norm_tiny(net, np.zeros(3))

    def test_input_dim_cap(self):
        net = generate_fixture([9, 4, 1], seed=0)
        with pytest.raises(ValueError, match="dim"):
            exact_hessian_norm_tiny(net, np.zeros(9))
