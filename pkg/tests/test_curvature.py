"""Layer Jacobian-Lipschitz bounds and the compositional curvature recursion."""

import math

import numpy as np
import pytest

from curvcert import (
    Norm,
    ResidualBlock,
    SamplingPlan,
    SequentialNetwork,
    anchored_compositional_curvature,
    anchored_layer_curvature,
    builtin,
    compose_scalar_head,
    compositional_curvature,
    layer_curvature_naive,
    layer_curvature_sdp,
    layer_curvature_vectorized,
    lipschitz_schedule,
    one_lipschitz_stack_curvature,
    operator_norm,
)
from curvcert.model import LogitPairReduction
from curvcert.oracle import (
    exact_hessian_norm_tiny,
    sampled_anchored_jacobian_lipschitz,
    sampled_jacobian_lipschitz_lower_bound,
)

from conftest import ALL_NORMS, seeded_family

TANH_DPHI_LIPSCHITZ = 4.0 / (3.0 * math.sqrt(3.0))


def _plain(weight, name="tanh"):
    return ResidualBlock(weight=np.asarray(weight, dtype=float),
                         activation=builtin(name))


def _residual(rng, n_in, n_hidden, n_out, name="tanh"):
    return ResidualBlock(
        weight=rng.standard_normal((n_hidden, n_in)),
        skip=rng.standard_normal((n_out, n_in)) * 0.5,
        mix=rng.standard_normal((n_out, n_hidden)),
        activation=builtin(name),
    )


class TestLayerNaive:
    def test_affine_block_is_zero(self):
        assert layer_curvature_naive(ResidualBlock(weight=np.eye(3)), Norm(2)) == 0.0

    def test_identity_tanh_block(self):
        val = layer_curvature_naive(_plain(np.eye(2)), Norm(2))
        assert val == pytest.approx(TANH_DPHI_LIPSCHITZ, rel=1e-8)
        assert val == pytest.approx(0.769800, abs=1e-5)

    @pytest.mark.parametrize("norm", ALL_NORMS, ids=str)
    def test_dominates_sampled_jacobian_quotient(self, norm):
        rng = np.random.default_rng(51)
        block = _residual(rng, 4, 5, 3)
        net = SequentialNetwork(blocks=(block,))
        plan = SamplingPlan(seed=0, n_pairs=10_000, norm=norm)
        sampled = sampled_jacobian_lipschitz_lower_bound(net, plan)
        assert layer_curvature_naive(block, norm) >= sampled


class TestLayerVectorized:
    def test_rejects_non_two_norm(self):
        with pytest.raises(ValueError, match="p = 2"):
            layer_curvature_vectorized(_plain(np.eye(2)), Norm(1))

    def test_identity_selector_equals_naive(self):
        block = _plain(np.eye(2))
        vec = layer_curvature_vectorized(block)
        assert vec == pytest.approx(TANH_DPHI_LIPSCHITZ, rel=1e-8)
        assert vec == pytest.approx(layer_curvature_naive(block, Norm(2)), rel=1e-8)

    def test_below_naive_on_random_residual_block(self):
        rng = np.random.default_rng(52)
        block = _residual(rng, 6, 3, 4)
        assert layer_curvature_vectorized(block) \
            <= layer_curvature_naive(block, Norm(2)) * (1 + 1e-9)

    def test_weight_scaling_revalidated_by_sampling(self):
        rng = np.random.default_rng(53)
        W = rng.standard_normal((4, 3))
        for scale in (1.0, 2.0):
            block = _plain(scale * W)
            net = SequentialNetwork(blocks=(block,))
            plan = SamplingPlan(seed=5, n_pairs=10_000)
            assert layer_curvature_vectorized(block) \
                >= sampled_jacobian_lipschitz_lower_bound(net, plan)

    def test_dominates_frobenius_jacobian_quotients(self):
        # the vectorized route bounds the vec-2-norm, i.e. the Frobenius norm
        from curvcert import jacobian_batch
        from curvcert.oracle import sample_pairs
        rng = np.random.default_rng(63)
        block = _plain(rng.standard_normal((5, 3)))
        net = SequentialNetwork(blocks=(block,))
        plan = SamplingPlan(seed=12, n_pairs=10_000)
        X, Y = sample_pairs(plan, 3)
        diff = jacobian_batch(net, X) - jacobian_batch(net, Y)
        frob = np.sqrt((diff * diff).sum(axis=(1, 2)))
        den = np.sqrt(((X - Y) ** 2).sum(axis=1))
        assert layer_curvature_vectorized(block) >= np.max(frob / den)


class TestLayerSdp:
    def test_rejects_residual_block(self):
        rng = np.random.default_rng(54)
        with pytest.raises(ValueError, match="plain"):
            layer_curvature_sdp(_residual(rng, 3, 3, 3))

    def test_identity_weight(self):
        assert layer_curvature_sdp(_plain(np.eye(3))) \
            == pytest.approx(TANH_DPHI_LIPSCHITZ, rel=1e-8)

    def test_row_norm_diagonal(self):
        W = np.array([[1.0, 0.0], [3.0, 4.0]])
        expected = TANH_DPHI_LIPSCHITZ * operator_norm(np.diag([1.0, 5.0]) @ W, Norm(2))
        assert layer_curvature_sdp(_plain(W)) == pytest.approx(expected, rel=1e-9)

    def test_ordering_chain_sdp_vectorized_naive(self):
        rng = np.random.default_rng(55)
        for _ in range(10):
            W = rng.standard_normal((rng.integers(2, 8), rng.integers(2, 8)))
            block = _plain(W, name=("tanh", "sigmoid", "softplus", "elu")[rng.integers(4)])
            sdp = layer_curvature_sdp(block)
            vec = layer_curvature_vectorized(block)
            naive = layer_curvature_naive(block, Norm(2))
            assert sdp <= vec * (1 + 1e-12) + 1e-12
            assert vec <= naive * (1 + 1e-12) + 1e-12


class TestAnchoredLayer:
    def test_zero_anchor_below_global_sdp(self):
        # the anchored constant of phi' at 0 is strictly below L_phi' for tanh
        # (the extremal chord of phi' anchors at +-arctanh(1/sqrt(3)), not 0)
        block = _plain(np.eye(3))
        anchored = anchored_layer_curvature(block, np.zeros(3))
        assert anchored <= layer_curvature_sdp(block) * (1 + 1e-9)
        assert anchored < 0.9 * layer_curvature_sdp(block)

    def test_peak_anchor_attains_global_sdp(self):
        block = _plain(np.eye(3))
        z = np.full(3, math.atanh(1.0 / math.sqrt(3.0)))
        assert anchored_layer_curvature(block, z) \
            == pytest.approx(layer_curvature_sdp(block), rel=1e-6)

    def test_saturated_anchor_strictly_smaller_and_valid(self):
        rng = np.random.default_rng(56)
        W = rng.standard_normal((4, 4))
        block = _plain(W)
        net = SequentialNetwork(blocks=(block,))
        x = rng.standard_normal(4) + 5.0
        z = block.pre_activation(x)
        anchored = anchored_layer_curvature(block, z)
        assert anchored < layer_curvature_sdp(block)
        plan = SamplingPlan(seed=6, n_pairs=10_000)
        assert anchored >= sampled_anchored_jacobian_lipschitz(net, x, plan)

    def test_identity_weight_uses_anchored_dphi(self):
        block = _plain(np.eye(2))
        z = np.full(2, 2.0)
        spec = builtin("tanh")
        expected = operator_norm(np.diag(spec.anchored("dphi", z)) @ np.eye(2), Norm(2))
        assert anchored_layer_curvature(block, z) == pytest.approx(expected, rel=1e-9)

    def test_rejects_residual(self):
        rng = np.random.default_rng(57)
        with pytest.raises(ValueError, match="plain"):
            anchored_layer_curvature(_residual(rng, 3, 3, 3), np.zeros(3))


class TestCompositional:
    def test_one_block_recursion_base(self):
        block = _plain(np.eye(2))
        net = SequentialNetwork(blocks=(block,))
        rep = compositional_curvature(net, Norm(2))
        assert rep.cumulative[0] == 0.0
        assert rep.total == pytest.approx(layer_curvature_naive(block, Norm(2)), rel=1e-9)

    def test_purely_affine_net_is_zero(self):
        rng = np.random.default_rng(58)
        net = SequentialNetwork(blocks=tuple(
            ResidualBlock(weight=rng.standard_normal((3, 3))) for _ in range(3)))
        assert compositional_curvature(net, Norm(2)).total == 0.0

    def test_two_identity_tanh_blocks_hand_unrolled(self):
        net = SequentialNetwork(blocks=(_plain(np.eye(2)), _plain(np.eye(2))))
        rep = compositional_curvature(net, Norm(2), layer_method="naive")
        # hand unroll: D_1 = L_phi'; D_2 = L_phi' * 1 * 1 + 1 * L_phi'
        assert rep.total == pytest.approx(2.0 * TANH_DPHI_LIPSCHITZ, rel=1e-6)
        assert rep.total == pytest.approx(1.539601, abs=1e-5)
        plan = SamplingPlan(seed=8, n_pairs=10_000)
        assert rep.total >= sampled_jacobian_lipschitz_lower_bound(net, plan)

    def test_schedule_mismatch_rejected(self):
        net = SequentialNetwork(blocks=(_plain(np.eye(2)),))
        other = SequentialNetwork(blocks=(_plain(np.eye(3)), _plain(np.eye(3))))
        scheds = (lipschitz_schedule(other, Norm(2), "liplt"),
                  lipschitz_schedule(other, Norm(2), "liplt"))
        with pytest.raises(ValueError, match="depth"):
            compositional_curvature(net, Norm(2), schedules=scheds)

    @pytest.mark.parametrize("norm", ALL_NORMS, ids=str)
    def test_dominates_sampled_quotients_on_family(self, norm):
        for net in seeded_family(8):
            rep = compositional_curvature(net, norm, layer_method="naive")
            plan = SamplingPlan(seed=9, n_pairs=10_000, norm=norm)
            assert rep.total >= sampled_jacobian_lipschitz_lower_bound(net, plan)

    def test_monotone_growth_for_expansive_layers(self):
        # the recursion is nondecreasing whenever layer Lipschitz constants >= 1
        for net in seeded_family(12):
            dual = lipschitz_schedule(net, Norm(2).dual, "liplt")
            if any(L < 1.0 for L in dual.per_layer):
                continue
            rep = compositional_curvature(net, Norm(2))
            diffs = np.diff(rep.cumulative)
            assert np.all(diffs >= -1e-12)

    def test_scalar_head_consistency(self):
        for net in seeded_family(6):
            if net.output_dim < 2:
                continue
            pair = LogitPairReduction(1, 0)
            head = compose_scalar_head(net, pair)
            net_bound = compositional_curvature(net, Norm(2)).total
            head_bound = compositional_curvature(head, Norm(2)).total
            assert head_bound <= math.sqrt(2.0) * net_bound * (1 + 1e-9)


class TestAnchoredCompositional:
    def test_one_block_reduces_to_anchored_layer(self):
        block = _plain(np.eye(3))
        net = SequentialNetwork(blocks=(block,))
        x0 = np.array([0.5, -1.0, 2.0])
        rep = anchored_compositional_curvature(net, Norm(2), x0)
        assert rep.total == pytest.approx(
            anchored_layer_curvature(block, block.pre_activation(x0)), rel=1e-9)

    def test_anchored_below_global_everywhere(self):
        rng = np.random.default_rng(59)
        for net in seeded_family(8):
            x0 = rng.uniform(-2, 2, net.input_dim)
            anch = anchored_compositional_curvature(net, Norm(2), x0)
            glob = compositional_curvature(net, Norm(2), layer_method="naive")
            for a, g in zip(anch.cumulative, glob.cumulative):
                assert a <= g * (1 + 1e-9) + 1e-15

    def test_saturated_anchor_strictly_smaller_and_valid(self):
        net = SequentialNetwork(blocks=(_plain(np.eye(3)), _plain(np.eye(3))))
        x0 = np.full(3, 4.0)
        anch = anchored_compositional_curvature(net, Norm(2), x0)
        glob = compositional_curvature(net, Norm(2))
        assert anch.total < 0.75 * glob.total
        plan = SamplingPlan(seed=10, n_pairs=10_000)
        assert anch.total >= sampled_anchored_jacobian_lipschitz(net, x0, plan)

    def test_non_two_norm_falls_back_to_global_layer_bounds(self):
        net = SequentialNetwork(blocks=(_plain(np.eye(3)),))
        x0 = np.zeros(3)
        for norm in (Norm(1), Norm(math.inf)):
            anch = anchored_compositional_curvature(net, norm, x0)
            glob = compositional_curvature(net, norm)
            assert anch.total <= glob.total * (1 + 1e-9)


class TestOneLipschitzStack:
    def test_examples(self):
        assert one_lipschitz_stack_curvature([0.5, 0.25]) == 0.75
        assert one_lipschitz_stack_curvature([]) == 0.0

    def test_matches_recursion_when_all_constants_are_one(self):
        # orthogonal weights at unit norm give LT layer constants exactly 1
        rng = np.random.default_rng(60)
        blocks = []
        for _ in range(3):
            Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
            blocks.append(_plain(Q))
        net = SequentialNetwork(blocks=tuple(blocks))
        layer_bounds = [layer_curvature_naive(b, Norm(2)) for b in blocks]
        stack = one_lipschitz_stack_curvature(layer_bounds)
        rep = compositional_curvature(net, Norm(2), layer_method="naive")
        assert rep.total == pytest.approx(stack, rel=1e-6)


class TestHessianDominance:
    def test_fd_hessian_below_curvature_bound(self):
        rng = np.random.default_rng(61)
        for name in ("tanh", "sigmoid"):
            net = SequentialNetwork(blocks=(
                ResidualBlock(weight=rng.standard_normal((6, 4)) * 0.8,
                              activation=builtin(name)),
                ResidualBlock(weight=rng.standard_normal((1, 6)) * 0.8),
            ))
            bound = compositional_curvature(net, Norm(2)).total
            for _ in range(50):
                x = rng.uniform(-2, 2, 4)
                assert exact_hessian_norm_tiny(net, x) <= bound

    def test_single_neuron_closed_form(self):
        w = np.array([[0.7, -1.1, 0.4]])
        net = SequentialNetwork(blocks=(
            ResidualBlock(weight=w, activation=builtin("tanh")),))
        rng = np.random.default_rng(62)
        for _ in range(20):
            x = rng.uniform(-2, 2, 3)
            z = float(w[0] @ x)
            analytic = abs(-2.0 * math.tanh(z) * (1 - math.tanh(z) ** 2)) \
                * float(np.linalg.norm(w) ** 2)
            assert exact_hessian_norm_tiny(net, x) == pytest.approx(analytic, rel=1e-4, abs=1e-8)
