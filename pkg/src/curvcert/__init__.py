"""curvcert: provable Lipschitz and curvature bounds for residual networks,
with closed-form robustness and attack certificates, validated against
built-in brute-force oracles."""

from .activations import (
    ActivationSpec,
    AnchoredTable,
    anchored_lipschitz,
    build_anchored_table,
    builtin,
)
from .certify import (
    Certificate,
    GapStatistics,
    attack_certificate,
    certification_gap,
    certify_first,
    certify_sample,
    certify_zeroth,
    first_order_radius,
    prop2_condition,
)
from .curvature import (
    CurvatureReport,
    anchored_compositional_curvature,
    anchored_layer_curvature,
    compositional_curvature,
    layer_curvature_naive,
    layer_curvature_sdp,
    layer_curvature_vectorized,
    one_lipschitz_stack_curvature,
)
from .linalg import (
    Norm,
    argmax_dual,
    dual_vector_norm,
    norm_p_to_inf,
    operator_norm,
    vector_norm,
)
from .lipschitz import (
    LipschitzSchedule,
    anchored_layer_lipschitz,
    anchored_schedule,
    layer_lipschitz_lt,
    layer_lipschitz_naive,
    lipschitz_schedule,
    liplt_schedule,
)
from .model import (
    LogitPairReduction,
    ResidualBlock,
    SequentialNetwork,
    compose_scalar_head,
    forward,
    forward_batch,
    jacobian,
    jacobian_batch,
    logit_gap_and_gradient,
    vectorized_jacobian_factors,
)
from .modelio import (
    ModelFormatError,
    generate_fixture,
    load_data,
    load_model,
    save_data,
    save_model,
)
from .oracle import (
    SamplingPlan,
    exact_hessian_norm_tiny,
    finite_difference_jacobian,
    grid_adversarial_search,
    sampled_anchored_jacobian_lipschitz,
    sampled_anchored_lipschitz,
    sampled_jacobian_lipschitz_lower_bound,
    sampled_lipschitz_lower_bound,
    sampled_network_lipschitz,
)

__version__ = "0.1.0"
