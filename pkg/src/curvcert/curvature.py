"""Jacobian-Lipschitz (curvature) bounds, per layer and composed.

Layer methods, all valid upper bounds on the Lipschitz constant of
x -> Dh(x):
  naive       L_phi' ||mix||_{p*} ||weight||_{p*} ||weight||_{p->inf}
  vectorized  L_phi' ||A||_2 ||weight||_2 with A from the flattened Jacobian
              (p = 2 only; never worse than naive)
  sdp         L_phi' ||T weight||_2 with T_ii = ||weight_i||_2, the analytic
              feasible point of the semidefinite relaxation (p = 2, plain
              feedforward blocks only; never worse than vectorized)
The compositional recursion combines layer curvature bounds with cumulative
Lipschitz schedules in both the primal and dual norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .linalg import SPECTRAL_SAFETY, Norm, operator_norm, norm_p_to_inf, spectral_norm_exact
from .lipschitz import LipschitzSchedule, anchored_schedule, lipschitz_schedule
from .model import ResidualBlock, SequentialNetwork, forward, vectorized_jacobian_factors

LAYER_METHODS = ("naive", "vectorized", "sdp")


@dataclass(frozen=True)
class CurvatureReport:
    norm: Norm
    layer_method: str
    per_layer: tuple[float, ...]           # Jacobian-Lipschitz bound per block
    cumulative: tuple[float, ...]          # length K+1, cumulative[0] == 0
    schedule: LipschitzSchedule            # primal-norm Lipschitz schedule used
    schedule_dual: LipschitzSchedule       # dual-norm schedule used
    anchored: bool = False
    anchor: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.cumulative[0] != 0.0:
            raise ValueError("curvature of the empty composition must be 0")
        if len(self.cumulative) != len(self.per_layer) + 1:
            raise ValueError("cumulative must have one more entry than per_layer")

    @property
    def total(self) -> float:
        return self.cumulative[-1]


def _opnorm(a, norm: Norm) -> float:
    # exact for p in {1, inf}; unpadded spectral factor for p = 2 (the single
    # safety pad is applied once per layer bound so orderings stay exact)
    if norm.p == 2.0:
        return spectral_norm_exact(a)
    return operator_norm(a, norm)


def _pad(value: float, norm: Norm) -> float:
    return value * SPECTRAL_SAFETY if norm.p == 2.0 else value


def layer_curvature_naive(block: ResidualBlock, norm: Norm) -> float:
    """L_phi' ||mix||_{p*} ||weight||_{p*} ||weight||_{p->inf}; 0 for affine blocks."""
    if block.is_affine:
        return 0.0
    dual = norm.dual
    mix_norm = 1.0 if block.mix is None else _opnorm(block.mix, dual)
    return _pad(block.activation.deriv_lipschitz * mix_norm
                * _opnorm(block.weight, dual) * norm_p_to_inf(block.weight, norm),
                dual)


def layer_curvature_vectorized(block: ResidualBlock, norm: Norm = Norm(2)) -> float:
    """L_phi' ||A||_2 ||weight||_2 from the vectorized Jacobian (p = 2 only)."""
    if norm.p != 2.0:
        raise ValueError("the vectorized bound is only available for p = 2")
    _, A = vectorized_jacobian_factors(block)
    return block.activation.deriv_lipschitz * spectral_norm_exact(A) \
        * spectral_norm_exact(block.weight) * SPECTRAL_SAFETY


def _require_plain(block: ResidualBlock, what: str) -> None:
    if block.is_affine:
        raise ValueError(f"the {what} bound needs an activation block")
    if not block.is_plain:
        raise ValueError(f"the {what} bound only applies to plain feedforward "
                         "blocks (zero skip, identity mix)")


def layer_curvature_sdp(block: ResidualBlock, norm: Norm = Norm(2)) -> float:
    """L_phi' ||T weight||_2 with T_ii = ||weight_i||_2 (plain blocks, p = 2)."""
    if norm.p != 2.0:
        raise ValueError("the sdp bound is only available for p = 2")
    _require_plain(block, "sdp")
    row_norms = np.sqrt((block.weight * block.weight).sum(axis=1))
    return block.activation.deriv_lipschitz \
        * spectral_norm_exact(row_norms[:, None] * block.weight) * SPECTRAL_SAFETY


def anchored_layer_curvature(block: ResidualBlock, z) -> float:
    """Anchored sdp-style bound ||D T weight||_2 with per-neuron constants.

    D_ii is the anchored Lipschitz constant of phi' at the pre-activation
    z_i = (weight @ x + bias)_i of the anchor, and T_ii = ||weight_i||_2.
    """
    _require_plain(block, "anchored curvature")
    z = np.asarray(z, dtype=float)
    if z.shape != (block.hidden_dim,):
        raise ValueError(f"anchor pre-activation must have shape ({block.hidden_dim},)")
    d = block.activation.anchored("dphi", z)
    row_norms = np.sqrt((block.weight * block.weight).sum(axis=1))
    return spectral_norm_exact((d * row_norms)[:, None] * block.weight) * SPECTRAL_SAFETY


def _layer_bound(block: ResidualBlock, norm: Norm, layer_method: str) -> float:
    if block.is_affine:
        return 0.0
    if layer_method == "naive":
        return layer_curvature_naive(block, norm)
    if layer_method == "vectorized":
        return layer_curvature_vectorized(block, norm)
    if layer_method == "sdp":
        return layer_curvature_sdp(block, norm)
    raise ValueError(f"unknown layer method {layer_method!r}; use one of {LAYER_METHODS}")


def compositional_curvature(net: SequentialNetwork, norm: Norm,
                            layer_method: str = "naive",
                            schedules: Optional[tuple[LipschitzSchedule, LipschitzSchedule]] = None,
                            ) -> CurvatureReport:
    """Curvature bound for every prefix via the layer-by-layer recursion.

    Update per layer k (with D_0 = 0, L_0 = 1 in both norms):
        D_{k+1} = C_k * L^p_k * L^{p*}_k + Lh^{p*}_k * D_k
    where C_k is the layer Jacobian-Lipschitz bound and Lh^{p*}_k the layer
    Lipschitz constant in the dual norm.
    """
    if schedules is None:
        schedules = (lipschitz_schedule(net, norm, "liplt"),
                     lipschitz_schedule(net, norm.dual, "liplt"))
    sched_p, sched_dual = schedules
    if sched_p.norm != norm or sched_dual.norm != norm.dual:
        raise ValueError("schedules must be for the requested norm and its dual")
    if len(sched_p.per_layer) != net.depth or len(sched_dual.per_layer) != net.depth:
        raise ValueError("schedules were computed for a different network depth")

    per_layer = []
    cumulative = [0.0]
    for k, block in enumerate(net.blocks):
        layer_curv = _layer_bound(block, norm, layer_method)
        per_layer.append(layer_curv)
        cumulative.append(layer_curv * sched_p.cumulative[k] * sched_dual.cumulative[k]
                          + sched_dual.per_layer[k] * cumulative[k])
    return CurvatureReport(norm=norm, layer_method=layer_method,
                           per_layer=tuple(per_layer), cumulative=tuple(cumulative),
                           schedule=sched_p, schedule_dual=sched_dual)


def anchored_compositional_curvature(net: SequentialNetwork, norm: Norm, x0,
                                     layer_method: str = "naive") -> CurvatureReport:
    """Anchored curvature bound along the forward trace of the anchor.

    Per layer (prefix g_k = x^0 -> x^k, next layer f = h^k):
        A_{k+1} = Lh^{p*}_k * A_k + ||Dg_k(x0)||_{p*} * C_k(x^k) * S^p_k
    with the prefix Jacobian norm computed exactly, C_k the anchored layer
    curvature (global fallback for residual blocks or p != 2), and S^p_k the
    anchored prefix Lipschitz bound clamped by the global schedule so the
    anchored result never exceeds the global one.
    """
    x0 = np.asarray(x0, dtype=float)
    trace = forward(net, x0)
    glob_p = lipschitz_schedule(net, norm, "liplt")
    glob_dual = lipschitz_schedule(net, norm.dual, "liplt")
    anch_p = anchored_schedule(net, norm, x0)

    per_layer = []
    cumulative = [0.0]
    J = np.eye(net.input_dim)
    for k, block in enumerate(net.blocks):
        if block.is_affine:
            layer_curv = 0.0
        elif norm.p == 2.0 and block.is_plain:
            layer_curv = anchored_layer_curvature(block, block.pre_activation(trace[k]))
        else:
            # no anchored form for residual blocks or p != 2; global is valid
            layer_curv = layer_curvature_naive(block, norm)
        per_layer.append(layer_curv)
        prefix_lip = min(anch_p.cumulative[k], glob_p.cumulative[k])
        prefix_jac = operator_norm(J, norm.dual) if k else 1.0
        cumulative.append(glob_dual.per_layer[k] * cumulative[k]
                          + prefix_jac * layer_curv * prefix_lip)
        J = block.jacobian_at(trace[k]) @ J
    return CurvatureReport(norm=norm, layer_method=layer_method,
                           per_layer=tuple(per_layer), cumulative=tuple(cumulative),
                           schedule=anch_p, schedule_dual=glob_dual,
                           anchored=True, anchor=x0)


def one_lipschitz_stack_curvature(layer_bounds: Iterable[float]) -> float:
    """Curvature of a stack of 1-Lipschitz layers: the plain sum of layer bounds."""
    return float(sum(layer_bounds))
