"""Layer and cumulative Lipschitz upper bounds.

Three global methods: "naive" (norm product per layer), "lt" (loop-transformed
single-layer bound, provably <= naive), and "liplt" (the recursion over the
unrolled loop-transformed dynamics, provably <= the product of naive layer
bounds).  Anchored variants fix the input and use per-neuron anchored
activation constants at the forward-trace pre-activations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import Norm, operator_norm
from .model import ResidualBlock, SequentialNetwork, forward

METHODS = ("naive", "lt", "liplt")


@dataclass(frozen=True)
class LipschitzSchedule:
    """Per-layer and cumulative constants for x^0 -> x^k, k = 0..K."""

    norm: Norm
    method: str
    per_layer: tuple[float, ...]
    cumulative: tuple[float, ...]          # length K+1, cumulative[0] == 1
    anchored: bool = False
    anchor: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.cumulative) != len(self.per_layer) + 1:
            raise ValueError("cumulative must have one more entry than per_layer")
        if self.cumulative[0] != 1.0:
            raise ValueError("empty composition must have constant 1")

    @property
    def total(self) -> float:
        return self.cumulative[-1]


def _mix_norm(block: ResidualBlock, norm: Norm) -> float:
    return 1.0 if block.mix is None else operator_norm(block.mix, norm)


def _skip_norm(block: ResidualBlock, norm: Norm) -> float:
    return 0.0 if block.skip is None else operator_norm(block.skip, norm)


def _hat_matrix(block: ResidualBlock) -> np.ndarray:
    """Loop-transformed linear part: skip + ((alpha+beta)/2) mix @ weight."""
    if block.is_affine:
        return block.linear_map
    c = 0.5 * (block.activation.alpha + block.activation.beta)
    M = block.weight if block.mix is None else block.mix @ block.weight
    M = c * M
    if block.skip is not None:
        M = M + block.skip
    return M


def _half_width(block: ResidualBlock) -> float:
    if block.is_affine:
        return 0.0
    return 0.5 * (block.activation.beta - block.activation.alpha)


def layer_lipschitz_naive(block: ResidualBlock, norm: Norm) -> float:
    """||skip||_p + beta ||mix||_p ||weight||_p; affine blocks use their exact map."""
    if block.is_affine:
        return operator_norm(block.linear_map, norm)
    return _skip_norm(block, norm) + block.activation.beta * _mix_norm(block, norm) \
        * operator_norm(block.weight, norm)


def layer_lipschitz_lt(block: ResidualBlock, norm: Norm) -> float:
    """Loop-transformed layer bound; never worse than the naive one."""
    if block.is_affine:
        return operator_norm(block.linear_map, norm)
    return operator_norm(_hat_matrix(block), norm) \
        + _half_width(block) * _mix_norm(block, norm) * operator_norm(block.weight, norm)


def lipschitz_schedule(net: SequentialNetwork, norm: Norm, method: str = "liplt") -> LipschitzSchedule:
    """Cumulative Lipschitz constants for every prefix of the network."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; use one of {METHODS}")
    if method in ("naive", "lt"):
        layer_fn = layer_lipschitz_naive if method == "naive" else layer_lipschitz_lt
        per_layer = [layer_fn(b, norm) for b in net.blocks]
        cumulative = [1.0]
        for L in per_layer:
            cumulative.append(cumulative[-1] * L)
        return LipschitzSchedule(norm, method, tuple(per_layer), tuple(cumulative))
    return _liplt_schedule(net, norm)


def liplt_schedule(net: SequentialNetwork, norm: Norm) -> LipschitzSchedule:
    return lipschitz_schedule(net, norm, "liplt")


def _liplt_schedule(net: SequentialNetwork, norm: Norm) -> LipschitzSchedule:
    # Unrolled recursion: L_{k+1} = ||Hhat_k...Hhat_0|| +
    #   sum_j hw_j ||Hhat_k...Hhat_{j+1} mix_j|| ||weight_j|| L_j.
    # Running products are cached and extended one layer at a time.
    per_layer = [layer_lipschitz_lt(b, norm) for b in net.blocks]
    cumulative = [1.0]
    lead: Optional[np.ndarray] = None       # Hhat_k ... Hhat_0
    tails: list[Optional[np.ndarray]] = []  # Hhat_k ... Hhat_{j+1} mix_j, j = 0..k
    half_widths: list[float] = []
    weight_norms: list[float] = []
    for block in net.blocks:
        Hh = _hat_matrix(block)
        lead = Hh if lead is None else Hh @ lead
        tails = [None if T is None else Hh @ T for T in tails]
        hw = _half_width(block)
        tails.append(None if hw == 0.0 else
                     (np.eye(block.out_dim) if block.mix is None else block.mix))
        half_widths.append(hw)
        weight_norms.append(0.0 if hw == 0.0 else operator_norm(block.weight, norm))
        total = operator_norm(lead, norm)
        for j, T in enumerate(tails):
            if T is not None:
                total += half_widths[j] * operator_norm(T, norm) \
                    * weight_norms[j] * cumulative[j]
        cumulative.append(total)
    return LipschitzSchedule(norm, "liplt", tuple(per_layer), tuple(cumulative))


def anchored_layer_lipschitz(block: ResidualBlock, norm: Norm, x) -> float:
    """Anchored layer bound ||skip||_p + ||mix||_p ||diag(L_phi(z)) weight||_p.

    z is the pre-activation at the anchor; per-neuron anchored constants come
    from the activation's table (conservative lookups).  Affine blocks have no
    activation, so the anchored bound equals the global one.
    """
    if block.is_affine:
        return layer_lipschitz_naive(block, norm)
    z = block.pre_activation(np.asarray(x, dtype=float))
    constants = block.activation.anchored("phi", z)
    return _skip_norm(block, norm) + _mix_norm(block, norm) \
        * operator_norm(constants[:, None] * block.weight, norm)


def anchored_schedule(net: SequentialNetwork, norm: Norm, x0) -> LipschitzSchedule:
    """Products of anchored layer bounds along the forward trace of the anchor."""
    trace = forward(net, x0)
    per_layer = [anchored_layer_lipschitz(b, norm, xk) for b, xk in zip(net.blocks, trace)]
    cumulative = [1.0]
    for L in per_layer:
        cumulative.append(cumulative[-1] * L)
    return LipschitzSchedule(norm, "naive", tuple(per_layer), tuple(cumulative),
                             anchored=True, anchor=np.asarray(x0, dtype=float))
