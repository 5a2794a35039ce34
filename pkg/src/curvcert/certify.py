"""Closed-form robustness and attack certificates for classifiers.

Zeroth order: radius = min_i -gap_i / L_i from anchored Lipschitz constants.
First order: the positive root of (L/2) e^2 + ||grad|| e + gap = 0 per pair,
evaluated in the rationalized form -2 gap / (||grad|| + sqrt(||grad||^2 -
2 L gap)) which degrades gracefully to the linear limit -gap/||grad|| as the
curvature vanishes.  Attack certificates use the same quadratic model from
the other side and come with a perturbation that provably realizes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .curvature import anchored_compositional_curvature, compositional_curvature
from .linalg import Norm, argmax_dual, dual_vector_norm
from .lipschitz import anchored_schedule, lipschitz_schedule
from .model import (
    LogitPairReduction,
    SequentialNetwork,
    compose_scalar_head,
    forward,
    logit_gap_and_gradient,
)

CURVATURE_FLOOR = 1e-12
DEFAULT_BUDGETS = (36.0 / 255.0, 72.0 / 255.0, 108.0 / 255.0)


@dataclass(frozen=True)
class PairRecord:
    class_index: int
    gap: float                       # f_iy(x), negative for correct samples
    grad_dual: float                 # ||grad f_iy(x)||_{p*}
    lipschitz: float                 # anchored or global bound on L_{f_iy}(x)
    curvature: Optional[float]       # bound on L_{grad f_iy}(x); None at order 0
    radius: float                    # this pair's certified radius (may be inf)


@dataclass(frozen=True)
class Certificate:
    sample_id: int
    predicted: int
    label: int
    norm: Norm
    correct: bool
    pairs: tuple[PairRecord, ...] = ()
    order: int = 1
    radius: Optional[float] = None                 # eps_0 or eps_1 depending on order
    radius_class: Optional[int] = None
    attack_radius: Optional[float] = None
    attack_class: Optional[int] = None
    attack_direction: Optional[np.ndarray] = None
    attack_realized: Optional[bool] = None


def certify_zeroth(gaps: Sequence[float], lipschitz: Sequence[float]):
    """min_i -gap_i / L_i and the arg-min class position; None if misclassified."""
    gaps = np.asarray(gaps, dtype=float)
    lips = np.asarray(lipschitz, dtype=float)
    if np.any(gaps >= 0.0):
        return None
    if np.any(lips <= 0.0):
        raise ValueError("Lipschitz constants must be positive")
    radii = -gaps / lips
    j = int(np.argmin(radii))
    return float(radii[j]), j, radii


def first_order_radius(gap: float, grad_dual: float, curvature: float) -> float:
    """Positive root of (L/2) e^2 + g e + gap = 0 for a single pair (gap < 0)."""
    if gap >= 0.0:
        raise ValueError("first-order radius needs a negative gap")
    if curvature < 0.0:
        raise ValueError("curvature bound must be non-negative")
    disc = grad_dual * grad_dual - 2.0 * curvature * gap
    denom = grad_dual + math.sqrt(disc)
    if denom == 0.0:
        # zero gradient and (sub-floor) zero curvature: constraint never activates
        return math.inf
    return -2.0 * gap / denom


def certify_first(gaps: Sequence[float], grad_duals: Sequence[float],
                  curvatures: Sequence[float]):
    """Per-pair first-order radii and their minimum; None if misclassified."""
    gaps = np.asarray(gaps, dtype=float)
    grads = np.asarray(grad_duals, dtype=float)
    curvs = np.asarray(curvatures, dtype=float)
    if np.any(gaps >= 0.0):
        return None
    radii = np.array([
        first_order_radius(g, d, c if c >= CURVATURE_FLOOR else 0.0)
        for g, d, c in zip(gaps, grads, curvs)
    ])
    j = int(np.argmin(radii))
    return float(radii[j]), j, radii


def prop2_condition(gap: float, grad_dual: float, curvature: float, eps0: float) -> bool:
    """Curvature is small enough that the first-order radius dominates eps0."""
    if eps0 <= 0.0:
        raise ValueError("eps0 must be positive")
    return curvature <= -2.0 * (grad_dual * eps0 + gap) / (eps0 * eps0)


def attack_certificate(gaps: Sequence[float], gradients: Sequence[np.ndarray],
                       curvatures: Sequence[float], norm: Norm,
                       class_indices: Optional[Sequence[int]] = None):
    """Smallest provably misclassifying radius over the feasible class set.

    gaps are f_iy(x) < 0 per competitor class; gradients are grad f_iy(x).
    A class enters the feasible set when 2 L f_yi <= ||grad f_yi||^2 with
    f_yi = -gap.  Returns (radius, class, delta) with ||delta||_p = radius,
    or None when every class is infeasible.
    """
    gaps = np.asarray(gaps, dtype=float)
    if np.any(gaps >= 0.0):
        raise ValueError("attack certificates need a correctly classified sample")
    best = None
    for j, (gap, grad, curv) in enumerate(zip(gaps, gradients, curvatures)):
        f_yi = -gap
        g = dual_vector_norm(grad, norm)
        if g == 0.0 and curv < CURVATURE_FLOOR:
            continue                      # constant positive margin: no crossing
        if 2.0 * curv * f_yi > g * g:
            continue                      # tightened problem infeasible for this class
        disc = g * g - 2.0 * curv * f_yi  # non-negative inside the feasible set
        radius = 2.0 * f_yi / (g + math.sqrt(disc))
        if best is None or radius < best[0]:
            best = (radius, j, grad)
    if best is None:
        return None
    radius, j, grad = best
    delta = radius * argmax_dual(grad, norm)
    cls = class_indices[j] if class_indices is not None else j
    return radius, cls, delta


@dataclass(frozen=True)
class GapStatistics:
    budget: float
    n: int
    certified_safe: int
    certified_attackable: int
    in_gap: int

    @property
    def gap_fraction(self) -> float:
        return self.in_gap / self.n if self.n else 0.0


def certification_gap(certs: Sequence[Certificate], budget: float) -> GapStatistics:
    """Counts of safe / attackable / undecided certificates at a budget.

    A point is in the gap when eps_lower <= budget <= eps_upper, with the
    attack radius treated as +inf when no attack certificate exists.
    """
    safe = attackable = in_gap = n = 0
    for cert in certs:
        if not cert.correct or cert.radius is None:
            continue
        n += 1
        upper = cert.attack_radius if cert.attack_radius is not None else math.inf
        if cert.radius > budget:
            safe += 1
        elif upper < budget:
            attackable += 1
        else:
            in_gap += 1
    return GapStatistics(budget=budget, n=n, certified_safe=safe,
                         certified_attackable=attackable, in_gap=in_gap)


def certify_sample(net: SequentialNetwork, x, label: int, norm: Norm,
                   sample_id: int = 0, order: int = 1, anchored: bool = True,
                   shared_bound: bool = False, with_attack: bool = False) -> Certificate:
    """Full certificate for one sample: per-pair constants, radius, optional attack.

    Default path: every competitor pair gets its own scalar-head network with
    anchored Lipschitz and curvature bounds (tight).  With shared_bound, one
    network-level curvature bound scaled by ||e_i - e_y||_2 = sqrt(2) covers
    all pairs (fast path, p = 2 only).
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    x = np.asarray(x, dtype=float)
    logits = forward(net, x)[-1]
    predicted = int(np.argmax(logits))
    if predicted != label:
        return Certificate(sample_id=sample_id, predicted=predicted, label=label,
                           norm=norm, correct=False, order=order)

    shared_curv = None
    if shared_bound and order == 1:
        if norm.p != 2.0:
            raise ValueError("the shared curvature bound is only valid for p = 2")
        shared_curv = math.sqrt(2.0) * compositional_curvature(net, norm).total

    records = []
    gradients = []
    for i in range(net.output_dim):
        if i == label:
            continue
        pair = LogitPairReduction(i, label)
        gap, grad = logit_gap_and_gradient(net, x, pair)
        gd = dual_vector_norm(grad, norm)
        head = compose_scalar_head(net, pair)
        if anchored:
            lip = anchored_schedule(head, norm, x).total
        else:
            lip = lipschitz_schedule(head, norm, "liplt").total
        curv = None
        if order == 1:
            if shared_curv is not None:
                curv = shared_curv
            elif anchored:
                curv = anchored_compositional_curvature(head, norm, x).total
            else:
                curv = compositional_curvature(head, norm).total
        records.append((i, gap, gd, lip, curv))
        gradients.append(grad)

    gaps = [r[1] for r in records]
    if order == 0:
        result = certify_zeroth(gaps, [r[3] for r in records])
    else:
        result = certify_first(gaps, [r[2] for r in records],
                               [r[4] for r in records])
    if result is None:
        # argmax tie: some gap is exactly zero, no positive radius exists
        return Certificate(sample_id=sample_id, predicted=predicted, label=label,
                           norm=norm, correct=False, order=order)
    radius, j, radii = result
    pairs = tuple(
        PairRecord(class_index=i, gap=gap, grad_dual=gd, lipschitz=lip,
                   curvature=curv, radius=float(r))
        for (i, gap, gd, lip, curv), r in zip(records, radii)
    )

    attack = None
    realized = None
    if with_attack and order == 1:
        attack = attack_certificate(gaps, gradients, [r[4] for r in records], norm,
                                    class_indices=[r[0] for r in records])
        if attack is not None:
            attacked_logits = forward(net, x + attack[2])[-1]
            realized = int(np.argmax(attacked_logits)) != label

    return Certificate(
        sample_id=sample_id, predicted=predicted, label=label, norm=norm,
        correct=True, pairs=pairs, order=order,
        radius=radius, radius_class=pairs[j].class_index,
        attack_radius=None if attack is None else attack[0],
        attack_class=None if attack is None else attack[1],
        attack_direction=None if attack is None else attack[2],
        attack_realized=realized,
    )
