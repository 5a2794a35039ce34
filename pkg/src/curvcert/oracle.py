"""Independent brute-force verification: the machinery every bound is tested against.

Nothing here shares code with the bound computations: finite differences for
Jacobians, pair sampling for empirical Lipschitz lower bounds, exhaustive grid
search for adversarial examples at toy scale, and a finite-difference Hessian
for scalar nets.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linalg import Norm
from .model import SequentialNetwork, forward, forward_batch, jacobian, jacobian_batch


@dataclass(frozen=True)
class SamplingPlan:
    """Reproducible pair-sampling configuration: same plan, same samples."""

    seed: int
    n_pairs: int
    low: float = -3.0
    high: float = 3.0
    norm: Norm = Norm(2)
    # pairs are drawn at three scales: box-wide, medium, and near-coincident,
    # because derivative-difference quotients peak at short range
    scales: tuple[float, ...] = (math.inf, 1e-1, 1e-4)


def sample_pairs(plan: SamplingPlan, dim: int):
    """(X, Y) pair batches mixing box-wide and short-range separations."""
    rng = np.random.default_rng(plan.seed)
    X = rng.uniform(plan.low, plan.high, size=(plan.n_pairs, dim))
    Y = np.empty_like(X)
    groups = np.array_split(np.arange(plan.n_pairs), len(plan.scales))
    for idx, scale in zip(groups, plan.scales):
        if math.isinf(scale):
            Y[idx] = rng.uniform(plan.low, plan.high, size=(len(idx), dim))
        else:
            Y[idx] = X[idx] + scale * rng.standard_normal((len(idx), dim))
    keep = np.any(X != Y, axis=1)
    return X[keep], Y[keep]


def sample_anchored_points(plan: SamplingPlan, anchor: np.ndarray):
    """Perturbations of a fixed anchor at the plan's scales (anchored quotients)."""
    rng = np.random.default_rng(plan.seed)
    anchor = np.asarray(anchor, dtype=float)
    dim = anchor.shape[0]
    parts = []
    groups = np.array_split(np.arange(plan.n_pairs), len(plan.scales))
    for idx, scale in zip(groups, plan.scales):
        if math.isinf(scale):
            parts.append(rng.uniform(plan.low, plan.high, size=(len(idx), dim)))
        else:
            parts.append(anchor + scale * rng.standard_normal((len(idx), dim)))
    Y = np.vstack(parts)
    return Y[np.any(Y != anchor, axis=1)]


def _vector_norms(V: np.ndarray, p: float) -> np.ndarray:
    if p == 1.0:
        return np.abs(V).sum(axis=1)
    if math.isinf(p):
        return np.abs(V).max(axis=1)
    return np.sqrt((V * V).sum(axis=1))


def _matrix_norms(M: np.ndarray, p: float) -> np.ndarray:
    """Stacked operator norms of (n, r, c) matrices."""
    if p == 1.0:
        return np.abs(M).sum(axis=1).max(axis=1)
    if math.isinf(p):
        return np.abs(M).sum(axis=2).max(axis=1)
    return np.linalg.svd(M, compute_uv=False)[:, 0]


def finite_difference_jacobian(net: SequentialNetwork, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian, one column per input coordinate."""
    if h <= 0.0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((forward(net, x + e)[-1] - forward(net, x - e)[-1]) / (2.0 * h))
    return np.stack(cols, axis=1)


def sampled_lipschitz_lower_bound(fn, plan: SamplingPlan, dim: int,
                                  out_norm: Norm | None = None) -> float:
    """max ||fn(x) - fn(y)|| / ||x - y|| over the plan's pairs; fn maps batches."""
    X, Y = sample_pairs(plan, dim)
    p = plan.norm.p
    q = (out_norm or plan.norm).p
    num = _vector_norms(np.asarray(fn(X)) - np.asarray(fn(Y)), q)
    den = _vector_norms(X - Y, p)
    return float(np.max(num / den))


def sampled_network_lipschitz(net: SequentialNetwork, plan: SamplingPlan) -> float:
    return sampled_lipschitz_lower_bound(
        lambda X: forward_batch(net, X)[-1], plan, net.input_dim)


def sampled_anchored_lipschitz(net: SequentialNetwork, anchor, plan: SamplingPlan) -> float:
    anchor = np.asarray(anchor, dtype=float)
    Y = sample_anchored_points(plan, anchor)
    p = plan.norm.p
    fx = forward(net, anchor)[-1]
    num = _vector_norms(forward_batch(net, Y)[-1] - fx, p)
    den = _vector_norms(Y - anchor, p)
    return float(np.max(num / den))


def sampled_jacobian_lipschitz_lower_bound(net: SequentialNetwork,
                                           plan: SamplingPlan) -> float:
    """max ||Df(x) - Df(y)||_{p*} / ||x - y||_p using analytic Jacobians."""
    X, Y = sample_pairs(plan, net.input_dim)
    q = plan.norm.dual.p
    num = _matrix_norms(jacobian_batch(net, X) - jacobian_batch(net, Y), q)
    den = _vector_norms(X - Y, plan.norm.p)
    return float(np.max(num / den))


def sampled_anchored_jacobian_lipschitz(net: SequentialNetwork, anchor,
                                        plan: SamplingPlan) -> float:
    anchor = np.asarray(anchor, dtype=float)
    Y = sample_anchored_points(plan, anchor)
    q = plan.norm.dual.p
    Jx = jacobian(net, anchor)
    num = _matrix_norms(jacobian_batch(net, Y) - Jx[None, :, :], q)
    den = _vector_norms(Y - anchor, plan.norm.p)
    return float(np.max(num / den))


_UNIT_LATTICE_CACHE: dict = {}


def _unit_ball_lattice(dim: int, resolution: float, p: float):
    """Lattice of step `resolution` covering the unit p-ball, minus the origin."""
    key = (dim, resolution, p)
    cached = _UNIT_LATTICE_CACHE.get(key)
    if cached is not None:
        return cached
    n = int(math.floor(1.0 / resolution))
    axis = np.arange(-n, n + 1) * resolution
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    deltas = np.stack([g.ravel() for g in grids], axis=1)
    norms = _vector_norms(deltas, p)
    mask = (norms <= 1.0) & (norms > 0.0)
    result = (deltas[mask], norms[mask])
    _UNIT_LATTICE_CACHE[key] = result
    return result


def grid_adversarial_search(net: SequentialNetwork, x, label: int, norm: Norm,
                            radius: float, resolution: float = 1e-3,
                            chunk: int = 100_000):
    """Exhaustive lattice scan of the p-ball; smallest misclassifying point or None.

    resolution is the lattice step relative to the radius.  Only defensible at
    toy scale, hence the hard dimension cap.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    if dim > 3:
        raise ValueError("grid search is exhaustive only up to 3 input dimensions")
    if radius <= 0.0 or resolution <= 0.0:
        raise ValueError("radius and resolution must be positive")
    deltas, norms = _unit_ball_lattice(dim, resolution, norm.p)

    def scan(start: int):
        pts = radius * deltas[start:start + chunk]
        pts += x
        logits = forward_batch(net, pts)[-1]
        predicted = np.argmax(logits, axis=1)
        hits = np.nonzero(predicted != label)[0]
        if not hits.size:
            return None
        dists = radius * norms[start:start + chunk][hits]
        j = int(np.argmin(dists))
        return pts[hits[j]] - x, float(dists[j])

    starts = list(range(0, deltas.shape[0], chunk))
    workers = max(1, int(os.environ.get("CURVCERT_THREADS", "1")))
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan, starts))
    else:
        results = [scan(s) for s in starts]
    # chunk order is fixed, so ties resolve identically at any worker count
    return min((r for r in results if r is not None),
               key=lambda t: t[1], default=None)


def exact_hessian_norm_tiny(net: SequentialNetwork, x, h: float = 1e-5) -> float:
    """Spectral norm of the symmetrized finite-difference Hessian of a scalar net."""
    if net.output_dim != 1:
        raise ValueError("Hessian oracle needs a scalar-output network")
    if net.input_dim > 8:
        raise ValueError("Hessian oracle is limited to input dim <= 8")
    for block in net.blocks:
        if block.activation is not None and block.activation.second_deriv is None:
            raise ValueError(
                f"activation {block.activation.name!r} has no second derivative; "
                "Hessian-based analysis does not apply")
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    H = np.empty((dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = h
        gp = jacobian(net, x + e)[0]
        gm = jacobian(net, x - e)[0]
        H[:, j] = (gp - gm) / (2.0 * h)
    H = 0.5 * (H + H.T)
    return float(np.max(np.abs(np.linalg.eigvalsh(H))))
