"""Scalar activation registry: slope data for phi and phi', plus anchored constants.

The anchored Lipschitz constant of g at an anchor x is sup_{y != x}
|g(y) - g(x)| / |y - x|.  For the activations here the supremum is attained
either in the coincident limit y -> x, at a tangency point where the chord
slope matches the local slope, or asymptotically (linear tails).  The solver
collects all three candidate families, refines tangency points by bisection,
and pads the maximum by a 1e-9 relative margin so the result stays a valid
upper bound; it is finally clamped by the global constant, which always
dominates the anchored one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ANCHORED_SAFETY = 1.0 + 1e-9
DEFAULT_TABLE_RANGE = (-8.0, 8.0)
DEFAULT_TABLE_POINTS = 1601

# Extrema of the difference quotients of phi' for the smooth builtins:
# max |tanh''| = 4/(3*sqrt(3)), max |sigmoid''| = 1/(6*sqrt(3)).
TANH_DERIV_LIPSCHITZ = 4.0 / (3.0 * math.sqrt(3.0))
SIGMOID_DERIV_LIPSCHITZ = 1.0 / (6.0 * math.sqrt(3.0))


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z):
    return np.logaddexp(0.0, np.asarray(z, dtype=float))


def _elu(z):
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0.0, z, np.expm1(np.minimum(z, 0.0)))


def _elu_deriv(z):
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0.0, 1.0, np.exp(np.minimum(z, 0.0)))


@dataclass(frozen=True)
class AnchoredTable:
    """Precomputed anchored constants on a uniform anchor grid.

    Lookup at a node is exact; inside a cell it is the max of the two node
    values padded by (1 + cell_width^2), which covers the second-order
    interior excess of the anchored constant between nodes (the constant is
    smooth with curvature bounded by the target's higher slopes, so the
    excess over the nearer node is at most ~C*h^2/8).  Outside the grid the
    global constant is returned.
    """

    which: str
    anchors: np.ndarray
    values: np.ndarray
    global_constant: float

    @property
    def cell_pad(self) -> float:
        h = float(self.anchors[1] - self.anchors[0])
        return 1.0 + max(h * h, 1e-9)

    def lookup(self, x) -> np.ndarray:
        xq = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(xq.shape, self.global_constant)
        lo, hi = self.anchors[0], self.anchors[-1]
        inside = (xq >= lo) & (xq <= hi)
        if np.any(inside):
            xi = xq[inside]
            idx = np.searchsorted(self.anchors, xi, side="left")
            idx = np.clip(idx, 0, len(self.anchors) - 1)
            exact = self.anchors[idx] == xi
            vals = np.empty_like(xi)
            vals[exact] = self.values[idx[exact]]
            if np.any(~exact):
                right = idx[~exact]
                left = np.clip(right - 1, 0, len(self.anchors) - 1)
                pair = np.maximum(self.values[left], self.values[right])
                vals[~exact] = np.minimum(pair * self.cell_pad, self.global_constant)
            out[inside] = vals
        return out if np.ndim(x) else float(out[0])


@dataclass(frozen=True)
class ActivationSpec:
    """A scalar nonlinearity with its slope and derivative-slope intervals."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    slope: tuple[float, float]
    deriv_slope: tuple[float, float]
    second_deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # lim of (phi(y)-phi(x))/(y-x) as y -> -inf / +inf (linear tail slopes)
    tail_slopes: tuple[float, float] = (0.0, 0.0)
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def alpha(self) -> float:
        return self.slope[0]

    @property
    def beta(self) -> float:
        return self.slope[1]

    @property
    def lipschitz(self) -> float:
        # monotone activations: L_phi = beta
        return self.slope[1]

    @property
    def deriv_lipschitz(self) -> float:
        a, b = self.deriv_slope
        return max(abs(a), abs(b))

    def global_constant(self, which: str) -> float:
        if which == "phi":
            return self.lipschitz
        if which == "dphi":
            return self.deriv_lipschitz
        raise ValueError(f"unknown target {which!r}; use 'phi' or 'dphi'")

    def anchored(self, which: str, x, use_table: bool = True):
        """Anchored constant(s) at anchor(s) x, via the cached default table."""
        if not use_table:
            xq = np.atleast_1d(np.asarray(x, dtype=float))
            vals = np.array([anchored_lipschitz(self, which, float(t)) for t in xq])
            return vals if np.ndim(x) else float(vals[0])
        key = (which, DEFAULT_TABLE_RANGE, DEFAULT_TABLE_POINTS)
        table = self._tables.get(key)
        if table is None:
            table = build_anchored_table(
                self, which, DEFAULT_TABLE_RANGE[0], DEFAULT_TABLE_RANGE[1],
                DEFAULT_TABLE_POINTS,
            )
            self._tables[key] = table
        return table.lookup(x)


def builtin(name: str) -> ActivationSpec:
    """Registry of supported activations with their slope constants.

    Returns a shared immutable instance per name so anchored tables built
    lazily on it are computed once per process.
    """
    name = name.lower()
    cached = _BUILTIN_CACHE.get(name)
    if cached is not None:
        return cached
    spec = _make_builtin(name)
    _BUILTIN_CACHE[name] = spec
    return spec


_BUILTIN_CACHE: dict[str, ActivationSpec] = {}


def _make_builtin(name: str) -> ActivationSpec:
    if name == "tanh":
        L = TANH_DERIV_LIPSCHITZ
        return ActivationSpec(
            name="tanh",
            fn=np.tanh,
            deriv=lambda z: 1.0 - np.tanh(z) ** 2,
            slope=(0.0, 1.0),
            deriv_slope=(-L, L),
            second_deriv=lambda z: -2.0 * np.tanh(z) * (1.0 - np.tanh(z) ** 2),
        )
    if name == "sigmoid":
        L = SIGMOID_DERIV_LIPSCHITZ
        return ActivationSpec(
            name="sigmoid",
            fn=_sigmoid,
            deriv=lambda z: _sigmoid(z) * (1.0 - _sigmoid(z)),
            slope=(0.0, 0.25),
            deriv_slope=(-L, L),
            second_deriv=lambda z: _sigmoid(z) * (1.0 - _sigmoid(z)) * (1.0 - 2.0 * _sigmoid(z)),
        )
    if name == "softplus":
        return ActivationSpec(
            name="softplus",
            fn=_softplus,
            deriv=_sigmoid,
            slope=(0.0, 1.0),
            deriv_slope=(0.0, 0.25),
            second_deriv=lambda z: _sigmoid(z) * (1.0 - _sigmoid(z)),
            tail_slopes=(0.0, 1.0),
        )
    if name == "elu":
        # phi'' is undefined at 0, but phi' is 1-Lipschitz; the anchored
        # solver works on phi' directly, no second derivative needed.
        return ActivationSpec(
            name="elu",
            fn=_elu,
            deriv=_elu_deriv,
            slope=(0.0, 1.0),
            deriv_slope=(0.0, 1.0),
            second_deriv=None,
            tail_slopes=(0.0, 1.0),
        )
    raise ValueError(f"unknown activation {name!r}; supported: tanh, sigmoid, softplus, elu")


BUILTIN_NAMES = ("tanh", "sigmoid", "softplus", "elu")


def _target(spec: ActivationSpec, which: str):
    if which == "phi":
        return spec.fn, spec.deriv, spec.lipschitz, spec.tail_slopes
    if which == "dphi":
        return spec.deriv, spec.second_deriv, spec.deriv_lipschitz, (0.0, 0.0)
    raise ValueError(f"unknown target {which!r}; use 'phi' or 'dphi'")


def _scan_grid(x: float) -> np.ndarray:
    span = 40.0 + 2.0 * abs(x)
    small = np.geomspace(1e-9, 2.0, 40)
    ys = np.concatenate([
        np.linspace(x - span, x + span, 3001),
        np.linspace(-20.0, 20.0, 2001),
        x + small, x - small,        # probe the coincident limit
        small, -small,               # probe kinks at the origin (elu)
    ])
    ys = np.unique(ys)
    # drop points so close to the anchor that the quotient is rounding noise;
    # the coincident limit is handled by the local-slope candidates
    return ys[np.abs(ys - x) > 1e-10]


def anchored_lipschitz(spec: ActivationSpec, which: str, x: float,
                       bisect_iters: int = 80) -> float:
    """Upper bound on sup_{y != x} |g(y) - g(x)| / |y - x| for g in {phi, phi'}."""
    if not math.isfinite(x):
        raise ValueError("anchor must be finite")
    g, gprime, global_c, tails = _target(spec, which)
    gx = float(g(np.array(x)))

    ys = _scan_grid(x)
    quot = np.abs(np.asarray(g(ys)) - gx) / np.abs(ys - x)
    best = float(np.max(quot))

    # coincident limit: local slope of the target at the anchor
    if gprime is not None:
        best = max(best, abs(float(gprime(np.array(x)))))
    for h in (1e-9, 1e-7, 1e-5):
        best = max(best, abs(float(g(np.array(x + h))) - gx) / h)
        best = max(best, abs(float(g(np.array(x - h))) - gx) / h)

    # linear tails: the chord slope tends to the asymptotic slope
    best = max(best, abs(tails[0]), abs(tails[1]))

    # tangency refinement: critical points of the signed quotient satisfy
    # g'(y) (y - x) = g(y) - g(x); bracket sign changes on the scan grid.
    if gprime is not None:
        dy = np.asarray(gprime(ys))
    else:
        h = 1e-6
        dy = (np.asarray(g(ys + h)) - np.asarray(g(ys - h))) / (2.0 * h)
    t = dy * (ys - x) - (np.asarray(g(ys)) - gx)
    sign_flip = np.nonzero(np.sign(t[:-1]) * np.sign(t[1:]) < 0)[0]
    # t vanishes quadratically at the anchor, so sign flips within ~1e-6 of it
    # are rounding noise; that region is covered by the local-slope candidates
    sign_flip = sign_flip[np.minimum(np.abs(ys[sign_flip] - x),
                                     np.abs(ys[sign_flip + 1] - x)) > 1e-6]
    if sign_flip.size:
        lo = ys[sign_flip].copy()
        hi = ys[sign_flip + 1].copy()
        tlo = t[sign_flip].copy()
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if gprime is not None:
                dmid = np.asarray(gprime(mid))
            else:
                dmid = (np.asarray(g(mid + 1e-6)) - np.asarray(g(mid - 1e-6))) / 2e-6
            tmid = dmid * (mid - x) - (np.asarray(g(mid)) - gx)
            take_lo = np.sign(tmid) == np.sign(tlo)
            lo = np.where(take_lo, mid, lo)
            tlo = np.where(take_lo, tmid, tlo)
            hi = np.where(take_lo, hi, mid)
        roots = 0.5 * (lo + hi)
        roots = roots[np.abs(roots - x) > 1e-6]
        if roots.size:
            best = max(best, float(np.max(
                np.abs(np.asarray(g(roots)) - gx) / np.abs(roots - x))))

    return min(global_c, best * ANCHORED_SAFETY)


def build_anchored_table(spec: ActivationSpec, which: str, lo: float, hi: float,
                         n_points: int) -> AnchoredTable:
    """Solve the anchored constant on a uniform grid for later conservative lookup."""
    if not (lo < hi) or n_points < 2:
        raise ValueError(f"invalid table grid lo={lo}, hi={hi}, n_points={n_points}")
    anchors = np.linspace(lo, hi, n_points)
    values = np.array([anchored_lipschitz(spec, which, float(a)) for a in anchors])
    return AnchoredTable(
        which=which, anchors=anchors, values=values,
        global_constant=spec.global_constant(which),
    )
