"""Dense matrix/vector arithmetic and the operator norms every bound consumes.

All certified results are safe upper bounds: the spectral norm goes through a
dense symmetric eigensolve of the Gram matrix plus a 1e-9 multiplicative
margin, never through power iteration alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPECTRAL_SAFETY = 1.0 + 1e-9

_DUAL = {1.0: math.inf, 2.0: 2.0, math.inf: 1.0}


@dataclass(frozen=True)
class Norm:
    """An l_p norm choice, p in {1, 2, inf}, paired with its Holder conjugate."""

    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        if self.p not in _DUAL:
            raise ValueError(f"unsupported norm p={self.p!r}; use 1, 2 or inf")

    @property
    def dual(self) -> "Norm":
        return Norm(_DUAL[self.p])

    @classmethod
    def parse(cls, text: str) -> "Norm":
        text = str(text).strip().lower()
        if text in ("inf", "infinity", "oo"):
            return cls(math.inf)
        try:
            return cls(float(text))
        except ValueError:
            raise ValueError(f"unrecognized norm {text!r}; use 1, 2 or inf") from None

    def __str__(self) -> str:
        return "inf" if math.isinf(self.p) else str(int(self.p))


L1 = Norm(1)
L2 = Norm(2)
LINF = Norm(math.inf)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    A = np.asarray(a, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def as_vector(v, name: str = "vector") -> np.ndarray:
    x = np.asarray(v, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def operator_norm(a, norm: Norm = L2, mode: str = "certified") -> float:
    """Operator norm ||A||_p for p in {1, 2, inf}.

    p=1 and p=inf are exact column/row absolute sums.  For p=2, "fast" runs
    power iteration (may under-approximate; only for regularizer-style use)
    while "certified" solves the Gram eigenproblem and pads the root by a
    1e-9 relative margin so the result is a safe upper bound.
    """
    A = as_matrix(a)
    if A.size == 0:
        return 0.0
    p = norm.p
    if p == 1.0:
        return float(np.max(np.abs(A).sum(axis=0)))
    if math.isinf(p):
        return float(np.max(np.abs(A).sum(axis=1)))
    if mode == "fast":
        return _power_iteration(A)
    if mode != "certified":
        raise ValueError(f"unknown mode {mode!r}; use 'fast' or 'certified'")
    return spectral_norm_exact(A) * SPECTRAL_SAFETY


def spectral_norm_exact(a) -> float:
    """Gram-eigensolve spectral norm without the safety pad.

    Callers composing several spectral factors into one bound use this and
    apply SPECTRAL_SAFETY once, so exact ordering theorems survive rounding.
    """
    A = as_matrix(a)
    if A.size == 0:
        return 0.0
    # Gram matrix on the smaller side; eigvalsh is a dense symmetric solver.
    G = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    lam = float(np.linalg.eigvalsh(G)[-1])
    return math.sqrt(max(lam, 0.0))


def _power_iteration(A: np.ndarray, tol: float = 1e-6, max_iter: int = 5000) -> float:
    n = A.shape[1]
    # Deterministic start; small ramp avoids starting orthogonal to the top vector.
    v = np.ones(n) + 1e-3 * np.sin(np.arange(n))
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = A @ v
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = A.T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return float(s)
        v /= nv
        if abs(s - sigma) <= tol * max(s, 1e-300):
            return float(s)
        sigma = s
    return float(sigma)


def norm_p_to_inf(a, norm: Norm = L2) -> float:
    """||A||_{p->inf}: the maximum row l_{p*} norm (dual-norm form)."""
    A = as_matrix(a)
    if A.size == 0:
        return 0.0
    q = norm.dual.p
    if q == 1.0:
        return float(np.max(np.abs(A).sum(axis=1)))
    if math.isinf(q):
        return float(np.max(np.abs(A)))
    return float(np.max(np.sqrt((A * A).sum(axis=1))))


def vector_norm(v, norm: Norm = L2) -> float:
    return float(np.linalg.norm(as_vector(v), ord=norm.p))


def dual_vector_norm(v, norm: Norm = L2) -> float:
    """||v||_{p*} for the Holder conjugate of p."""
    return float(np.linalg.norm(as_vector(v), ord=norm.dual.p))


def argmax_dual(v, norm: Norm = L2) -> np.ndarray:
    """Unit-p-norm direction d with v.d = ||v||_{p*}."""
    x = as_vector(v)
    if not np.any(x != 0.0):
        raise ValueError("argmax_dual is undefined for the zero vector")
    p = norm.p
    if p == 2.0:
        # pre-scale by the largest entry so subnormal inputs do not underflow
        y = x / np.max(np.abs(x))
        return y / np.linalg.norm(y)
    if math.isinf(p):
        return np.where(x >= 0.0, 1.0, -1.0)
    d = np.zeros_like(x)
    j = int(np.argmax(np.abs(x)))
    d[j] = 1.0 if x[j] >= 0.0 else -1.0
    return d
