"""Sequential residual networks and their exact derivatives.

A block computes  out = skip @ x + mix @ act(weight @ x + bias)  where a
missing skip means zero, a missing mix means identity, and a missing
activation makes the block affine: out = skip @ x + mix @ (weight @ x + bias).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .activations import ActivationSpec
from .linalg import as_matrix, as_vector


@dataclass(frozen=True)
class ResidualBlock:
    weight: np.ndarray                       # pre-activation weight W (n_hidden x n_in)
    skip: Optional[np.ndarray] = None        # residual path H (n_out x n_in); None = 0
    mix: Optional[np.ndarray] = None         # post-activation mix G (n_out x n_hidden); None = I
    bias: Optional[np.ndarray] = None
    activation: Optional[ActivationSpec] = None

    def __post_init__(self):
        W = as_matrix(self.weight, "weight")
        object.__setattr__(self, "weight", W)
        if self.skip is not None:
            H = as_matrix(self.skip, "skip")
            if H.shape[1] != W.shape[1]:
                raise ValueError(
                    f"skip has {H.shape[1]} columns but weight has {W.shape[1]}")
            object.__setattr__(self, "skip", H)
        if self.mix is not None:
            G = as_matrix(self.mix, "mix")
            if G.shape[1] != W.shape[0]:
                raise ValueError(
                    f"mix has {G.shape[1]} columns but weight has {W.shape[0]} rows")
            object.__setattr__(self, "mix", G)
        if self.skip is not None and self.mix is not None:
            if self.skip.shape[0] != self.mix.shape[0]:
                raise ValueError("skip and mix must have the same number of rows")
        if self.bias is not None:
            b = as_vector(self.bias, "bias")
            if b.shape[0] != W.shape[0]:
                raise ValueError(
                    f"bias has length {b.shape[0]} but weight has {W.shape[0]} rows")
            object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        if self.skip is not None:
            return self.skip.shape[0]
        if self.mix is not None:
            return self.mix.shape[0]
        return self.weight.shape[0]

    @property
    def is_affine(self) -> bool:
        return self.activation is None

    @property
    def is_plain(self) -> bool:
        """True when the block has no residual structure (skip zero, mix identity)."""
        if self.skip is not None and np.any(self.skip != 0.0):
            return False
        if self.mix is not None:
            G = self.mix
            if G.shape[0] != G.shape[1] or np.any(G != np.eye(G.shape[0])):
                return False
        return True

    @property
    def linear_map(self) -> np.ndarray:
        """The exact Jacobian of an affine block: skip + mix @ weight."""
        if not self.is_affine:
            raise ValueError("linear_map is only defined for affine blocks")
        M = self.weight if self.mix is None else self.mix @ self.weight
        if self.skip is not None:
            M = self.skip + M
        return M

    def pre_activation(self, x: np.ndarray) -> np.ndarray:
        z = self.weight @ x
        if self.bias is not None:
            z = z + self.bias
        return z

    def apply(self, x: np.ndarray) -> np.ndarray:
        z = self.pre_activation(x)
        a = self.activation.fn(z) if self.activation is not None else z
        out = a if self.mix is None else self.mix @ a
        if self.skip is not None:
            out = out + self.skip @ x
        return out

    def apply_batch(self, X: np.ndarray) -> np.ndarray:
        Z = X @ self.weight.T
        if self.bias is not None:
            Z += self.bias
        A = self.activation.fn(Z) if self.activation is not None else Z
        out = A if self.mix is None else A @ self.mix.T
        if self.skip is not None:
            out += X @ self.skip.T
        return out

    def jacobian_at(self, x: np.ndarray) -> np.ndarray:
        if self.is_affine:
            return self.linear_map
        s = self.activation.deriv(self.pre_activation(x))
        D = s[:, None] * self.weight
        if self.mix is not None:
            D = self.mix @ D
        if self.skip is not None:
            D = D + self.skip
        return D


@dataclass(frozen=True)
class SequentialNetwork:
    blocks: tuple[ResidualBlock, ...]
    name: str = ""
    n_classes: Optional[int] = None

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("network needs at least one block")
        for k in range(1, len(blocks)):
            if blocks[k].in_dim != blocks[k - 1].out_dim:
                raise ValueError(
                    f"block {k} expects input dim {blocks[k].in_dim} but "
                    f"block {k - 1} outputs {blocks[k - 1].out_dim}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def input_dim(self) -> int:
        return self.blocks[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.blocks[-1].out_dim

    @property
    def depth(self) -> int:
        return len(self.blocks)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)[-1]


@dataclass(frozen=True)
class LogitPairReduction:
    """Reduction f_i - f_y via c = e_i - e_y."""

    i: int
    y: int

    def __post_init__(self):
        if self.i == self.y:
            raise ValueError("logit pair needs two distinct classes")
        if self.i < 0 or self.y < 0:
            raise ValueError("class indices must be non-negative")

    def vector(self, n_classes: int) -> np.ndarray:
        if self.i >= n_classes or self.y >= n_classes:
            raise ValueError(f"pair ({self.i},{self.y}) out of range for {n_classes} classes")
        c = np.zeros(n_classes)
        c[self.i] = 1.0
        c[self.y] = -1.0
        return c


def forward(net: SequentialNetwork, x) -> list[np.ndarray]:
    """All intermediate activations x^0 ... x^K; the last entry is the logits."""
    x = as_vector(x, "input")
    if x.shape[0] != net.input_dim:
        raise ValueError(f"input has dim {x.shape[0]}, network expects {net.input_dim}")
    trace = [x]
    for block in net.blocks:
        trace.append(block.apply(trace[-1]))
    return trace


def forward_batch(net: SequentialNetwork, X) -> list[np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ValueError(f"batch must be (n, {net.input_dim}), got {X.shape}")
    trace = [X]
    for block in net.blocks:
        trace.append(block.apply_batch(trace[-1]))
    return trace


def jacobian(net: SequentialNetwork, x) -> np.ndarray:
    """Exact end-to-end Jacobian, chained along the forward trace."""
    trace = forward(net, x)
    J = np.eye(net.input_dim)
    for block, xk in zip(net.blocks, trace):
        J = block.jacobian_at(xk) @ J
    return J


def jacobian_batch(net: SequentialNetwork, X) -> np.ndarray:
    """Stacked Jacobians, shape (n, out_dim, in_dim)."""
    X = np.asarray(X, dtype=float)
    trace = forward_batch(net, X)
    n = X.shape[0]
    J = np.broadcast_to(np.eye(net.input_dim), (n, net.input_dim, net.input_dim)).copy()
    for block, Xk in zip(net.blocks, trace):
        if block.is_affine:
            J = np.einsum("oi,nij->noj", block.linear_map, J)
            continue
        Z = Xk @ block.weight.T
        if block.bias is not None:
            Z = Z + block.bias
        S = block.activation.deriv(Z)                       # (n, hidden)
        D = np.einsum("nh,hi,nij->nhj", S, block.weight, J)
        if block.mix is not None:
            D = np.einsum("oh,nhj->noj", block.mix, D)
        if block.skip is not None:
            D = D + np.einsum("oi,nij->noj", block.skip, J)
        J = D
    return J


def logit_gap_and_gradient(net: SequentialNetwork, x, pair: LogitPairReduction):
    """(f_iy(x), grad f_iy(x)) for the pair reduction c = e_i - e_y."""
    c = pair.vector(net.output_dim)
    trace = forward(net, x)
    gap = float(c @ trace[-1])
    # reverse sweep: grad = (c^T J)^T accumulated block by block
    v = c
    for block, xk in zip(reversed(net.blocks), reversed(trace[:-1])):
        v = block.jacobian_at(xk).T @ v
    return gap, v


def compose_scalar_head(net: SequentialNetwork, pair: LogitPairReduction) -> SequentialNetwork:
    """Append the affine reduction c = e_i - e_y so the net outputs f_iy directly."""
    c = pair.vector(net.output_dim)
    head = ResidualBlock(weight=c[None, :], activation=None)
    return SequentialNetwork(
        blocks=net.blocks + (head,),
        name=f"{net.name}/gap[{pair.i}-{pair.y}]" if net.name else f"gap[{pair.i}-{pair.y}]",
        n_classes=None,
    )


def vectorized_jacobian_factors(block: ResidualBlock):
    """Rewrite the block Jacobian as vec(Dh(x)) = b + A @ act'(Wx + bias).

    Column-major flattening: entry (i, j) of Dh lands at position j*n_out + i.
    b is the flattened skip matrix and A[m, l] = mix[i, l] * weight[l, j].
    """
    if block.is_affine:
        raise ValueError("vectorized factors are not applicable to affine blocks")
    n_out, n_in, n_hidden = block.out_dim, block.in_dim, block.hidden_dim
    H = block.skip if block.skip is not None else np.zeros((n_out, n_in))
    G = block.mix if block.mix is not None else np.eye(n_out)
    b = H.flatten(order="F")
    A = np.einsum("il,lj->jil", G, block.weight).reshape(n_out * n_in, n_hidden)
    return b, A
