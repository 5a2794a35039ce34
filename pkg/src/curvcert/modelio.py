"""Model/data file formats, report serialization, and seeded fixture generation.

Models are JSON (human-auditable, diff-friendly), data is CSV with feature
columns followed by an integer label column.  All floats go through Python's
shortest-round-trip repr, so write -> read is lossless in 64-bit.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .activations import BUILTIN_NAMES, builtin
from .linalg import Norm, operator_norm
from .model import ResidualBlock, SequentialNetwork

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """A malformed model/data file; carries the offending field for diagnostics."""

    def __init__(self, field: str, message: str):
        super().__init__(f"field {field!r}: {message}")
        self.field = field


def _matrix_field(value, field: str, allow_none: bool) -> Optional[np.ndarray]:
    if value is None:
        if allow_none:
            return None
        raise ModelFormatError(field, "must be a nested array, not null")
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ModelFormatError(field, "is not a numeric nested array") from None
    if arr.ndim != 2:
        raise ModelFormatError(field, f"must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError(field, "contains non-finite entries")
    return arr


def block_from_dict(raw: dict, index: int) -> ResidualBlock:
    where = f"blocks[{index}]"
    if not isinstance(raw, dict):
        raise ModelFormatError(where, "must be an object")
    W = _matrix_field(raw.get("W"), f"{where}.W", allow_none=False)
    H = _matrix_field(raw.get("H"), f"{where}.H", allow_none=True)
    G = _matrix_field(raw.get("G"), f"{where}.G", allow_none=True)
    bias = raw.get("bias")
    if bias is not None:
        bias = np.asarray(bias, dtype=float)
        if bias.ndim != 1:
            raise ModelFormatError(f"{where}.bias", "must be a flat array")
    act_name = raw.get("activation")
    activation = None
    if act_name is not None:
        if act_name not in BUILTIN_NAMES:
            raise ModelFormatError(f"{where}.activation",
                                   f"unknown activation {act_name!r}")
        activation = builtin(act_name)
    try:
        return ResidualBlock(weight=W, skip=H, mix=G, bias=bias, activation=activation)
    except ValueError as exc:
        raise ModelFormatError(where, str(exc)) from None


def block_to_dict(block: ResidualBlock) -> dict:
    return {
        "H": None if block.skip is None else block.skip.tolist(),
        "G": None if block.mix is None else block.mix.tolist(),
        "W": block.weight.tolist(),
        "bias": None if block.bias is None else block.bias.tolist(),
        "activation": None if block.activation is None else block.activation.name,
    }


def network_from_dict(doc: dict) -> SequentialNetwork:
    if not isinstance(doc, dict):
        raise ModelFormatError("<root>", "model file must contain a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError("format_version",
                               f"unrecognized version {version!r}")
    blocks_raw = doc.get("blocks")
    if not isinstance(blocks_raw, list) or not blocks_raw:
        raise ModelFormatError("blocks", "must be a non-empty list")
    blocks = [block_from_dict(raw, k) for k, raw in enumerate(blocks_raw)]
    meta = doc.get("metadata") or {}
    try:
        net = SequentialNetwork(blocks=tuple(blocks), name=str(meta.get("name", "")),
                                n_classes=meta.get("n_classes"))
    except ValueError as exc:
        raise ModelFormatError("blocks", str(exc)) from None
    declared = doc.get("input_dim")
    if declared is not None and declared != net.input_dim:
        raise ModelFormatError("input_dim",
                               f"declared {declared} but blocks expect {net.input_dim}")
    return net


def network_to_dict(net: SequentialNetwork) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "input_dim": net.input_dim,
        "metadata": {"name": net.name, "n_classes": net.n_classes},
        "blocks": [block_to_dict(b) for b in net.blocks],
    }


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_model(path) -> SequentialNetwork:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError("<root>", f"invalid JSON: {exc}") from None
    return network_from_dict(doc)


def save_model(net: SequentialNetwork, path) -> None:
    Path(path).write_text(canonical_json(network_to_dict(net)))


def model_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_data(path, input_dim: Optional[int] = None,
              n_classes: Optional[int] = None):
    """CSV with feature columns then an integer label column; header optional."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ModelFormatError("<data>", "empty data file")
    start = 0
    try:
        [float(tok) for tok in lines[0].split(",")]
    except ValueError:
        start = 1            # header row
    rows = []
    for ln_no, line in enumerate(lines[start:], start=start + 1):
        toks = line.split(",")
        try:
            rows.append([float(t) for t in toks])
        except ValueError:
            raise ModelFormatError(f"<data>:line {ln_no}",
                                   "non-numeric value") from None
    arr = np.asarray(rows, dtype=float)
    if arr.shape[1] < 2:
        raise ModelFormatError("<data>", "need at least one feature and a label column")
    X, labels_f = arr[:, :-1], arr[:, -1]
    labels = labels_f.astype(int)
    if np.any(labels != labels_f):
        raise ModelFormatError("<data>.label", "labels must be integers")
    if input_dim is not None and X.shape[1] != input_dim:
        raise ModelFormatError(
            "<data>", f"{X.shape[1]} feature columns but the model expects {input_dim}")
    if n_classes is not None and (np.any(labels < 0) or np.any(labels >= n_classes)):
        raise ModelFormatError("<data>.label",
                               f"labels must lie in [0, {n_classes})")
    return X, labels


def save_data(X: np.ndarray, labels: np.ndarray, path, header: bool = False) -> None:
    lines = []
    if header:
        lines.append(",".join([f"x{j}" for j in range(X.shape[1])] + ["label"]))
    for row, lab in zip(X, labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(lab)}")
    Path(path).write_text("\n".join(lines) + "\n")


def generate_fixture(layers: list[int], seed: int, activation: str = "tanh",
                     residual: bool = False, target_norm: Optional[float] = None,
                     bias_scale: float = 0.0, name: str = "",
                     head: bool = True) -> SequentialNetwork:
    """Deterministic Gaussian fixture; same seed gives the identical network.

    All blocks but the last carry the activation; the last is the affine head
    unless head=False, in which case every block is an activation block.
    With target_norm, each weight matrix is rescaled so its certified spectral
    norm hits the target (within rounding); residual fixtures get a skip path
    scaled to half the target and an explicit mix matrix.
    """
    if len(layers) < 2 or any(d < 1 for d in layers):
        raise ValueError("layers must be at least [in, out] with positive dims")
    if activation not in BUILTIN_NAMES:
        raise ValueError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    spec = builtin(activation)
    blocks = []
    for k in range(len(layers) - 1):
        n_in, n_out = layers[k], layers[k + 1]
        is_head = head and k == len(layers) - 2
        W = rng.standard_normal((n_out, n_in)) / math.sqrt(n_in)
        if target_norm is not None:
            W = W * (target_norm / operator_norm(W, Norm(2)))
        bias = rng.standard_normal(n_out) * bias_scale if bias_scale else None
        if is_head:
            blocks.append(ResidualBlock(weight=W, bias=bias, activation=None))
            continue
        skip = mix = None
        if residual:
            skip = rng.standard_normal((n_out, n_in)) / math.sqrt(n_in)
            mix = rng.standard_normal((n_out, n_out)) / math.sqrt(n_out)
            if target_norm is not None:
                skip = skip * (0.5 * target_norm / operator_norm(skip, Norm(2)))
                mix = mix * (target_norm / operator_norm(mix, Norm(2)))
        blocks.append(ResidualBlock(weight=W, skip=skip, mix=mix, bias=bias,
                                    activation=spec))
    return SequentialNetwork(blocks=tuple(blocks),
                             name=name or f"fixture-{activation}-{seed}",
                             n_classes=layers[-1])
