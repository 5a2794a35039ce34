"""Command-line surface: bound reports, certificates, verification, fixtures.

Exit codes: 0 success, 1 verification found a violated bound, 2 bad inputs
(malformed files, shape mismatches, unknown names).  Reports are canonical
JSON and byte-identical across reruns unless --timing is requested.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .certify import DEFAULT_BUDGETS, certify_sample
from .curvature import anchored_compositional_curvature, compositional_curvature
from .lipschitz import anchored_schedule, lipschitz_schedule
from .linalg import Norm
from .model import SequentialNetwork, forward_batch
from .modelio import (
    ModelFormatError,
    canonical_json,
    generate_fixture,
    load_data,
    load_model,
    model_hash,
    network_to_dict,
    save_model,
)
from .oracle import (
    SamplingPlan,
    sampled_jacobian_lipschitz_lower_bound,
    sampled_network_lipschitz,
)

BUDGET_LABELS = ("36/255", "72/255", "108/255")


def _norm_arg(parser):
    parser.add_argument("--norm", default="2", choices=["1", "2", "inf"],
                        help="perturbation norm p (default: 2)")


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return None if math.isinf(value) else value


def _write_report(report: dict, out: str | None, timing: float | None) -> None:
    if timing is not None:
        report["wall_time_s"] = timing
    text = canonical_json(report)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_anchor(args, net: SequentialNetwork):
    if args.anchor_data is None:
        return None
    X, _ = load_data(args.anchor_data, input_dim=net.input_dim)
    idx = args.anchor_index
    if idx < 0 or idx >= X.shape[0]:
        raise ModelFormatError("<anchor-index>",
                               f"index {idx} out of range for {X.shape[0]} rows")
    return X[idx]


def cmd_lipschitz(args) -> int:
    net = load_model(args.model)
    norm = Norm.parse(args.norm)
    t0 = time.perf_counter()
    anchor = _load_anchor(args, net)
    report = {
        "kind": "lipschitz",
        "model_hash": model_hash(args.model),
        "model_name": net.name,
        "norm": str(norm),
        "method": args.method,
        "anchored": anchor is not None,
        "anchor_index": args.anchor_index if anchor is not None else None,
    }
    if anchor is None:
        sched = lipschitz_schedule(net, norm, args.method)
        report["per_layer"] = list(sched.per_layer)
        report["cumulative"] = list(sched.cumulative)
    else:
        sched = anchored_schedule(net, norm, anchor)
        glob = lipschitz_schedule(net, norm, "naive")
        report["per_layer"] = list(sched.per_layer)
        report["cumulative"] = list(sched.cumulative)
        report["global_cumulative"] = list(glob.cumulative)
        report["anchored_leq_global"] = bool(
            all(a <= g * (1.0 + 1e-9) for a, g in
                zip(sched.cumulative, glob.cumulative)))
    _write_report(report, args.out,
                  time.perf_counter() - t0 if args.timing else None)
    return 0


def cmd_curvature(args) -> int:
    net = load_model(args.model)
    norm = Norm.parse(args.norm)
    t0 = time.perf_counter()
    anchor = _load_anchor(args, net)
    if anchor is None:
        rep = compositional_curvature(net, norm, layer_method=args.layer_method)
    else:
        rep = anchored_compositional_curvature(net, norm, anchor,
                                               layer_method=args.layer_method)
    report = {
        "kind": "curvature",
        "model_hash": model_hash(args.model),
        "model_name": net.name,
        "norm": str(norm),
        "layer_method": args.layer_method,
        "anchored": anchor is not None,
        "anchor_index": args.anchor_index if anchor is not None else None,
        "per_layer_jacobian_lipschitz": list(rep.per_layer),
        "cumulative_curvature": list(rep.cumulative),
        "lipschitz_per_layer": list(rep.schedule_dual.per_layer),
        "cumulative_lipschitz": list(rep.schedule.cumulative),
        "cumulative_lipschitz_dual": list(rep.schedule_dual.cumulative),
    }
    if anchor is not None:
        glob = compositional_curvature(net, norm, layer_method="naive")
        report["global_cumulative_curvature"] = list(glob.cumulative)
        report["anchored_leq_global"] = bool(
            all(a <= g * (1.0 + 1e-9) for a, g in
                zip(rep.cumulative, glob.cumulative)))
    _write_report(report, args.out,
                  time.perf_counter() - t0 if args.timing else None)
    return 0


def _certificate_record(cert) -> dict:
    rec = {
        "index": cert.sample_id,
        "label": cert.label,
        "predicted": cert.predicted,
        "correct": cert.correct,
    }
    if not cert.correct:
        rec["certified"] = False
        return rec
    rec["certified"] = True
    rec["radius"] = _finite_or_none(cert.radius)
    rec["unbounded"] = cert.radius is not None and math.isinf(cert.radius)
    rec["radius_class"] = cert.radius_class
    rec["pairs"] = [
        {
            "class": p.class_index,
            "gap": p.gap,
            "grad_dual": p.grad_dual,
            "lipschitz": p.lipschitz,
            "curvature": p.curvature,
            "radius": _finite_or_none(p.radius),
        }
        for p in cert.pairs
    ]
    return rec


def _certify_all(net, X, labels, norm, order, anchored, shared, with_attack):
    workers = int(os.environ.get("CURVCERT_THREADS", "1"))
    def one(i):
        return certify_sample(net, X[i], int(labels[i]), norm, sample_id=i,
                              order=order, anchored=anchored,
                              shared_bound=shared, with_attack=with_attack)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(X.shape[0])))
    return [one(i) for i in range(X.shape[0])]


def cmd_certify(args) -> int:
    net = load_model(args.model)
    norm = Norm.parse(args.norm)
    X, labels = load_data(args.data, input_dim=net.input_dim,
                          n_classes=net.output_dim)
    t0 = time.perf_counter()
    certs = _certify_all(net, X, labels, norm, args.order,
                         anchored=not args.global_constants,
                         shared=args.shared_bound, with_attack=False)
    radii = [c.radius for c in certs
             if c.correct and c.radius is not None and math.isfinite(c.radius)]
    n = len(certs)
    n_correct = sum(c.correct for c in certs)
    budgets = dict(zip(BUDGET_LABELS, DEFAULT_BUDGETS))
    certified_at = {
        label: sum(1 for c in certs if c.correct and c.radius is not None
                   and c.radius >= eps) / n
        for label, eps in budgets.items()
    }
    report = {
        "kind": "certify",
        "model_hash": model_hash(args.model),
        "norm": str(norm),
        "order": args.order,
        "anchored": not args.global_constants,
        "shared_bound": args.shared_bound,
        "samples": [_certificate_record(c) for c in certs],
        "summary": {
            "n": n,
            "n_correct": n_correct,
            "clean_accuracy": n_correct / n if n else 0.0,
            "n_certified": len(radii),
            "mean_radius": float(np.mean(radii)) if radii else None,
            "certified_accuracy": certified_at,
        },
    }
    _write_report(report, args.out,
                  time.perf_counter() - t0 if args.timing else None)
    return 0


def cmd_attack_certify(args) -> int:
    net = load_model(args.model)
    norm = Norm.parse(args.norm)
    X, labels = load_data(args.data, input_dim=net.input_dim,
                          n_classes=net.output_dim)
    t0 = time.perf_counter()
    certs = _certify_all(net, X, labels, norm, order=1,
                         anchored=not args.global_constants,
                         shared=args.shared_bound, with_attack=True)
    records = []
    feasible_radii = []
    for c in certs:
        rec = {"index": c.sample_id, "label": c.label, "predicted": c.predicted,
               "correct": c.correct}
        if c.correct:
            rec["feasible"] = c.attack_radius is not None
            if c.attack_radius is not None:
                rec["radius"] = c.attack_radius
                rec["class"] = c.attack_class
                rec["delta"] = [float(v) for v in c.attack_direction]
                rec["realized"] = bool(c.attack_realized)
                rec["certified_radius"] = _finite_or_none(c.radius)
                feasible_radii.append(c.attack_radius)
        records.append(rec)
    n = len(certs)
    n_correct = sum(c.correct for c in certs)
    clean_acc = n_correct / n if n else 0.0
    budgets = dict(zip(BUDGET_LABELS, DEFAULT_BUDGETS))
    upper_bounds = {}
    for label, eps in budgets.items():
        attackable = sum(1 for r in feasible_radii if r <= eps) / n if n else 0.0
        upper_bounds[label] = clean_acc - attackable
    if feasible_radii:
        counts, edges = np.histogram(np.asarray(feasible_radii), bins=20)
        histogram = {"bin_edges": [float(e) for e in edges],
                     "counts": [int(c) for c in counts]}
    else:
        histogram = {"bin_edges": [], "counts": []}
    report = {
        "kind": "attack_certify",
        "model_hash": model_hash(args.model),
        "norm": str(norm),
        "samples": records,
        "summary": {
            "n": n,
            "n_correct": n_correct,
            "clean_accuracy": clean_acc,
            "n_feasible": len(feasible_radii),
            "n_realized": sum(1 for r in records if r.get("realized")),
            "histogram": histogram,
            "robust_accuracy_upper_bound": upper_bounds,
        },
    }
    _write_report(report, args.out,
                  time.perf_counter() - t0 if args.timing else None)
    return 0


def cmd_verify(args) -> int:
    net = load_model(args.model)
    norms = [Norm.parse(args.norm)] if args.norm != "all" \
        else [Norm(1), Norm(2), Norm(math.inf)]
    corrupt = 0.45 if args.corrupt else 1.0
    failures = 0
    rows = []
    for norm in norms:
        plan = SamplingPlan(seed=args.seed, n_pairs=args.pairs, norm=norm)
        lip_sample = sampled_network_lipschitz(net, plan)
        jac_sample = sampled_jacobian_lipschitz_lower_bound(net, plan)
        checks = []
        for method in ("naive", "lt", "liplt"):
            bound = lipschitz_schedule(net, norm, method).total * corrupt
            checks.append((f"lipschitz/{method}", bound, lip_sample))
        checks.append((
            "curvature/naive",
            compositional_curvature(net, norm, "naive").total * corrupt,
            jac_sample))
        if norm.p == 2.0:
            checks.append((
                "curvature/vectorized",
                compositional_curvature(net, norm, "vectorized").total * corrupt,
                jac_sample))
            if all(b.is_plain for b in net.blocks):
                checks.append((
                    "curvature/sdp",
                    compositional_curvature(net, norm, "sdp").total * corrupt,
                    jac_sample))
        for quantity, bound, sampled in checks:
            ok = bound >= sampled
            failures += not ok
            ratio = sampled / bound if bound > 0.0 else math.inf
            rows.append((quantity, norm, bound, sampled, ratio, ok))
    for quantity, norm, bound, sampled, ratio, ok in rows:
        status = "OK  " if ok else "FAIL"
        print(f"{status} p={norm!s:<3} {quantity:<22} bound={bound:.6e} "
              f"sampled={sampled:.6e} tightness={ratio:.4f}")
    if failures:
        print(f"{failures} bound violation(s) found", file=sys.stderr)
        return 1
    print("all bounds dominate their sampled lower bounds")
    return 0


def cmd_gen_fixture(args) -> int:
    try:
        layers = [int(tok) for tok in args.layers.replace("-", ",").split(",")]
    except ValueError:
        raise ModelFormatError("<layers>", f"cannot parse {args.layers!r}") from None
    net = generate_fixture(layers, seed=args.seed, activation=args.activation,
                           residual=args.residual, target_norm=args.target_norm,
                           bias_scale=args.bias_scale, name=args.name,
                           head=not args.no_head)
    save_model(net, args.out)
    print(f"wrote {args.out} ({net.depth} blocks, input dim {net.input_dim}, "
          f"{net.output_dim} outputs)")
    return 0


def cmd_eval(args) -> int:
    net = load_model(args.model)
    X, _ = load_data(args.data, input_dim=net.input_dim)
    logits = forward_batch(net, X)[-1]
    report = {
        "kind": "eval",
        "model_hash": model_hash(args.model),
        "logits": [[float(v) for v in row] for row in logits],
    }
    _write_report(report, args.out, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvcert",
        description="Provable Lipschitz/curvature bounds and robustness certificates "
                    "for sequential residual networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lipschitz", help="Lipschitz bound report for a model")
    p.add_argument("--model", required=True)
    _norm_arg(p)
    p.add_argument("--method", default="liplt", choices=["naive", "lt", "liplt"])
    p.add_argument("--anchor-data", default=None,
                   help="CSV whose --anchor-index row anchors the bounds")
    p.add_argument("--anchor-index", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_lipschitz)

    p = sub.add_parser("curvature", help="curvature (Jacobian-Lipschitz) bound report")
    p.add_argument("--model", required=True)
    _norm_arg(p)
    p.add_argument("--layer-method", default="naive",
                   choices=["naive", "vectorized", "sdp"])
    p.add_argument("--anchor-data", default=None)
    p.add_argument("--anchor-index", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("certify", help="robustness certificates for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--order", type=int, default=1, choices=[0, 1])
    _norm_arg(p)
    p.add_argument("--shared-bound", action="store_true",
                   help="one sqrt(2)-scaled network curvature bound for all pairs")
    p.add_argument("--global-constants", action="store_true",
                   help="use global instead of anchored constants (weaker, valid)")
    p.add_argument("--out", default=None)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("attack-certify", help="provable attack radii for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    _norm_arg(p)
    p.add_argument("--shared-bound", action="store_true")
    p.add_argument("--global-constants", action="store_true")
    p.add_argument("--out", default=None)
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_attack_certify)

    p = sub.add_parser("verify", help="check every bound against sampled lower bounds")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--norm", default="all", choices=["1", "2", "inf", "all"])
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen-fixture", help="deterministic seeded model fixture")
    p.add_argument("--layers", required=True,
                   help="comma-separated dims, e.g. 2,8,8,2")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--activation", default="tanh",
                   choices=["tanh", "sigmoid", "softplus", "elu"])
    p.add_argument("--residual", action="store_true")
    p.add_argument("--target-norm", type=float, default=None,
                   help="rescale every weight to this certified spectral norm")
    p.add_argument("--bias-scale", type=float, default=0.0)
    p.add_argument("--no-head", action="store_true",
                   help="give every block the activation (no affine head)")
    p.add_argument("--name", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_fixture)

    p = sub.add_parser("eval", help="forward-evaluate a model on a data file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
