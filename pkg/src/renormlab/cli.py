"""Scenario runner and report emitter.

``renorm-lab run scenario.json --out reports/`` executes the scenario's
tasks in order and writes one JSON report per task plus a summary; reports
embed the parameter provenance so every number is replayable.  Exit codes:
0 all assertions pass, 1 an assertion failed, 2 input error.

``renorm-lab eval`` exposes the one-shot flags (--space, --group, --check,
--orbits, --norm, --dual, --certify, --bounded-group) for quick queries.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import io as rio
from .bounded import conjugate, group_norm, m_weight
from .detector import certify
from .norm import (
    RenormConfig,
    build_config,
    build_matrix,
    dual_norm_atoms,
    dual_norm_delta,
    solve_unit,
    triple_norm,
    witness_for_tuple,
    witness_function,
)
from .operators import (
    GroupSpec,
    check_local_equicontinuity,
    check_sot_convergence,
    circle_rotation,
    compose,
    identity,
    interval_flip,
    lift,
    line_translation,
    multiplication,
    onepoint_swap_group,
    remark25_sequence,
)
from .orbits import orbit_closure
from .space import SampledSpace, builtin_space, validate_metric
from .tuples import verify_bmap


class InputError(Exception):
    pass


# ----------------------------------------------------------------------
# scenario object construction


def make_space(spec: dict) -> SampledSpace:
    if "file" in spec:
        return rio.load_space(spec["file"])
    if "builtin" in spec:
        return builtin_space(spec["builtin"], **spec.get("params", {}))
    raise InputError("space spec needs 'builtin' or 'file'")


def make_group(spec: dict, space: SampledSpace) -> GroupSpec:
    if "file" in spec:
        return rio.load_group(spec["file"], space)
    kind = spec.get("builtin")
    word_cap = int(spec.get("word_cap", 6))
    if kind == "trivial":
        return GroupSpec.trivial(space, word_cap=1)
    if kind == "rotation":
        q = int(spec.get("q", 12))
        if space.aux.get("kind") == "circle":
            gen = circle_rotation(space, steps=space.aux["count"] // q, label=f"rot2pi/{q}")
            return GroupSpec((gen,), word_cap=word_cap, closure_tag=True, label=f"rot{q}")
        if space.aux.get("kind") == "product" and space.aux["a"].aux.get("kind") == "circle":
            circ = space.aux["a"]
            gen = circle_rotation(circ, steps=circ.aux["count"] // q, label=f"rot2pi/{q}")
            return GroupSpec((lift(gen, space, "left"),), word_cap=word_cap,
                             closure_tag=True, label=f"rot{q}-lift")
        raise InputError("rotation group needs a circle or circle-product space")
    if kind == "onepoint_swaps":
        return onepoint_swap_group(space, word_cap=int(spec.get("word_cap", 2)),
                                   count=spec.get("count"))
    raise InputError(f"unknown group spec {spec!r}")


def make_operator(spec: dict, space: SampledSpace, group: GroupSpec | None = None):
    if "file" in spec:
        return rio.load_operator(spec["file"], space)
    kind = spec.get("builtin")
    if kind == "identity":
        return identity(space)
    if kind == "translation":
        return line_translation(space, float(spec["offset"]))
    if kind == "multiplication":
        return compose(multiplication(space, float(spec["factor"])), identity(space))
    if kind == "generator_word":
        if group is None:
            raise InputError("generator_word needs a group")
        op = identity(space)
        for gi in spec.get("indices", [0]):
            op = compose(op, group.generators[int(gi)])
        op.label = "word:" + ",".join(str(i) for i in spec.get("indices", [0]))
        return op
    if kind == "rotation_flip":
        aux = space.aux
        if aux.get("kind") != "product":
            raise InputError("rotation_flip needs a product space")
        circ, seg = aux["a"], aux["b"]
        q = int(spec.get("q", 12))
        rot = lift(circle_rotation(circ, steps=circ.aux["count"] // q), space, "left")
        flip = lift(interval_flip(seg), space, "right")
        out = compose(rot, flip)
        out.label = "rotation+flip"
        return out
    raise InputError(f"unknown operator spec {spec!r}")


# ----------------------------------------------------------------------
# random test functions


def random_piecewise_linear(space: SampledSpace, rng: np.random.Generator, knots: int = 12) -> np.ndarray:
    aux = space.aux
    if aux.get("kind") == "line":
        coords = aux["coords"]
        kx = np.sort(rng.choice(coords, size=min(knots, len(coords)), replace=False))
        ky = rng.uniform(-1.0, 1.0, size=len(kx))
        return np.interp(coords, kx, ky)
    # generic fallback: smooth-ish random field via a few anchor points
    anchors = rng.integers(0, space.n, size=min(knots, space.n))
    vals = rng.uniform(-1.0, 1.0, size=len(anchors))
    scale = max(space.dmat.max() / 4, space.resolution)
    weights = np.exp(-space.dmat[:, anchors] / scale)
    return (weights * vals).sum(axis=1) / weights.sum(axis=1)


def lipschitz_constant(space: SampledSpace, x: np.ndarray) -> float:
    diff = np.abs(x[:, None] - x[None, :])
    d = space.dmat + np.eye(space.n)
    return float((diff / d).max())


# ----------------------------------------------------------------------
# tasks


def task_build_config(cfg: RenormConfig, scenario: dict) -> dict:
    metric_report = validate_metric(cfg.space)
    return {
        "ok": bool(metric_report["ok"]),
        "provenance": cfg.provenance(),
        "metric_report": metric_report,
        "base_points": [cfg.space.points[i] for i in cfg.base_points],
        "selection_audit": cfg.selection_audit[:20],
        "registry_size": len(cfg.registry.all_classes()),
        "registry": cfg.registry.to_records(cfg.space.points)[:200],
        "compactness_note": "compactness at sample scale means containment in an exhaustion element",
    }


def task_verify_bmap(cfg: RenormConfig, scenario: dict) -> dict:
    report = verify_bmap(cfg.bc, cfg.depth, cfg.registry)
    return {"ok": report["ok"], "report": {k: v for k, v in report.items()},
            "provenance": cfg.provenance()}


def task_norm_suite(cfg: RenormConfig, scenario: dict, rng: np.random.Generator) -> dict:
    count = int(scenario.get("norm_suite", {}).get("count", 50))
    worst_lower = 0.0
    worst_upper = 0.0
    worst_bound = 0.0
    for _ in range(count):
        x = random_piecewise_linear(cfg.space, rng)
        sup = float(np.max(np.abs(x)))
        if sup == 0:
            continue
        res = triple_norm(x, cfg)
        worst_lower = max(worst_lower, (sup - res.value) / sup)
        worst_upper = max(worst_upper, (res.value - cfg.bc.C * sup) / sup)
        worst_bound = max(worst_bound, res.truncation_bound / sup)
    ok = worst_lower <= 1e-12 and worst_upper <= 1e-12 and worst_bound <= 0.02
    return {
        "ok": bool(ok),
        "functions": count,
        "worst_lower_defect": worst_lower,
        "worst_upper_excess": worst_upper,
        "worst_relative_truncation_bound": worst_bound,
        "coverage_defect": cfg.coverage_defect,
        "provenance": cfg.provenance(),
    }


def task_dual_suite(cfg: RenormConfig, scenario: dict, rng: np.random.Generator) -> dict:
    params = scenario.get("dual_suite", {})
    tuple_budget = int(params.get("tuples", 10))
    betas = np.linspace(0.8, 1.0, int(params.get("beta_grid", 5)))
    entries = []
    ok = True
    picked = 0
    for n in (1, 2):
        for start in range(1, cfg.base_count - n):
            if picked >= tuple_budget:
                break
            t = cfg.base_tuple(start, n)
            fp = solve_unit(build_matrix(t, cfg))
            vals = []
            for b in betas:
                beta = np.full(n + 1, b)
                v, _ = dual_norm_atoms(t, beta, cfg)
                vals.append(v)
                if not (0.8 * (n + 1) * 0.8 - 1e-9 <= v <= (n + 1) + 1e-9):
                    ok = False
            if any(b2 < b1 - 1e-12 for b1, b2 in zip(vals, vals[1:])):
                ok = False  # must be monotone in beta
            entries.append({
                "tuple": [cfg.space.points[p] for p in t.points],
                "fingerprint": [float(v) for v in fp],
                "values": vals,
            })
            picked += 1
    delta_checks = []
    for i in range(1, min(4, cfg.base_count + 1)):
        p = cfg.base_points[i - 1]
        check = {
            "point": cfg.space.points[p],
            "dual": dual_norm_delta(p, cfg),
            "expected": 1.0 / cfg.lam(i),
        }
        # lower-bound evidence: maximize the atom pairing over a witness bump
        try:
            t = cfg.base_tuple(i, 1) if i < cfg.base_count else cfg.base_tuple(i - 1, 1)
            u = (1.0 / cfg.lam(t.start), 1.0 / cfg.lam(t.start + 1))
            spec = witness_for_tuple(t, cfg, u, eps=0.02)
            x, _ = witness_function(spec, cfg)
            ratio = float(x[p]) / triple_norm(x, cfg).value
            check["bump_lower_bound"] = ratio
            if ratio < (1 - 0.02) * check["dual"]:
                ok = False
        except ValueError as exc:
            check["bump_lower_bound"] = None
            check["bump_note"] = str(exc)
        delta_checks.append(check)
        if abs(check["dual"] - check["expected"]) > 1e-12:
            ok = False
    return {"ok": bool(ok), "entries": entries, "delta_checks": delta_checks,
            "provenance": cfg.provenance()}


def task_detect(cfg: RenormConfig, scenario: dict) -> dict:
    reports = []
    ok = True
    for spec in scenario.get("detect", []):
        op = make_operator(spec, cfg.space, cfg.group)
        verdict = certify(op, cfg, test_depth=int(spec.get("test_depth", 4)))
        rep = {
            "operator": op.label,
            "verdict": verdict.verdict,
            "weight_ok": verdict.weight.weight_ok,
            "max_weight_deviation": verdict.weight.max_weight_deviation,
            "approx_group_element": verdict.approx_group_element,
            "witness": verdict.witness,
            "caps": verdict.caps,
            "checks": [
                {"tuple": list(c.tuple_points), "image": list(c.image_points),
                 "outcome": c.outcome, "detail": c.detail}
                for c in verdict.orbit_checks
            ],
        }
        expect = spec.get("expect")
        if expect is not None:
            rep["expect"] = expect
            if verdict.verdict != expect:
                ok = False
        reports.append(rep)
    return {"ok": bool(ok), "operators": reports, "provenance": cfg.provenance()}


def task_sot_gallery(space: SampledSpace, scenario: dict) -> dict:
    if space.aux.get("kind") != "remark25":
        raise InputError("sot-gallery runs on the remark25 space")
    params = scenario.get("sot_gallery", {})
    eps = float(params.get("eps", 0.01))
    seq = remark25_sequence(space)
    lim = identity(space)
    # the top exhaustion element is the whole truncated sample: its
    # convergence threshold sits one step beyond the sampled horizon, so the
    # gallery checks the compacts whose thresholds are in-horizon
    K_list = list(space.exhaustion[:-1])
    verdict = check_sot_convergence(seq, lim, K_list, eps)
    x = (np.asarray(space.aux["first"]) == 0).astype(float)
    gaps = [float(np.max(np.abs(g.apply(x) - x))) for g in seq]
    n_max = space.aux["n_max"]
    tail_col = [space.index(f"(0,{i})") for i in range(3, n_max + 1)] + [space.index("(0,inf)")]
    eq = check_local_equicontinuity(
        [g.backward for g in seq], space.compact(tail_col, "column-tail"),
        (0.5,), space=space,
    )
    cond = {c.name: c for c in verdict.conditions}
    ok = (
        cond["phi_uniform"].passed
        and cond["weight_uniform"].passed
        and not cond["inverse_images"].passed
        and cond["inverse_images"].witness is not None
        and all(abs(g - 1.0) < 1e-15 for g in gaps)
        and not eq.equicontinuous
    )
    return {
        "ok": bool(ok),
        "eps": eps,
        "compacts_checked": [K.label for K in K_list],
        "top_element_note": "K_top equals the truncated sample; threshold exceeds horizon",
        "conditions": {
            name: {"passed": c.passed, "witness": c.witness, "thresholds": c.thresholds}
            for name, c in cond.items()
        },
        "moreover_applicable": verdict.moreover_applicable,
        "moreover_detail": verdict.moreover_detail,
        "sup_gaps_of_explicit_function": gaps,
        "inverse_family_equicontinuous": eq.equicontinuous,
    }


def task_bounded_suite(space: SampledSpace, group: GroupSpec, scenario: dict,
                       rng: np.random.Generator) -> dict:
    if space.aux.get("kind") != "onepoint01N":
        raise InputError("bounded-suite runs on the onepoint01N space")
    bgn = m_weight(group)
    n_max = space.aux["n_max"]
    inf_idx = space.index("inf")
    ok = bgn.m[inf_idx] == 1.0
    m_checks = {"inf": float(bgn.m[inf_idx])}
    for n in range(1, n_max + 1):
        i1 = space.index(f"(1,{n})")
        i0 = space.index(f"(0,{n})")
        if bgn.m[i1] != 0.5 or bgn.m[i0] != 1.0:
            ok = False
    ok = ok and ("inf" in bgn.flagged)
    conj_dev = 0.0
    for n in (1, 2, n_max):
        g = group.generators[n - 1]
        cg = conjugate(g, bgn)
        conj_dev = max(conj_dev, float(np.max(np.abs(cg.weight - 1.0))))
        for _ in range(50):
            f = rng.uniform(-1, 1, size=space.n)
            conj_dev = max(conj_dev, abs(float(np.max(np.abs(cg.apply(f))))
                                         - float(np.max(np.abs(f)))))
    ok = ok and conj_dev <= 1e-12
    agree = True
    for _ in range(20):
        f = rng.uniform(-1, 1, size=space.n)
        res = group_norm(f, bgn)
        agree = agree and res.agree
    ok = ok and agree
    return {
        "ok": bool(ok),
        "m_checks": m_checks,
        "flagged": bgn.flagged,
        "C_G": bgn.C_G,
        "cap_trace": bgn.cap_trace,
        "max_conjugation_deviation": conj_dev,
        "group_norm_formulas_agree": agree,
    }


# ----------------------------------------------------------------------
# runner


def run(scenario: dict, out_dir: Path, seed: int | None = None) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(scenario.get("seed", 0)) if seed is None else seed
    rng = np.random.default_rng(seed)
    tasks = scenario.get("tasks", [])
    summary = {"seed": seed, "tasks": {}, "scenario": scenario}
    space = make_space(scenario["space"])
    group = make_group(scenario.get("group", {"builtin": "trivial"}), space)
    cfg: RenormConfig | None = None

    def ensure_cfg() -> RenormConfig:
        nonlocal cfg
        if cfg is None:
            cfg = build_config(
                space,
                group,
                C=float(scenario.get("C", 1.1)),
                depth=int(scenario.get("depth", 6)),
                gamma_cap=scenario.get("gamma_cap"),
                base_count=scenario.get("base_count"),
            )
        return cfg

    exit_code = 0
    for task in tasks:
        try:
            if task == "build-config":
                report = task_build_config(ensure_cfg(), scenario)
            elif task == "verify-bmap":
                report = task_verify_bmap(ensure_cfg(), scenario)
            elif task == "norm-suite":
                report = task_norm_suite(ensure_cfg(), scenario, rng)
            elif task == "dual-suite":
                report = task_dual_suite(ensure_cfg(), scenario, rng)
            elif task == "detect":
                report = task_detect(ensure_cfg(), scenario)
            elif task == "sot-gallery":
                report = task_sot_gallery(space, scenario)
            elif task == "bounded-suite":
                report = task_bounded_suite(space, group, scenario, rng)
            else:
                raise InputError(f"unknown task {task!r}")
        except InputError:
            raise
        except Exception as exc:  # assertion-level failure inside a task
            report = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
        rio.dump_json(report, out_dir / f"{task}.json")
        summary["tasks"][task] = report.get("ok", False)
        if not report.get("ok", False):
            exit_code = 1
    rio.dump_json(summary, out_dir / "summary.json")
    return exit_code


# ----------------------------------------------------------------------
# one-shot evaluation


def eval_command(args) -> int:
    if args.space is None:
        raise InputError("--space is required")
    spec = {"file": args.space} if args.space.endswith(".json") else {"builtin": args.space}
    space = make_space(spec)
    group = None
    if args.group:
        gspec = {"file": args.group} if args.group.endswith(".json") else {"builtin": args.group}
        group = make_group(gspec, space)
    out: dict = {}
    if args.check:
        if group is None:
            raise InputError("--check needs --group")
        seq = list(group.generators)
        lim = identity(space)
        if args.check == "sot":
            verdict = check_sot_convergence(seq, lim, list(space.exhaustion), 1e-2)
            out = {
                "converges": verdict.converges,
                "conditions": {c.name: c.passed for c in verdict.conditions},
                "weight_bound": verdict.weight_bound,
            }
        elif args.check == "equicont":
            rep = check_local_equicontinuity(seq, space.top_exhaustion, (0.5, 0.25, 0.1),
                                             space=space)
            out = {"equicontinuous": rep.equicontinuous, "table": rep.table,
                   "witnesses": [(e, list(wit)) for e, wit in rep.witnesses]}
        else:
            raise InputError("--check must be sot or equicont")
    elif args.orbits:
        if group is None:
            raise InputError("--orbits needs --group")
        points = tuple(space.index(p.strip()) for p in args.orbits.split(","))
        orb = orbit_closure(group, points)
        out = {
            "base": [space.points[i] for i in orb.base],
            "word_cap": orb.word_cap,
            "samples": [[space.points[i] for i in s] for s in orb.samples],
            "window_clipped": orb.window_clipped,
        }
    elif args.norm or args.dual or args.certify:
        if group is None:
            group = GroupSpec.trivial(space)
        cfg = build_config(space, group, C=args.C, depth=args.depth,
                           gamma_cap=args.gamma_cap)
        if args.norm:
            x = rio.load_function(args.norm, space)
            res = triple_norm(x, cfg)
            out = {
                "value": res.value,
                "truncation_bound": res.truncation_bound,
                "argmax_window": list(res.argmax_window),
                "argmax_points": list(res.argmax_points),
                "gamma_capped": res.gamma_capped,
                "coverage_defect": res.coverage_defect,
                "provenance": cfg.provenance(),
            }
        elif args.dual:
            ids = [p.strip() for p in args.dual[0].split(",")]
            beta = [float(b) for b in args.dual[1:]]
            points = tuple(space.index(p) for p in ids)
            value, fp = dual_norm_atoms(points, beta, cfg)
            out = {"value": value, "fingerprint": [float(v) for v in fp],
                   "provenance": cfg.provenance()}
        else:
            op = rio.load_operator(args.certify, space)
            verdict = certify(op, cfg)
            out = {"verdict": verdict.verdict, "witness": verdict.witness,
                   "approx_group_element": verdict.approx_group_element,
                   "caps": verdict.caps}
    elif args.bounded_group:
        bspace = space
        bgroup = rio.load_group(args.bounded_group, bspace) if args.bounded_group.endswith(".json") \
            else onepoint_swap_group(bspace)
        bgn = m_weight(bgroup)
        out = {"C_G": bgn.C_G, "cap_trace": bgn.cap_trace}
        if args.mg_report:
            out["m"] = {bspace.points[i]: float(v) for i, v in enumerate(bgn.m)}
            out["flagged"] = bgn.flagged
    else:
        out = {"space": space.name, "n": space.n,
               "metric_report": validate_metric(space)}
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="renorm-lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default="reports")
    p_run.add_argument("--seed", type=int, default=None)

    p_eval = sub.add_parser("eval", help="one-shot evaluations")
    p_eval.add_argument("--space", help="builtin name or space file")
    p_eval.add_argument("--group", help="builtin name or group file")
    p_eval.add_argument("--check", choices=["sot", "equicont"])
    p_eval.add_argument("--orbits", help="comma-separated point ids")
    p_eval.add_argument("--norm", help="function file")
    p_eval.add_argument("--dual", nargs="+", help="tuple-ids beta0 beta1 ...")
    p_eval.add_argument("--certify", help="operator file")
    p_eval.add_argument("--bounded-group", dest="bounded_group")
    p_eval.add_argument("--mg-report", dest="mg_report", action="store_true")
    p_eval.add_argument("--depth", type=int, default=4)
    p_eval.add_argument("--C", type=float, default=1.1)
    p_eval.add_argument("--gamma-cap", dest="gamma_cap", type=int, default=None)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            scenario = json.loads(Path(args.scenario).read_text())
            return run(scenario, Path(args.out), seed=args.seed)
        return eval_command(args)
    except (InputError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
