"""Batch command-line frontend with reproducible manifests.

Every subcommand writes a JSON manifest echoing its fully resolved
configuration next to its data files.  Output is deterministic given the
flag set: keys are sorted, no timestamps are recorded, rationals are
serialized as "p/q" strings and big integers as decimal strings, so
repeated runs produce byte-identical files.

Exit codes: 0 success, 1 usage error, 2 budget exceeded, 3 induction hit
the equality case, 4 construction stage failure, 5 a verification verdict
was "violated".
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from random import Random

import numpy as np

from .analysis import (
    VIOLATED,
    box_dimension,
    build_nested_family,
    cantor_product_family,
    frostman_measure,
    half_simplex,
    mc_balance,
    mc_jacobian_pushforward,
    prob_decay_sim,
)
from .construction import (
    ExponentScale,
    check_condition_double_star,
    check_conditions_star,
    check_nue_angles,
    make_schedule,
    run_construction,
)
from .errors import (
    BudgetExceededError,
    IetkitError,
    InductionUndefinedError,
    ScheduleOverflowError,
    StageError,
    UsageError,
)
from .induction import (
    BOTTOM_WINS,
    TOP_WINS,
    Iet,
    VisitationMatrix,
    balanced,
    drive_path,
    induct,
    induct_until,
    norm_at_least,
    permutation_is,
    positive_matrix,
)
from .perm import (
    LabeledPermutation,
    hyperelliptic_class,
    hyperelliptic_permutation,
    rauzy_class,
    special_permutations,
)
from .simplex_geometry import (
    plane_family,
    plane_section_concavity_test,
    simplex_volume_ratio,
)
from .symplectic import omega, verify_invariance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2
EXIT_INDUCTION = 3
EXIT_STAGE = 4
EXIT_VIOLATED = 5


# ---------------------------------------------------------------------------
# serialization helpers


def _dump_json(doc: dict, path: Path) -> None:
    path.write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _write_manifest(out: Path, command: str, config: dict, outputs: list[str]) -> Path:
    path = out / f"{command}_manifest.json"
    _dump_json(
        {"command": command, "config": config, "outputs": sorted(outputs)}, path
    )
    return path


def _frs(x) -> str:
    return str(Fraction(x))


def _parse_perm(spec: str) -> LabeledPermutation:
    """Permutation specs: sN, hyperelliptic:N, pi_L:N, pi_R:N, pi_prime:N,
    or explicit "1,2,3/3,2,1"."""
    if "/" in spec:
        top_s, bottom_s = spec.split("/", 1)
        top = tuple(int(x) for x in top_s.split(","))
        bottom = tuple(int(x) for x in bottom_s.split(","))
        return LabeledPermutation(top, bottom)
    if spec.startswith("s") and spec[1:].isdigit():
        return hyperelliptic_permutation(int(spec[1:]))
    if ":" in spec:
        name, d_s = spec.split(":", 1)
        d = int(d_s)
        if name == "hyperelliptic":
            return hyperelliptic_permutation(d)
        pi_l, pi_r, pi_prime = special_permutations(d)
        table = {"pi_L": pi_l, "pi_R": pi_r, "pi_prime": pi_prime}
        if name in table:
            return table[name]
    raise UsageError(f"cannot parse permutation spec {spec!r}")


def _parse_lengths(spec: str) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(x) for x in spec.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse lengths {spec!r}: {exc}") from None


def _parse_until(spec: str):
    if spec == "positive":
        return positive_matrix
    if ":" not in spec:
        raise UsageError(f"cannot parse stopping predicate {spec!r}")
    name, arg = spec.split(":", 1)
    if name == "balanced":
        return balanced(Fraction(arg))
    if name == "norm":
        return norm_at_least(int(float(arg)))
    if name == "perm":
        return permutation_is(_parse_perm(arg))
    raise UsageError(f"unknown stopping predicate {name!r}")


def _parse_scale(spec: str) -> ExponentScale:
    if spec == "linear":
        return ExponentScale.linear()
    if spec.startswith("linear:"):
        coeffs = [float(x) for x in spec.split(":", 1)[1].split(",")]
        if len(coeffs) != 4:
            raise UsageError("linear scale needs four coefficients c6,c4,c2,c23")
        return ExponentScale.linear(*coeffs)
    if spec == "tower":
        return ExponentScale.tower()
    raise UsageError(f"unknown scale spec {spec!r}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_classes(args) -> int:
    out = _out_dir(args)
    seed_pi = _parse_perm(args.seed_perm)
    graph = rauzy_class(seed_pi, vertex_budget=args.budget)
    d = seed_pi.d
    doc = json.loads(graph.to_json())
    degrees_ok = all(
        len(graph.out_edges(v)) == 2 and len(graph.in_edges(v)) == 2
        for v in graph.vertices
    )
    doc["summary"] = {
        "vertices": len(graph.vertices),
        "edges": len(graph.edges),
        "two_in_two_out": degrees_ok,
    }
    if d >= 4:
        pi_l, pi_r, _ = special_permutations(d)
        doc["summary"]["contains_pi_L"] = pi_l in graph
        doc["summary"]["contains_pi_R"] = pi_r in graph
    graph_file = f"classes_d{d}.json"
    _dump_json(doc, out / graph_file)
    _write_manifest(
        out,
        "classes",
        {"seed_perm": args.seed_perm, "budget": args.budget, "d": d},
        [graph_file],
    )
    print(f"class of {args.seed_perm}: {len(graph.vertices)} vertices, "
          f"{len(graph.edges)} edges")
    return EXIT_OK


def cmd_induct(args) -> int:
    out = _out_dir(args)
    T = Iet.make(_parse_lengths(args.lengths), _parse_perm(args.perm))
    if (args.steps is None) == (args.until is None):
        raise UsageError("give exactly one of --steps / --until")
    try:
        if args.steps is not None:
            trace = induct(T, args.steps)
        else:
            trace = induct_until(T, _parse_until(args.until), step_budget=args.budget)
    except InductionUndefinedError as exc:
        if exc.partial is not None:
            (out / "induct_trace.json").write_text(
                exc.partial.to_json() + "\n", encoding="utf-8"
            )
        print(f"induction undefined at step {exc.steps_completed}: {exc}",
              file=sys.stderr)
        return EXIT_INDUCTION
    (out / "induct_trace.json").write_text(trace.to_json() + "\n", encoding="utf-8")
    _write_manifest(
        out,
        "induct",
        {
            "lengths": [_frs(x) for x in T.lengths],
            "perm": args.perm,
            "steps": args.steps,
            "until": args.until,
            "budget": args.budget,
        },
        ["induct_trace.json"],
    )
    M = trace.matrix
    print(f"steps: {trace.steps}")
    print(f"final norm: {M.norm}")
    print(f"balance ratio: {float(M.balance_ratio()):.6g}")
    print(f"final permutation: {trace.induced.perm}")
    return EXIT_OK


def _construct_manifest_doc(args, run, failed: bool, completed: int) -> dict:
    doc: dict = {
        "command": "construct",
        "config": {
            "d": args.d,
            "k0": args.k0,
            "scale": args.scale,
            "stages": args.stages,
            "seed": args.seed,
            "zeta": args.zeta,
        },
        "failed": failed,
        "stages_completed": completed,
    }
    if run is None:
        return doc
    stages = []
    for st in run.stages:
        stages.append(
            {
                "k": st.k,
                "U": str(st.stats["U"]),
                "u": str(st.stats["u"]),
                "V": str(st.stats["V"]),
                "v": str(st.stats["v"]),
                "norm": str(st.cumulative.norm),
                "angle_first_to_span": st.stats["angle_first_to_span"],
                "angle_last_to_span": st.stats["angle_last_to_span"],
            }
        )
    doc["stages"] = stages
    doc["conditions_star"] = [
        {
            "stage": r.stage,
            "c1_ratio": r.c1_ratio,
            "c1_pass": r.c1_pass,
            "c2_ratio": r.c2_ratio,
            "c2_threshold": r.c2_threshold,
            "c2_pass": r.c2_pass,
            "c3_ratio": r.c3_ratio,
            "c3_pass": r.c3_pass,
            "c4_ratio": r.c4_ratio,
            "c4_pass": r.c4_pass,
        }
        for r in check_conditions_star(run)
    ]
    doc["conditions_double_star"] = [
        {
            "stage": r.stage,
            "lhs_angle": r.lhs_angle,
            "lhs_pass": r.lhs_pass,
            "rhs_angle": r.rhs_angle,
            "rhs_pass": r.rhs_pass,
        }
        for r in check_condition_double_star(run)
    ]
    doc["angle_monotonicity"] = [
        {
            "stage": r.stage,
            "lhs_angles": list(r.lhs_angles),
            "lhs_monotone": r.lhs_monotone,
            "rhs_angles": list(r.rhs_angles),
            "rhs_monotone": r.rhs_monotone,
        }
        for r in check_nue_angles(run)
    ]
    doc["limit"] = {
        "vertex_lhs": list(run.limit.vertex_lhs),
        "vertex_rhs": list(run.limit.vertex_rhs),
        "intra_lhs": run.limit.intra_lhs,
        "intra_rhs": run.limit.intra_rhs,
        "inter": run.limit.inter,
        "representative_lengths": [
            _frs(x) for x in run.limit.representative.lengths
        ],
    }
    return doc


def cmd_construct(args) -> int:
    out = _out_dir(args)
    scale = _parse_scale(args.scale)
    try:
        schedule = make_schedule(args.k0, scale, args.stages, zeta=args.zeta)
    except ScheduleOverflowError as exc:
        print(f"schedule overflows the numeric budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    try:
        run = run_construction(args.d, schedule, args.seed)
    except StageError as exc:
        doc = _construct_manifest_doc(args, None, failed=True, completed=0)
        doc["error"] = str(exc)
        _dump_json(doc, out / "construct_manifest.json")
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    doc = _construct_manifest_doc(args, run, failed=False, completed=len(run.stages))
    _dump_json(doc, out / "construct_manifest.json")
    with (out / "stages.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["k", "U", "u", "V", "v", "norm",
             "angle_first_to_span", "angle_last_to_span"]
        )
        for st in doc["stages"]:
            writer.writerow(
                [st["k"], st["U"], st["u"], st["V"], st["v"], st["norm"],
                 repr(st["angle_first_to_span"]), repr(st["angle_last_to_span"])]
            )
    for r in doc["conditions_star"]:
        c1 = "-" if r["c1_pass"] is None else ("pass" if r["c1_pass"] else "FAIL")
        print(
            f"stage {r['stage']}: condition* "
            f"(1)={c1} (2)={'pass' if r['c2_pass'] else 'FAIL'} "
            f"(3)={'pass' if r['c3_pass'] else 'FAIL'} "
            f"(4)={'pass' if r['c4_pass'] else 'FAIL'}"
        )
    print(
        f"limit clusters: intra {run.limit.intra_lhs:.3g}/"
        f"{run.limit.intra_rhs:.3g}, inter {run.limit.inter:.3g}"
    )
    return EXIT_OK


def _verify_symplectic(args, rng: Random) -> dict:
    graph = hyperelliptic_class(args.d)
    violations = 0
    for _ in range(args.paths):
        pi = graph.vertices[rng.randrange(len(graph.vertices))]
        sides = [
            rng.choice([TOP_WINS, BOTTOM_WINS])
            for _ in range(rng.randrange(1, 31))
        ]
        M, pi_end, _ = drive_path(pi, sides)
        if not verify_invariance(M, pi, pi_end):
            violations += 1
    return {"paths": args.paths, "violations": violations,
            "violated": violations > 0}


def _verify_volume(args, rng: Random) -> dict:
    violations = 0
    pi0 = hyperelliptic_permutation(args.d)
    for _ in range(args.paths):
        sides = [
            rng.choice([TOP_WINS, BOTTOM_WINS])
            for _ in range(rng.randrange(1, 21))
        ]
        M, _, _ = drive_path(pi0, sides)
        formula = simplex_volume_ratio(M, VisitationMatrix.identity(M.d))
        cols = [tuple(Fraction(x) for x in M.column(j)) for j in range(1, M.d + 1)]
        normed = [tuple(x / sum(c) for x in c) for c in cols]
        from . import _rational

        det_ratio = abs(_rational.det(_rational.mat(list(zip(*normed)))))
        if formula != det_ratio:
            violations += 1
    return {"paths": args.paths, "violations": violations,
            "violated": violations > 0}


def _verify_jacobian(args, rng: Random) -> dict:
    pi0 = hyperelliptic_permutation(args.d)
    sides = [
        rng.choice([TOP_WINS, BOTTOM_WINS]) for _ in range(10)
    ]
    M, _, _ = drive_path(pi0, sides)
    rep = mc_jacobian_pushforward(M, half_simplex(args.d), args.samples, args.seed)
    return {
        "estimate": rep.estimate,
        "predicted": rep.claim_bound,
        "stderr": rep.stderr,
        "verdict": rep.verdict,
        "violated": rep.verdict == VIOLATED,
    }


def _verify_probdecay(args, rng: Random) -> dict:
    out = {}
    violated = False
    for dep in ("independent", "adversarial-markov"):
        rep = prob_decay_sim(0.3, dep, N=60, samples=args.samples, seed=args.seed)
        out[dep] = {
            "verdict": rep.report.verdict,
            "tau_hat": rep.tau_hat,
            "window_probs": list(rep.window_probs),
            "window_bounds": list(rep.window_bounds),
        }
        violated = violated or rep.report.verdict == VIOLATED
    out["violated"] = violated
    return out


def _verify_concavity(args, rng: Random) -> dict:
    results = []
    violated = False
    frac, bound, ok = plane_section_concavity_test(
        {"ball": 1.0, "dim": 4}, np.eye(4)[:2], 1e-2, args.samples, seed=args.seed
    )
    results.append({"body": "ball", "eps": 1e-2, "fraction": frac,
                    "bound": bound, "pass": ok})
    violated = violated or not ok
    nrng = np.random.default_rng(args.seed)
    for eps in (1e-2, 1e-4):
        for trial in range(5):
            verts = nrng.standard_normal((12, 4))
            frac, bound, ok = plane_section_concavity_test(
                verts, np.eye(4)[:2], eps, max(args.samples // 10, 100),
                seed=args.seed + trial,
            )
            results.append({"body": f"polytope-{trial}", "eps": eps,
                            "fraction": frac, "bound": bound, "pass": ok})
            violated = violated or not ok
    return {"cases": results, "violated": violated}


def _verify_balance(args, rng: Random) -> dict:
    rep = mc_balance(
        hyperelliptic_permutation(args.d), zeta=20.0, K=4.0, m=8,
        samples=args.samples, seed=args.seed,
    )
    return {
        "fractions": list(rep.fractions),
        "sigma_hat": rep.sigma_hat,
        "sigma_ci_upper": rep.sigma_ci_upper,
        "violated": not rep.sigma_ci_upper < 1.0,
    }


_SUITES = {
    "symplectic": _verify_symplectic,
    "volume": _verify_volume,
    "jacobian": _verify_jacobian,
    "probdecay": _verify_probdecay,
    "concavity": _verify_concavity,
    "balance": _verify_balance,
}


def cmd_verify(args) -> int:
    if args.suite not in _SUITES:
        print(f"unknown suite {args.suite!r}; choose from "
              f"{sorted(_SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(args)
    rng = Random(args.seed)
    report = _SUITES[args.suite](args, rng)
    doc = {
        "suite": args.suite,
        "config": {
            "d": args.d,
            "paths": args.paths,
            "samples": args.samples,
            "seed": args.seed,
        },
        "report": report,
    }
    report_file = f"verify_{args.suite}.json"
    _dump_json(doc, out / report_file)
    _write_manifest(out, f"verify_{args.suite}", doc["config"], [report_file])
    status = "VIOLATED" if report.get("violated") else "ok"
    print(f"verify {args.suite}: {status}")
    return EXIT_VIOLATED if report.get("violated") else EXIT_OK


def _rebuild_run(config: dict):
    scale = _parse_scale(config["scale"])
    schedule = make_schedule(
        config["k0"], scale, config["stages"], zeta=config["zeta"]
    )
    return run_construction(config["d"], schedule, config["seed"])


def cmd_estimate_dim(args) -> int:
    out = _out_dir(args)
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        print(f"manifest not found: {manifest_path}", file=sys.stderr)
        return EXIT_USAGE
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    rows = []
    doc: dict = {"config": {"manifest": str(manifest_path), "planes": args.planes}}
    if manifest.get("command") == "synthetic-cantor":
        fam = cantor_product_family(manifest["config"]["levels"])
        families = [fam]
    elif manifest.get("command") == "construct":
        if manifest.get("failed"):
            print("manifest records a failed run", file=sys.stderr)
            return EXIT_USAGE
        run = _rebuild_run(manifest["config"])
        st1 = run.stages[0]
        fam_planes = plane_family(
            st1.phases["Aprime"].matrix,
            st1.phases["B"].matrix,
            omega(st1.phases["Aprime"].start),
        )
        families = build_nested_family(
            run, fam_planes, planes=args.planes, seed=args.seed
        )
    else:
        print("manifest is not a construct or synthetic-cantor manifest",
              file=sys.stderr)
        return EXIT_USAGE
    reports = []
    for idx, nf in enumerate(families):
        fro = frostman_measure(nf)
        pts = np.array([p.centroid for p in nf.levels[-1]])
        if args.r_grid:
            r_grid = [float(x) for x in args.r_grid.split(",")]
        else:
            r_grid = list(fro.radii)
        try:
            fit = box_dimension(pts, r_grid)
            box_est, box_counts = fit.estimate, list(fit.counts)
        except IetkitError:
            box_est, box_counts = None, []
        reports.append(
            {
                "plane": idx,
                "depth": nf.depth,
                "a": list(nf.a),
                "r_max": [r[0] for r in nf.radii],
                "r_min": [r[1] for r in nf.radii],
                "frostman_exponent": fro.exponent,
                "box_dimension": box_est,
            }
        )
        for r, m in zip(fro.radii, fro.masses):
            rows.append([idx, repr(r), repr(m)] + ([""] if not box_counts else [""]))
    doc["families"] = reports
    _dump_json(doc, out / "estimate_dim.json")
    with (out / "dim_fit.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["plane", "r", "ball_mass", "note"])
        writer.writerows(rows)
    _write_manifest(
        out, "estimate_dim", doc["config"], ["estimate_dim.json", "dim_fit.csv"]
    )
    for rep in reports:
        print(
            f"plane {rep['plane']}: depth {rep['depth']}, "
            f"frostman exponent {rep['frostman_exponent']:.4f}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ietkit",
        description="Exact Rauzy-Veech induction, staged constructions, and "
        "desk-scale measure analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classes", help="enumerate a Rauzy class")
    p.add_argument("--d", type=int, default=None,
                   help="shorthand for --seed-perm hyperelliptic:D")
    p.add_argument("--seed-perm", default=None,
                   help="seed permutation spec (default hyperelliptic:D)")
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_classes)

    p = sub.add_parser("induct", help="run exact Rauzy-Veech induction")
    p.add_argument("--lengths", required=True, help='e.g. "2/3,1/3"')
    p.add_argument("--perm", required=True, help='e.g. "s2" or "1,2/2,1"')
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--until", default=None,
                   help="balanced:Z | norm:N | positive | perm:SPEC")
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_induct)

    p = sub.add_parser("construct", help="run a staged construction")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--k0", type=int, default=1)
    p.add_argument("--scale", default="linear",
                   help="linear | linear:c6,c4,c2,c23 | tower")
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zeta", type=float, default=32.0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help="|".join(sorted(_SUITES)))
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--samples", type=lambda s: int(float(s)), default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate-dim", help="dimension estimates from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--planes", type=int, default=5)
    p.add_argument("--r-grid", default=None, help="comma-separated radii")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_estimate_dim)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.command == "classes":
        if args.seed_perm is None:
            if args.d is None:
                print("classes needs --d or --seed-perm", file=sys.stderr)
                return EXIT_USAGE
            args.seed_perm = f"hyperelliptic:{args.d}"
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceededError, ScheduleOverflowError) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InductionUndefinedError as exc:
        print(f"induction undefined: {exc}", file=sys.stderr)
        return EXIT_INDUCTION
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
