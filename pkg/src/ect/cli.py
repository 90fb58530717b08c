"""Command-line front end: benchmarks, simulations, verification suites.

Subcommands: bench, simulate, verify, depth, train, predict. Exit codes:
0 all checks passed, 1 a checked invariant failed, 2 usage error, 3 an
exhaustive search refused to exceed its resource cap.

The master seed defaults to 1, can come from the ECT_SEED environment
variable, and is overridden by --seed. Learner settings are read from
--config (key=value lines: learner.kind, learner.lr, learner.epochs,
learner.seed) with command-line flags taking precedence. All report files
keep volatile fields (timestamps) in a separate metadata section so the data
sections are byte-identical across runs with equal seeds.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
import numpy as np

from . import analysis, data
from .core import build_balanced_tree
from .learners import LearnerSpec
from .reductions import (
    ReductionModel,
    train_all_pairs,
    train_apft,
    train_cs_filter_tree,
    train_filter_tree,
    train_tree,
)
from .tournaments import (
    ResourceRefusal,
    TrueOrderComparator,
    build_final_tree,
    build_schedule,
    make_adversary,
    min_dethroning_cost,
    parity_adversary_run,
    run_tournament,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_REFUSED = 3

METHODS = ("tree", "filter_tree", "all_pairs", "apft")


def read_config(path) -> dict:
    cfg = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("ECT_SEED")
    if env is not None:
        return int(env)
    return 1


def learner_from_args(args, cfg) -> LearnerSpec:
    def pick(flag, key, default, cast):
        if flag is not None:
            return flag
        if key in cfg:
            return cast(cfg[key])
        return default

    return LearnerSpec(
        kind=pick(args.learner, "learner.kind", "logistic_sgd", str),
        lr=pick(args.lr, "learner.lr", 0.1, float),
        epochs=pick(args.epochs, "learner.epochs", 10, int),
        seed=pick(args.learner_seed, "learner.seed", 42, int),
    )


def write_report(path, payload_data, extra_meta=None):
    """JSON report with the volatile fields quarantined under "meta"."""
    meta = {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%S"), **(extra_meta or {})}
    with open(path, "w") as f:
        json.dump({"meta": meta, "data": payload_data}, f, sort_keys=True, indent=1)
        f.write("\n")


# ---------------------------------------------------------------------------
# bench


def _bench_dataset(ds, spec, master_seed, n_splits):
    tree = build_balanced_tree(ds.k)
    errs = {m: [] for m in METHODS}
    for i in range(n_splits):
        tr, te = data.split_indices(len(ds.y), data.split_seed(master_seed, i))
        Xtr, ytr = ds.X[tr], ds.y[tr]
        Xte, yte = ds.X[te], ds.y[te]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            models = {
                "tree": train_tree(Xtr, ytr, tree, spec),
                "filter_tree": train_filter_tree(Xtr, ytr, tree, spec),
                "all_pairs": train_all_pairs(Xtr, ytr, ds.k, spec),
                "apft": train_apft(Xtr, ytr, tree, spec),
            }
        for name, model in models.items():
            errs[name].append(float(np.mean(model.predict(Xte) != yte)))
    row = {"dataset": ds.name, "k": ds.k, "n": int(len(ds.y)), "splits": n_splits}
    for name in METHODS:
        row[name] = round(100.0 * float(np.mean(errs[name])), 4)
    row["best"] = min(METHODS, key=lambda mname: row[mname])
    return row


def _format_bench_markdown(rows):
    lines = ["| dataset | k | tree | filter_tree | all_pairs | apft |", "|---|---|---|---|---|---|"]
    for row in rows:
        cells = []
        for name in METHODS:
            val = f"{row[name]:.2f}"
            cells.append(f"**{val}**" if name == row["best"] else val)
        lines.append(f"| {row['dataset']} | {row['k']} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _bench_worker(job):
    """Top-level so a worker pool can pickle it; returns (row, failure)."""
    name, label_column, spec, seed, splits = job
    try:
        ds = data.load_dataset(name.strip(), label_column)
    except Exception as exc:  # unreadable datasets become row-level errors
        return None, {"dataset": name, "error": str(exc)}
    return _bench_dataset(ds, spec, seed, splits), None


def cmd_bench(args, cfg):
    seed = resolve_seed(args)
    spec = learner_from_args(args, cfg)
    names = args.datasets.split(",")
    jobs = [(name, args.label_column, spec, seed, args.splits) for name in names]
    if args.jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(args.jobs) as pool:
            outcomes = pool.map(_bench_worker, jobs)  # merge keeps input order
    else:
        outcomes = [_bench_worker(job) for job in jobs]
    rows = []
    failures = []
    for (row, failure), name in zip(outcomes, names):
        if failure is not None:
            failures.append(failure)
            print(f"bench: skipping {name}: {failure['error']}", file=sys.stderr)
        else:
            rows.append(row)
    payload = {
        "rows": rows,
        "failures": failures,
        "seed": seed,
        "splits": args.splits,
        "learner": {"kind": spec.kind, "lr": spec.lr, "epochs": spec.epochs, "seed": spec.seed},
    }
    os.makedirs(args.out_dir, exist_ok=True)
    write_report(os.path.join(args.out_dir, "bench.json"), payload)
    md = _format_bench_markdown(rows)
    with open(os.path.join(args.out_dir, "bench.md"), "w") as f:
        f.write(md)
    with open(os.path.join(args.out_dir, "bench.csv"), "w") as f:
        f.write("dataset,k,n,splits," + ",".join(METHODS) + ",best\n")
        for row in rows:
            f.write(
                f"{row['dataset']},{row['k']},{row['n']},{row['splits']},"
                + ",".join(f"{row[m]:.4f}" for m in METHODS)
                + f",{row['best']}\n"
            )
    print(md, end="")
    if failures and not rows:
        return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args, cfg):
    seed = resolve_seed(args)
    pair = tuple(int(v) for v in args.pair.split(",")) if args.pair else None
    adversary = make_adversary(
        args.adversary,
        k=args.k,
        budget=args.budget,
        rate=args.rate,
        pair=pair,
        seed=seed,
        declared_rounds=args.declared_rounds,
    )
    comparator = TrueOrderComparator(args.k)
    winner, transcript = run_tournament(
        (args.k, args.m, args.semantics),
        None,
        comparator,
        adversary,
        repeated_finals=args.repeated,
    )
    summary = {
        "k": args.k,
        "m": args.m,
        "semantics": args.semantics,
        "adversary": args.adversary,
        "seed": seed,
        "winner": int(winner),
        "best": int(comparator.best),
        "first_phase_winners": [int(v) for v in transcript.first_phase_winners],
        "weighted_error_total": transcript.weighted_error_total,
        "contradictions": transcript.contradictions,
        "rounds_first_phase": transcript.rounds_first_phase,
        "rounds_total": transcript.rounds_total,
        "importance_depth": transcript.importance_depth,
    }
    if args.adversary == "parity":
        res = parity_adversary_run(args.k, args.m, args.semantics, pair)
        summary["parity_ratio"] = res.ratio if math.isfinite(res.ratio) else "unbounded"
    if args.transcript:
        transcript.write_jsonl(args.transcript)
    if args.summary:
        write_report(args.summary, summary)
    print(json.dumps(summary, sort_keys=True, indent=1))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _suite_filter(seed, fast):
    n_dists = 60 if fast else 200
    summary = analysis.regret_bound_sweep(ks=range(2, 7), n_dists=n_dists, seed=seed)
    return {
        "name": "filter",
        "status": "pass" if summary.ok else "fail",
        "instances": summary.instances,
        "worst_slack_sum": summary.worst_slack_sum,
        "worst_slack_padded_deterministic": summary.worst_slack_padded,
        "counterexamples": summary.counterexamples[:5],
        "literal_half_k_violations": len(summary.literal_half_k_violations),
        "literal_half_k_sample": summary.literal_half_k_violations[:1],
        "note": (
            "the plain half-k comparison is checked per realized cost vector; "
            "under stochastic conditional costs only the sum-form bound holds"
        ),
    }


def _suite_lemma1(seed, fast):
    out = analysis.audit_sweep(n_per_k=2000 if fast else 10_000, seed=seed)
    return {
        "name": "lemma1",
        "status": "pass" if out["violations"] == 0 else "fail",
        "instances": out["instances"],
        "violations": out["violations"],
        "worst_slack": out["worst_slack"],
    }


def _suite_tightness(seed, fast):
    res = analysis.tightness_example(8)
    ok = (res.regret, res.sum_importance, res.mistake_importance) == (1.0, 6.0, 3.0)
    checks = [{"k": 8, "values": [res.regret, res.sum_importance, res.mistake_importance],
               "ratio": res.ratio}]
    for k in (4, 16, 32, 64):
        r = analysis.tightness_example(k)
        lg = math.log2(k)
        ok = ok and r.sum_importance == k / 2 + lg - 1 and r.mistake_importance == lg
        ok = ok and r.ratio <= k / 2
        checks.append({"k": k, "ratio": r.ratio})
    detail = (f"k=8 -> (regret, importance, mistakes) = "
              f"({res.regret:g}, {res.sum_importance:g}, {res.mistake_importance:g})")
    return {"name": "tightness", "status": "pass" if ok else "fail", "checks": checks,
            "detail": detail}


def _suite_inconsistency(seed, fast):
    exact = analysis.inconsistency_demo(0.05)
    ok = abs(exact.tree_regret - 0.10) < 1e-12 and exact.filter_tree_regret == 0.0
    result = {
        "name": "inconsistency",
        "exact": {"tree_regret": exact.tree_regret, "filter_tree_regret": exact.filter_tree_regret},
    }
    if not fast:
        sampled = analysis.inconsistency_demo(0.05, n_samples=50_000, seed=seed)
        ok = ok and abs(sampled.tree_regret - 0.10) <= 0.02
        ok = ok and sampled.filter_tree_regret <= 0.01
        result["sampled"] = {
            "tree_regret": sampled.tree_regret,
            "filter_tree_regret": sampled.filter_tree_regret,
        }
    result["status"] = "pass" if ok else "fail"
    return result


def _suite_depth(seed, fast):
    ks = [2**j for j in range(2, 8 if fast else 11)]
    ms = range(1, 6 if fast else 11)
    rows = []
    ok = True
    for k in ks:
        for m in ms:
            bounds = analysis.depth_bounds(k, m)
            schedule = build_schedule(k, m, "complete")
            schedule.validate_legality()
            pool = build_schedule(k, m, "pool")
            pool.validate_legality()
            measured = schedule.n_rounds + build_final_tree(m).max_path_importance()
            bound = bounds.min_importance_bound()
            ok = ok and measured <= bound
            for case in bounds.first_phase_cases:
                ok = ok and (case is None or schedule.n_rounds <= case)
            rows.append({"k": k, "m": m, "measured": measured, "bound": bound})
    tracker_ok = True
    max_l = 12 if fast else 20
    for l in range(2, max_l + 1):
        k = 2**l
        for m in range(1, 4 * l + 1):
            res = analysis.level_tracker(k, m)
            if res.rounds > analysis.chernoff_depth(k, m):
                tracker_ok = False
    status = "pass" if (ok and tracker_ok) else "fail"
    return {"name": "depth", "status": status, "grid": rows[:20],
            "grid_points": len(rows), "tracker_ok": tracker_ok}


def _suite_tournament(seed, fast):
    rows = []
    ok = True
    for k in (4, 8):
        for m in (1, 2, 3):
            if fast and k == 8 and m == 3:
                continue
            res = min_dethroning_cost(k, m, "complete")
            rows.append({"k": k, "m": m, "semantics": "complete", "min_cost": res.cost,
                         "exact": res.exact})
            ok = ok and res.cost >= m
            pool = min_dethroning_cost(k, m, "pool")
            rows.append({"k": k, "m": m, "semantics": "pool", "min_cost": pool.cost,
                         "exact": pool.exact})
    parity = parity_adversary_run(3, m=1)
    ok = ok and parity.ratio >= 2.0
    return {
        "name": "tournament",
        "status": "pass" if ok else "fail",
        "dethroning": rows,
        "parity_k3_ratio": parity.ratio,
    }


SUITES = {
    "filter": _suite_filter,
    "lemma1": _suite_lemma1,
    "tightness": _suite_tightness,
    "inconsistency": _suite_inconsistency,
    "depth": _suite_depth,
    "tournament": _suite_tournament,
}


def _verify_worker(job):
    name, seed, fast = job
    return SUITES[name](seed, fast)


def cmd_verify(args, cfg):
    seed = resolve_seed(args)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    jobs = [(name, seed, args.fast) for name in names]
    if args.jobs > 1 and len(jobs) > 1:
        import multiprocessing

        with multiprocessing.Pool(min(args.jobs, len(jobs))) as pool:
            results = pool.map(_verify_worker, jobs)  # merge keeps suite order
    else:
        results = [_verify_worker(job) for job in jobs]
    payload = {"seed": seed, "suites": results}
    status_ok = all(r["status"] == "pass" for r in results)
    if args.report:
        write_report(args.report, payload)
    for r in results:
        detail = f" {r['detail']}" if "detail" in r else ""
        print(f"{r['name']}: {r['status'].upper()}{detail}")
    return EXIT_OK if status_ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# depth tables


def cmd_depth(args, cfg):
    k, m = args.k, args.m
    b = analysis.depth_bounds(k, m)
    complete = build_schedule(k, m, "complete")
    pool = build_schedule(k, m, "pool")
    second = b.second_phase
    print(f"k={k} m={m}")
    print("first-phase bounds:")
    for i, v in enumerate(b.first_phase_cases, 1):
        print(f"  case {i}: {'n/a' if v is None else round(v, 3)}")
    print("importance-depth bounds (first phase + final):")
    for i, v in enumerate(b.importance_cases, 1):
        print(f"  case {i}: {'n/a' if v is None else round(v, 3)}")
    print(f"  chernoff + final phase: {round(b.chernoff + second, 3)}")
    print(f"final phase importance depth: {second} (max charge path; m=1 means none)")
    print(f"bracketed final phase rounds for comparison: {m * (m - 1) // 2}")
    print(f"measured complete: rounds={complete.n_rounds} importance={complete.n_rounds + second}")
    print(f"measured pool:     rounds={pool.n_rounds} importance={pool.n_rounds + second}")
    tracker = analysis.level_tracker(k, m)
    print(f"pool tracker rounds: {tracker.rounds} (chernoff bound {round(b.chernoff, 3)})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / predict


def _train_model(kind, ds, spec):
    tree = build_balanced_tree(ds.k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if kind == "tree":
            model = train_tree(ds.X, ds.y, tree, spec)
        elif kind == "filter_tree":
            model = train_filter_tree(ds.X, ds.y, tree, spec)
        elif kind == "all_pairs":
            model = train_all_pairs(ds.X, ds.y, ds.k, spec)
        elif kind == "apft":
            model = train_apft(ds.X, ds.y, tree, spec)
        elif kind == "cs_filter_tree":
            # labels become unit-loss cost rows
            C = np.ones((len(ds.y), ds.k))
            C[np.arange(len(ds.y)), ds.y] = 0.0
            model = train_cs_filter_tree(ds.X, C, tree, spec)
        else:
            raise ValueError(f"unknown reduction {kind!r}")
    model.label_names = list(ds.label_names)
    return model


def cmd_train(args, cfg):
    spec = learner_from_args(args, cfg)
    ds = data.load_dataset(args.data, args.label_column)
    model = _train_model(args.reduction, ds, spec)
    model.save(args.model)
    err = float(np.mean(model.predict(ds.X) != ds.y))
    print(f"trained {args.reduction} on {ds.name}: k={ds.k} n={len(ds.y)} "
          f"training_error={err:.4f} -> {args.model}")
    return EXIT_OK


def cmd_predict(args, cfg):
    model = ReductionModel.load(args.model)
    ds = data.load_dataset(args.data, args.label_column)
    preds = model.predict(ds.X)
    names = model.label_names or [str(v) for v in range(model.k)]
    lines = [str(names[p]) for p in preds]
    if args.out:
        with open(args.out, "w") as f:
            f.write("prediction\n")
            f.write("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    if ds.label_names == tuple(names) or set(ds.label_names) <= set(names):
        mapped = np.array([names.index(v) for v in ds.label_names])[ds.y]
        err = float(np.mean(preds != mapped))
        print(f"error_rate={err:.4f}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ect", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seed", type=int, default=None, help="master seed (env ECT_SEED, default 1)")
    p.add_argument("--config", default=None, help="key=value config file")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="compare the reductions on datasets")
    b.add_argument("--datasets", default="synth3,synth4,blobs5",
                   help="comma list of bundled names or CSV paths")
    b.add_argument("--splits", type=int, default=10)
    b.add_argument("--out-dir", default="bench_out")
    b.add_argument("--label-column", default="label")
    b.add_argument("--jobs", type=int, default=1, help="dataset-level worker pool")
    _learner_flags(b)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("simulate", help="run one tournament")
    s.add_argument("-k", type=int, required=True)
    s.add_argument("-m", "--m", type=int, default=1)
    s.add_argument("--semantics", choices=("complete", "pool"), default="complete")
    s.add_argument("--adversary", default="none",
                   choices=("none", "budget_full_lie", "budget_half_lie", "rate_random",
                            "parity", "staged"))
    s.add_argument("--budget", type=float, default=0.0)
    s.add_argument("--rate", type=float, default=0.25)
    s.add_argument("--pair", default=None, help="i,j for the parity adversary")
    s.add_argument("--declared-rounds", type=int, default=None)
    s.add_argument("--repeated", action="store_true", help="play weighted finals as unit games")
    s.add_argument("--transcript", default=None, help="JSONL path for per-match records")
    s.add_argument("--summary", default=None, help="JSON path for the run summary")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=tuple(SUITES) + ("all",))
    v.add_argument("--report", default=None, help="write a JSON report here")
    v.add_argument("--fast", action="store_true", help="reduced sweep sizes")
    v.add_argument("--jobs", type=int, default=1, help="suite-level worker pool")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("depth", help="closed-form and measured depth table")
    d.add_argument("-k", type=int, required=True)
    d.add_argument("-m", "--m", type=int, required=True)
    d.set_defaults(func=cmd_depth)

    t = sub.add_parser("train", help="train a reduction and save the model")
    t.add_argument("--data", required=True)
    t.add_argument("--reduction", default="filter_tree",
                   choices=("tree", "filter_tree", "cs_filter_tree", "all_pairs", "apft"))
    t.add_argument("--model", required=True, help="output model path")
    t.add_argument("--label-column", default="label")
    _learner_flags(t)
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("predict", help="decode labels with a saved model")
    r.add_argument("--model", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--out", default=None)
    r.add_argument("--label-column", default="label")
    r.set_defaults(func=cmd_predict)
    return p


def _learner_flags(sub):
    sub.add_argument("--learner", default=None,
                     choices=("logistic_sgd", "decision_stump", "constant", "bayes_oracle"))
    sub.add_argument("--lr", type=float, default=None)
    sub.add_argument("--epochs", type=int, default=None)
    sub.add_argument("--learner-seed", type=int, default=None)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = read_config(args.config) if args.config else {}
    try:
        return args.func(args, cfg)
    except ResourceRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
