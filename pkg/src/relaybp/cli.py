"""Command-line front end: problem building, decoding, benchmarking, sweeps.

Every command that writes results also writes a run manifest
(``<output>.manifest.json``) echoing the full configuration and the problem
content hash; ``relaybp rerun <manifest>`` reproduces the numbers
bit-exactly.  Exit codes: 0 success, 1 decode did not converge, 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__, bench, plots
from .builders import (
    bb_presets,
    build_bb_preset,
    build_bivariate_bicycle,
    build_repetition,
    build_surface_phenomenological,
)
from .gf2 import BitVector
from .oracle import MAX_BRUTE_FORCE_N, brute_force_min_weight, logical_failure
from .problem import (
    DecodingProblem,
    compress_columns,
    drop_inert_columns,
    load_problem,
    save_problem,
    xz_split,
)
from .relay import PRESETS, RelayDecoder, RelaySchedule


class CliError(Exception):
    pass


def _parse_values(text: str) -> list[float]:
    """Accept 'a:b:step' (inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(x) for x in parts)
        if step <= 0:
            raise CliError("range step must be positive")
        n = int(round((stop - start) / step))
        vals = [start + k * step for k in range(n + 1)]
        return [v for v in vals if v <= stop + 1e-12]
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_terms(text: str) -> list[tuple[int, int]]:
    """Exponent pairs 'i,j;i,j;...' for the bicycle polynomials."""
    terms = []
    for part in text.split(";"):
        if not part.strip():
            continue
        ij = part.split(",")
        if len(ij) != 2:
            raise CliError(f"each term must be 'i,j', got {part!r}")
        terms.append((int(ij[0]), int(ij[1])))
    if not terms:
        raise CliError("empty exponent list")
    return terms


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--S", type=int, default=1, help="solutions sought before stopping")
    p.add_argument("--R", type=int, default=301, help="maximum relay legs")
    p.add_argument("--T0", type=int, default=80, help="iteration cap for leg 0")
    p.add_argument("--T", type=int, default=60, help="iteration cap for legs >= 1")
    p.add_argument("--gamma0", type=float, default=None, help="uniform memory strength for leg 0")
    p.add_argument("--center", type=float, default=None, help="gamma interval center for legs >= 1")
    p.add_argument("--width", type=float, default=None, help="gamma interval width for legs >= 1")
    p.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        default=None,
        help="named gamma preset supplying gamma0/center/width defaults",
    )
    p.add_argument("--clamp", type=float, default=1024.0, help="message saturation bound")
    p.add_argument("--mode", choices=["relay", "independent"], default="relay", help="ensembling mode")
    p.add_argument("--seed", type=int, default=0, help="seed for noise sampling and gamma draws")


def _schedule_from_args(args: argparse.Namespace) -> RelaySchedule:
    base = dict(PRESETS["bb"])
    if args.preset:
        base = dict(PRESETS[args.preset])
    if args.gamma0 is not None:
        base["first_leg_gamma"] = args.gamma0
    if args.center is not None:
        base["gamma_center"] = args.center
    if args.width is not None:
        base["gamma_width"] = args.width
    return RelaySchedule(
        solutions_sought=args.S,
        max_legs=args.R,
        t_first=args.T0,
        t_rest=args.T,
        rng_seed=args.seed,
        ensembling_mode=args.mode,
        clamp=args.clamp,
        **base,
    )


def _write_manifest(out_path: str, command: str, args: argparse.Namespace, problem: DecodingProblem | None) -> None:
    manifest = {
        "tool": "relaybp",
        "tool_version": __version__,
        "command": command,
        "args": {k: v for k, v in vars(args).items() if k != "func"},
        "schema": "relaybp-manifest-v1",
    }
    if problem is not None:
        manifest["problem_name"] = problem.name
        manifest["problem_sha256"] = problem.content_hash()
    with open(str(out_path) + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, default=str)
        f.write("\n")


def _load(path: str) -> DecodingProblem:
    try:
        return load_problem(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}")


# ---------------------------------------------------------------------------
# build / transform commands


def cmd_build(args: argparse.Namespace) -> int:
    if args.code == "repetition":
        problem = build_repetition(args.n, args.p_data, args.p_meas, args.rounds)
    elif args.code == "surface":
        problem = build_surface_phenomenological(args.d, args.rounds, args.p_data, args.p_meas)
    else:  # bb
        if args.name:
            problem = build_bb_preset(args.name, args.p_data, args.p_meas, args.rounds)
        else:
            if args.l is None or args.m is None or args.a is None or args.b is None:
                raise CliError("bb needs either --name <preset> or all of --l --m --a --b")
            problem = build_bivariate_bicycle(
                args.l, args.m, _parse_terms(args.a), _parse_terms(args.b), args.p_data, args.p_meas, args.rounds
            )
    n_before = problem.n
    if args.compress:
        problem = compress_columns(problem)
    save_problem(problem, args.out)
    _write_manifest(args.out, "build", args, problem)
    print(f"problem {problem.name}: M={problem.m} N={problem.n} K={problem.k}")
    if args.compress:
        print(f"column compression: {n_before} -> {problem.n} ({n_before - problem.n} merged)")
    print(f"wrote {args.out}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    problem = _load(args.problem)
    px, pz = xz_split(problem)
    outputs = []
    for sub, path in ((px, args.out_x), (pz, args.out_z)):
        n_raw = sub.n
        if not args.keep_inert:
            sub = drop_inert_columns(sub)
        if args.compress:
            sub = compress_columns(sub)
        save_problem(sub, path)
        outputs.append((sub, path, n_raw))
    for sub, path, n_raw in outputs:
        print(f"{sub.name}: M={sub.m} N={sub.n} (from {n_raw} columns) -> {path}")
    _write_manifest(args.out_x, "split", args, problem)
    return 0


def cmd_compress(args: argparse.Namespace) -> int:
    problem = _load(args.problem)
    compressed = compress_columns(problem)
    save_problem(compressed, args.out)
    _write_manifest(args.out, "compress", args, compressed)
    print(f"{problem.n} -> {compressed.n} columns; wrote {args.out}")
    return 0


def cmd_info(args: argparse.Namespace) -> int:
    problem = _load(args.problem)
    print(f"name:        {problem.name}")
    print(f"checks (M):  {problem.m}")
    print(f"errors (N):  {problem.n}")
    print(f"actions (K): {problem.k}")
    print(f"H entries:   {problem.H.nnz}")
    print(f"row types:   {'yes' if problem.h_row_types else 'no'}")
    print(f"p range:     [{problem.p.min():g}, {problem.p.max():g}]")
    print(f"sha256:      {problem.content_hash()}")
    return 0


# ---------------------------------------------------------------------------
# decode


def cmd_decode(args: argparse.Namespace) -> int:
    problem = _load(args.problem)
    schedule = _schedule_from_args(args)
    true_error = None
    if args.sample:
        rng = bench.shot_rng(args.seed, args.shot)
        true_error = bench.sample_error(problem, rng)
        syndrome = problem.syndrome(BitVector(true_error)).bits
    elif args.syndrome is not None:
        if set(args.syndrome) - {"0", "1"}:
            raise CliError("inline syndrome must be a 0/1 string")
        syndrome = np.array([int(c) for c in args.syndrome], dtype=np.uint8)
    elif args.syndrome_file is not None:
        text = open(args.syndrome_file).read().strip()
        if set(text) - {"0", "1"}:
            raise CliError("syndrome file must hold one 0/1 character per detector")
        syndrome = np.array([int(c) for c in text], dtype=np.uint8)
    else:
        raise CliError("provide --syndrome, --syndrome-file, or --sample")
    if syndrome.size != problem.m:
        raise CliError(f"syndrome length {syndrome.size} != {problem.m} detectors")

    result = RelayDecoder(problem, schedule).decode(syndrome)
    record = {
        "problem": problem.name,
        "success": result.success,
        "correction_support": result.correction.support.tolist(),
        "weight": result.weight,
        "solutions_found": result.solutions_found,
        "total_iterations": result.total_iterations,
        "legs_used": result.legs_used,
    }
    if true_error is not None:
        record["sampled_error_support"] = np.flatnonzero(true_error).tolist()
        record["logical_failure"] = bool(logical_failure(problem, true_error, result.correction.bits))
    if args.verify_oracle:
        if problem.n > MAX_BRUTE_FORCE_N:
            raise CliError(f"--verify-oracle needs N <= {MAX_BRUTE_FORCE_N}")
        oracle = brute_force_min_weight(problem, syndrome)
        record["oracle_min_weight"] = oracle.min_weight
        record["matches_oracle_weight"] = bool(
            result.success and result.weight is not None and abs(result.weight - oracle.min_weight) <= 1e-9
        )
    print(json.dumps(record, indent=2))
    return 0 if result.success else 1


# ---------------------------------------------------------------------------
# bench / sweep / compare


def _emit(records: list[dict], args: argparse.Namespace, problem: DecodingProblem) -> None:
    bench.write_csv(args.out, records)
    jsonl = args.jsonl or str(args.out) + ".jsonl"
    bench.write_jsonl(jsonl, records)
    _write_manifest(args.out, args.command, args, problem)
    print(f"wrote {args.out} ({len(records)} rows), {jsonl}")


def cmd_bench(args: argparse.Namespace) -> int:
    problem = _load(args.problem)
    schedule = _schedule_from_args(args)
    r_values = [int(v) for v in _parse_values(args.vary_R)] if args.vary_R else [schedule.max_legs]
    records = []
    for r_max in r_values:
        sched = dataclasses.replace(schedule, max_legs=r_max, solutions_sought=min(schedule.solutions_sought, r_max))
        stats = bench.run_monte_carlo(
            problem,
            sched,
            shots=args.shots,
            seed=args.seed,
            workers=args.workers,
            p_scale=args.p_scale,
            double_rate=args.double_rate,
        )
        records.append(bench.stats_record(problem.name, sched, stats, args.seed, args.p_scale))
        print(
            f"R={r_max}: LER={stats.logical_error_rate:.3e} "
            f"[{stats.ci_low:.3e}, {stats.ci_high:.3e}] "
            f"iters={stats.mean_iterations:.1f}+-{stats.iter_stderr:.1f} legs={stats.mean_legs:.2f}"
        )
    _emit(records, args, problem)
    if args.plot:
        plots.plot_bench_curves(args.out, args.plot, title=problem.name)
        print(f"wrote {args.plot}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    problem = _load(args.problem)
    schedule = _schedule_from_args(args)
    centers = _parse_values(args.centers)
    widths = _parse_values(args.widths)

    def progress(done: int, total: int) -> None:
        print(f"\rsweep {done}/{total} cells", end="", file=sys.stderr)
        if done == total:
            print(file=sys.stderr)

    grid = bench.sweep_memory_strengths(
        problem,
        schedule,
        centers,
        widths,
        shots_per_cell=args.shots_per_cell,
        seed=args.seed,
        workers=args.workers,
        p_scale=args.p_scale,
        progress=progress,
    )
    records = []
    for i, c in enumerate(grid.centers):
        for j, w in enumerate(grid.widths):
            sched = dataclasses.replace(schedule, gamma_center=c, gamma_width=w)
            records.append(
                bench.stats_record(
                    problem.name,
                    sched,
                    grid.stats[i][j],
                    grid.cell_seeds[i][j],
                    args.p_scale,
                    extras={"includes_negative_gamma": int(grid.includes_negative_gamma[i][j])},
                )
            )
    _emit(records, args, problem)
    if args.plot:
        plots.plot_sweep_heatmap(args.out, args.plot, title=problem.name)
        print(f"wrote {args.plot}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    problem = _load(args.problem)
    schedule = _schedule_from_args(args)
    result = bench.compare_ensembling(
        problem, schedule, shots=args.shots, seed=args.seed, workers=args.workers, p_scale=args.p_scale
    )
    records = []
    for mode, stats in (("relay", result.relay), ("independent", result.independent)):
        sched = dataclasses.replace(schedule, ensembling_mode=mode)
        records.append(bench.stats_record(problem.name, sched, stats, args.seed, args.p_scale, extras={"mode": mode}))
        print(
            f"{mode:12s}: LER={stats.logical_error_rate:.3e} "
            f"[{stats.ci_low:.3e}, {stats.ci_high:.3e}] iters={stats.mean_iterations:.2f}"
        )
    print(f"paired iteration delta (relay - independent): {result.iter_delta_mean:.3f} +- {result.iter_delta_stderr:.3f}")
    _emit(records, args, problem)
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    if args.kind == "sweep":
        plots.plot_sweep_heatmap(args.csv, args.out, title=args.title)
    else:
        plots.plot_bench_curves(args.csv, args.out, title=args.title)
    print(f"wrote {args.out}")
    return 0


def cmd_rerun(args: argparse.Namespace) -> int:
    with open(args.manifest) as f:
        manifest = json.load(f)
    command = manifest["command"]
    stored = manifest["args"]
    parser = build_parser()
    sub = [command]
    ns = parser.parse_args(sub + _args_to_argv(command, stored))
    problem_path = stored.get("problem")
    if problem_path and manifest.get("problem_sha256"):
        current = _load(problem_path).content_hash()
        if current != manifest["problem_sha256"]:
            raise CliError(
                f"problem file {problem_path} hash mismatch: manifest has "
                f"{manifest['problem_sha256'][:12]}..., file has {current[:12]}..."
            )
    return ns.func(ns)


def _args_to_argv(command: str, stored: dict) -> list[str]:
    """Rebuild an argv list from a manifest's stored namespace."""
    parser = build_parser()
    node = parser._subparsers._group_actions[0].choices[command]  # type: ignore[union-attr]
    argv: list[str] = []
    # descend nested subcommands (e.g. build repetition)
    while True:
        nested = [a for a in node._actions if isinstance(a, argparse._SubParsersAction)]
        if nested and stored.get(nested[0].dest):
            choice = stored[nested[0].dest]
            argv.append(str(choice))
            node = nested[0].choices[choice]
        else:
            break
    for action in node._actions:
        if action.option_strings or isinstance(action, argparse._SubParsersAction):
            continue
        if stored.get(action.dest) is not None:
            argv.append(str(stored[action.dest]))
    for action in node._actions:
        if not action.option_strings or action.dest == "help":
            continue
        val = stored.get(action.dest)
        if val is None or val == action.default:
            continue
        if isinstance(val, bool):
            if isinstance(action, argparse.BooleanOptionalAction):
                argv.append(action.option_strings[0] if val else action.option_strings[-1])
            elif val and isinstance(action, argparse._StoreTrueAction):
                argv.append(action.option_strings[-1])
        else:
            argv.extend([action.option_strings[-1], str(val)])
    return argv


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaybp",
        description="Relay-BP decoding toolkit: build problems, decode, benchmark, sweep.",
    )
    parser.add_argument("--version", action="version", version=f"relaybp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="generate a built-in problem file")
    bsub = b.add_subparsers(dest="code", required=True)
    b_rep = bsub.add_parser("repetition", help="phenomenological repetition code")
    b_rep.add_argument("--n", type=int, required=True)
    b_sur = bsub.add_parser("surface", help="phenomenological rotated surface code")
    b_sur.add_argument("--d", type=int, required=True)
    b_bb = bsub.add_parser("bb", help="bivariate bicycle code")
    b_bb.add_argument("--name", choices=sorted(bb_presets().keys() - {"_comment"}), default=None)
    b_bb.add_argument("--l", type=int, default=None)
    b_bb.add_argument("--m", type=int, default=None)
    b_bb.add_argument("--a", type=str, default=None, help="A polynomial terms 'i,j;i,j;...'")
    b_bb.add_argument("--b", type=str, default=None, help="B polynomial terms 'i,j;i,j;...'")
    for p in (b_rep, b_sur, b_bb):
        p.add_argument("--rounds", type=int, required=True, help="measurement layers (last one perfect)")
        p.add_argument("--p-data", type=float, required=True)
        p.add_argument("--p-meas", type=float, required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--compress", action=argparse.BooleanOptionalAction, default=True)
        p.set_defaults(func=cmd_build)

    s = sub.add_parser("split", help="split a CSS problem into X and Z decoding problems")
    s.add_argument("problem")
    s.add_argument("--out-x", required=True)
    s.add_argument("--out-z", required=True)
    s.add_argument("--keep-inert", action="store_true", help="keep columns zero in both H and A")
    s.add_argument("--compress", action=argparse.BooleanOptionalAction, default=True)
    s.set_defaults(func=cmd_split)

    c = sub.add_parser("compress", help="merge identical check-matrix columns")
    c.add_argument("problem")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compress)

    i = sub.add_parser("info", help="print problem dimensions and content hash")
    i.add_argument("problem")
    i.set_defaults(func=cmd_info)

    d = sub.add_parser("decode", help="decode one syndrome")
    d.add_argument("problem")
    d.add_argument("--syndrome", default=None, help="inline 0/1 string")
    d.add_argument("--syndrome-file", default=None, help="file with one 0/1 char per detector")
    d.add_argument("--sample", action="store_true", help="sample an error with --seed/--shot")
    d.add_argument("--shot", type=int, default=0, help="shot index for --sample")
    d.add_argument("--verify-oracle", action="store_true", help="compare weight to brute force (N <= 24)")
    _add_schedule_flags(d)
    d.set_defaults(func=cmd_decode)

    be = sub.add_parser("bench", help="Monte Carlo logical error rate")
    be.add_argument("problem")
    be.add_argument("--shots", type=int, required=True)
    be.add_argument("--out", required=True, help="CSV output path")
    be.add_argument("--jsonl", default=None, help="JSONL output path (default <out>.jsonl)")
    be.add_argument("--vary-R", default=None, help="comma list of R values, one CSV row each")
    be.add_argument("--p-scale", type=float, default=1.0)
    be.add_argument("--double-rate", action="store_true", help="report 2x the measured rate")
    be.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    be.add_argument("--plot", default=None, help="also render LER-vs-iterations figure to this file")
    _add_schedule_flags(be)
    be.set_defaults(func=cmd_bench)

    sw = sub.add_parser("sweep", help="memory-strength interval grid")
    sw.add_argument("problem")
    sw.add_argument("--centers", required=True, help="'a:b:step' or comma list")
    sw.add_argument("--widths", required=True, help="'a:b:step' or comma list")
    sw.add_argument("--shots-per-cell", type=int, required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--jsonl", default=None)
    sw.add_argument("--p-scale", type=float, default=1.0)
    sw.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sw.add_argument("--plot", default=None, help="also render the heatmap to this file")
    _add_schedule_flags(sw)
    sw.set_defaults(func=cmd_sweep)

    cp = sub.add_parser("compare", help="relay vs independent ensembling, paired shots")
    cp.add_argument("problem")
    cp.add_argument("--shots", type=int, required=True)
    cp.add_argument("--out", required=True)
    cp.add_argument("--jsonl", default=None)
    cp.add_argument("--p-scale", type=float, default=1.0)
    cp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    _add_schedule_flags(cp)
    cp.set_defaults(func=cmd_compare)

    pl = sub.add_parser("plot", help="render figures from result CSVs")
    pl.add_argument("kind", choices=["sweep", "bench"])
    pl.add_argument("csv")
    pl.add_argument("-o", "--out", required=True)
    pl.add_argument("--title", default=None)
    pl.set_defaults(func=cmd_plot)

    rr = sub.add_parser("rerun", help="re-execute a run from its manifest")
    rr.add_argument("manifest")
    rr.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
