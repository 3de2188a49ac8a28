"""Command line: ``digplan analyze | plan | compare | export-dot``.

Exit codes: 0 ok, 2 geometry error, 3 bad input, 4 planning failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .assembly import Assembly
from .blocking import BlockingConfig, build_dig, total_blockage
from .dot import to_dot
from .io import ManifestError, fmt, read_manifest, read_tree, write_csv, write_tree
from .mesh import GeometryError
from .planner import METHODS, PlanFailure, PlannerConfig, linear_sequence, plan_disassembly
from .subassembly import SubIdConfig, select_base
from .workcell import metrics, simulate

EXIT_OK, EXIT_GEOMETRY, EXIT_INPUT, EXIT_PLAN = 0, 2, 3, 4

log = logging.getLogger("digplan")


def _seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("DIGPLAN_SEED")
    try:
        return int(env) if env else 0
    except ValueError:
        raise ManifestError(f"DIGPLAN_SEED must be an integer, got {env!r}")


def _load(args) -> tuple[Assembly, dict]:
    asm, cfg = read_manifest(args.manifest)
    tol = getattr(args, "contact_tol", None)
    if tol is not None:
        asm = Assembly(asm.parts.values(), floor=asm.floor, contact_tol=tol, liaison_pairs=asm.liaison_pairs)
    return asm, cfg


def _pick(args, cfg: dict, name: str, default):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def _planner_config(args, cfg: dict, method: str) -> PlannerConfig:
    blocking = BlockingConfig(
        shells=int(_pick(args, cfg, "shells", 24)),
        samples=int(_pick(args, cfg, "samples", 1024)),
        jobs=int(getattr(args, "jobs", 1) or 1),
    )
    subid = SubIdConfig(f_accept=float(_pick(args, cfg, "accept", 0.85)))
    seed = _seed(args.seed if getattr(args, "seed", None) is not None else cfg.get("seed"))
    return PlannerConfig(
        method=method,
        blocking=blocking,
        subid=subid,
        k_dirs=int(_pick(args, cfg, "k_dirs", 32)),
        seed=seed,
        clusters=_pick(args, cfg, "clusters", None),
    )


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    asm, cfg = _load(args)
    pc = _planner_config(args, cfg, "dig")
    out = _outdir(args)
    base = select_base(asm)
    dig = build_dig(asm, base, pc.blocking)
    names = {i: p.name for i, p in asm.parts.items()}
    write_csv(out / "dig.csv", ["row_id", "col_id", "weight"], dig.to_rows())
    rows = []
    for i in asm.ids:
        rows.append((i, names[i], total_blockage(dig, i), int(dig.locked.get(i, False)), int(i == base)))
    write_csv(out / "blockage.csv", ["part_id", "name", "tau", "locked", "base"], rows)
    if not args.no_plots:
        from .plotting import plot_dig

        plot_dig(dig, names, out / "dig.png")
    print(f"base part: {base} ({names[base]}); {dig.evaluations} shell evaluations")
    for i, name, tau, lk, _ in rows:
        print(f"  {i:>4} {name:<20} tau={fmt(tau)}{'  locked' if lk else ''}")
    return EXIT_OK


def _plan_outputs(tree, method: str, robots: int, out: Path, plots: bool) -> list:
    write_tree(tree, out / "tree.json", method)
    (out / "tree.dot").write_text(to_dot(tree))
    seq = linear_sequence(tree)
    rows = []
    for k, a in enumerate(seq):
        d = a.direction or (None, None, None)
        rows.append(
            (k, a.node, " ".join(map(str, a.moving)), " ".join(map(str, a.reference)), *(float(x) if x is not None else "" for x in d))
        )
    write_csv(out / "sequence.csv", ["step", "node", "moving", "reference", "dx", "dy", "dz"], rows)
    sched = simulate(tree, robots)
    write_csv(out / "schedule.csv", ["timestep", "robot", "node", "action"], sched.rows())
    ms = metrics(tree, range(1, robots + 1))
    write_csv(
        out / "metrics.csv",
        ["method", "robots", "makespan", "speedup"],
        [(method, m.robots, m.makespan, f"{m.speedup:.2f}") for m in ms],
    )
    if plots:
        from .plotting import plot_schedule, plot_tree

        plot_tree(tree, out / "tree.png")
        plot_schedule(sched, out / "schedule.png", f"{method}, {robots} robot(s)")
    return ms


def cmd_plan(args) -> int:
    asm, cfg = _load(args)
    method = args.method or cfg.get("method", "dig")
    if method not in METHODS:
        raise ManifestError(f"unknown method {method!r}")
    pc = _planner_config(args, cfg, method)
    out = _outdir(args)
    t0 = time.perf_counter()
    try:
        tree = plan_disassembly(asm, method, pc)
    except PlanFailure as e:
        dump = {"error": str(e), "stuck_parts": list(e.parts), "trace": _jsonable(e.trace)}
        (out / "failure.json").write_text(json.dumps(dump, indent=2, sort_keys=True) + "\n")
        print(f"planning failed: {e}", file=sys.stderr)
        print(f"stuck state: {list(e.parts)}", file=sys.stderr)
        return EXIT_PLAN
    log.info("planned in %.2f s", time.perf_counter() - t0)
    ms = _plan_outputs(tree, method, args.robots, out, not args.no_plots)
    print(f"{method}: {len(linear_sequence(tree))} join actions")
    for m in ms:
        print(f"  robots={m.robots} makespan={m.makespan} speedup={m.speedup:.2f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    asm, cfg = _load(args)
    out = _outdir(args)
    rows = []
    for method in METHODS:
        pc = _planner_config(args, cfg, method)
        try:
            tree = plan_disassembly(asm, method, pc)
        except PlanFailure as e:
            for k in range(1, args.robots + 1):
                rows.append((method, k, None, None, f"failed: {e}"))
            continue
        for m in metrics(tree, range(1, args.robots + 1)):
            rows.append((method, m.robots, m.makespan, m.speedup, ""))
    write_csv(
        out / "comparison.csv",
        ["method", "robots", "makespan", "speedup", "note"],
        [(m, k, "" if ms is None else ms, "" if sp is None else f"{sp:.2f}", note) for m, k, ms, sp, note in rows],
    )
    if not args.no_plots:
        from .plotting import plot_comparison

        plot_comparison([r[:4] for r in rows], out / "comparison.png")
    print(f"{'method':<8} {'robots':>6} {'makespan':>8} {'speedup':>7}")
    for m, k, ms, sp, note in rows:
        if ms is None:
            print(f"{m:<8} {k:>6} {'-':>8} {'-':>7}  {note}")
        else:
            print(f"{m:<8} {k:>6} {ms:>8} {sp:>7.2f}")
    return EXIT_OK


def cmd_export_dot(args) -> int:
    tree, _ = read_tree(args.tree)
    text = to_dot(tree)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float):
        return float(fmt(x))
    return x


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, planning: bool = True) -> None:
    p.add_argument("manifest", help="assembly manifest (JSON)")
    p.add_argument("-o", "--output", default="out", help="output directory (default: out)")
    p.add_argument("--shells", type=int, help="shell count per part (default 24)")
    p.add_argument("--samples", type=int, help="direction samples per shell (default 1024)")
    p.add_argument("--contact-tol", type=float, help="contact tolerance in meters")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for the interference matrix")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    if planning:
        p.add_argument("--robots", type=int, default=3, help="robots in the workcell (default 3)")
        p.add_argument("--seed", type=int, help="seed (falls back to $DIGPLAN_SEED, then 0)")
        p.add_argument("--accept", type=float, help="blockage acceptance threshold (default 0.85)")
        p.add_argument("--k-dirs", type=int, dest="k_dirs", help="removal directions tried per set")
        p.add_argument("--clusters", type=int, help="cluster count for the morato method")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="digplan", description="Disassembly planning by blocking reduction.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", help="interference matrix and per-part blockage")
    _common(p, planning=False)
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("plan", help="plan a disassembly and simulate the workcell")
    _common(p)
    p.add_argument("--method", choices=METHODS, help="partitioning method (default dig)")
    p.set_defaults(func=cmd_plan)
    p = sub.add_parser("compare", help="makespan/speedup table for all methods")
    _common(p)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("export-dot", help="DOT graph of a stored plan tree")
    p.add_argument("tree", help="tree file written by 'plan'")
    p.add_argument("-o", "--output", help="write here instead of stdout")
    p.set_defaults(func=cmd_export_dot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if getattr(args, "robots", 1) is not None and getattr(args, "robots", 1) < 1:
            raise ManifestError("--robots must be at least 1")
        return args.func(args)
    except ManifestError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except GeometryError as e:
        print(f"geometry error: {e}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
