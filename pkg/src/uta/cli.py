"""Command line front end.

``uta analyze`` runs the per-component constraint analysis, ``uta reach``
runs the pruned zone search, and ``uta gen`` writes benchmark models in the
text format.  Exit codes: 0 for Unreachable or Converged, 1 for Reachable,
2 for any error, timeout, or non-convergence.
"""
import argparse
import json
import os
import sys
import time
from typing import Optional, Sequence

from .analysis import Mode, Status, compute_gmap, report_json
from .benchgen import (
    FRAGMENTS,
    CounterAutomaton,
    RandomProfile,
    ReleasePattern,
    TaskSpec,
    gen_counter_reduction,
    gen_edf,
    gen_fig1,
    gen_fig1_unguarded,
    gen_mine_pump,
    gen_random,
    gen_sporadic_periodic,
    sporadic_periodic,
)
from .format import ParseErrors, parse, print_network
from .model import Network, validate_network
from .search import REACHABLE, TIMEOUT, UNREACHABLE, reach

EXIT_NEGATIVE = 0
EXIT_POSITIVE = 1
EXIT_ERROR = 2

DEFAULT_TIMEOUT = 1200.0


def _timeout_default() -> float:
    env = os.environ.get("UTA_TIMEOUT_SECS")
    if env is not None:
        try:
            return float(env)
        except ValueError:
            print(f"warning: ignoring bad UTA_TIMEOUT_SECS={env!r}", file=sys.stderr)
    return DEFAULT_TIMEOUT


def _mode(name: str) -> Mode:
    return Mode.REDUCED if name == "reduced" else Mode.NON_REDUCED


def _load(path: str, allow_shared: bool) -> Optional[Network]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    try:
        net = parse(text, filename=path)
    except ParseErrors as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return None
    blocked = False
    for diag in validate_network(net):
        print(f"{diag.level}: {diag.message}", file=sys.stderr)
        if diag.level == "error" and not allow_shared:
            blocked = True
    return None if blocked else net


def _print_witness(doc: dict, indent: str) -> None:
    for step in doc.get("witness", ()):
        via = "" if step["edge"] is None else f"  (edge {step['edge']})"
        print(f"{indent}{step['location']}: {step['constraint']}{via}")
    if "cycle" in doc:
        lo, hi = doc["cycle"]
        print(f"{indent}positive cycle: steps {lo}..{hi}")


def cmd_analyze(args) -> int:
    net = _load(args.input, args.allow_shared_clocks)
    if net is None:
        return EXIT_ERROR
    if args.dump_model:
        sys.stdout.write(print_network(net))
    mode = _mode(args.method)
    t0 = time.monotonic()
    reports = []
    all_converged = True
    for comp in net.components:
        gmap = compute_gmap(comp, mode)
        reports.append(report_json(comp, gmap))
        if gmap.status is not Status.CONVERGED:
            all_converged = False
    seconds = time.monotonic() - t0
    if args.out_format == "json":
        print(json.dumps(
            {"model": net.name, "method": args.method, "seconds": round(seconds, 4),
             "components": reports},
            indent=2))
    else:
        for doc in reports:
            b = doc["bounds"]
            print(f"{doc['component']}: {doc['status']} after {doc['iterations']} "
                  f"iterations (M={b['M']} L={b['L']} N={b['N']} budget={b['budget']})")
            for loc in sorted(doc["location"]):
                atoms = ", ".join(sorted(doc["location"][loc]))
                print(f"  {loc}: {atoms if atoms else '(empty)'}")
            if doc["status"] == "diverged":
                if args.explain_divergence:
                    print("  divergence witness:")
                    _print_witness(doc, "    ")
                else:
                    print("  (rerun with --explain-divergence for the witness)")
        print(f"analysis time: {seconds:.2f}s")
    return EXIT_NEGATIVE if all_converged else EXIT_ERROR


def cmd_reach(args) -> int:
    net = _load(args.input, args.allow_shared_clocks)
    if net is None:
        return EXIT_ERROR
    if args.dump_model:
        sys.stdout.write(print_network(net))
    timeout = args.timeout if args.timeout is not None else _timeout_default()
    t0 = time.monotonic()
    gmaps = None
    if not args.no_simulation:
        gmaps = [compute_gmap(comp, _mode(args.method)) for comp in net.components]
        for comp, gmap in zip(net.components, gmaps):
            if gmap.status is not Status.CONVERGED:
                print(
                    f"error: static analysis did not converge for component "
                    f"{comp.name} ({gmap.status.value}); rerun with "
                    f"--no-simulation to search unpruned",
                    file=sys.stderr)
                return EXIT_ERROR
    remaining = timeout - (time.monotonic() - t0)
    if remaining <= 0:
        print(f"error: timeout after {timeout:.0f}s (static analysis)",
              file=sys.stderr)
        return EXIT_ERROR
    try:
        stats = reach(net, gmaps, args.target,
                      use_simulation=not args.no_simulation, timeout=remaining)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    total = time.monotonic() - t0
    if args.out_format == "json":
        doc = {"model": net.name, "target": args.target, "method": args.method}
        doc.update(stats.to_json(net))
        doc["total_seconds"] = round(total, 4)
        print(json.dumps(doc, indent=2))
    else:
        print(f"{net.name}: {args.target} {stats.verdict} "
              f"nodes={stats.nodes} time={total:.2f}s")
    if stats.verdict == REACHABLE:
        return EXIT_POSITIVE
    if stats.verdict == UNREACHABLE:
        return EXIT_NEGATIVE
    print(f"error: timeout after {timeout:.0f}s (search)", file=sys.stderr)
    return EXIT_ERROR


def _parse_tasks(text: str) -> tuple[TaskSpec, ...]:
    tasks = []
    for part in text.split(","):
        fields = part.strip().split(":")
        if len(fields) not in (2, 3):
            raise ValueError(f"task {part.strip()!r}: expected c:d or c:d:p")
        try:
            nums = [int(f) for f in fields]
        except ValueError:
            raise ValueError(f"task {part.strip()!r}: fields must be integers")
        tasks.append(TaskSpec(*nums))
    return tuple(tasks)


def _parse_counter_spec(text: str) -> tuple[tuple[str, int, str], ...]:
    transitions = []
    for part in text.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        fields = part.split()
        if len(fields) != 3:
            raise ValueError(f"transition {part!r}: expected 'src p dst'")
        src, step, dst = fields
        try:
            p = int(step)
        except ValueError:
            raise ValueError(f"transition {part!r}: step {step!r} must be an integer")
        transitions.append((src, p, dst))
    if not transitions:
        raise ValueError("counter spec has no transitions")
    return tuple(transitions)


def _release_pattern(name: str, burst: Optional[int]) -> ReleasePattern:
    if name == "sporadic-periodic":
        if burst is None:
            raise ValueError("sporadic-periodic release needs --burst")
        return sporadic_periodic(burst)
    if burst is not None:
        raise ValueError("--burst only applies to the sporadic-periodic release")
    return ReleasePattern(name)


def _build_gen(args) -> Network:
    if args.family == "edf":
        if args.preset is not None:
            if args.tasks or args.release:
                raise ValueError("--preset replaces --tasks/--release")
            if args.preset == "mine-pump":
                if args.burst is not None:
                    raise ValueError("mine-pump takes no --burst")
                return gen_mine_pump()
            if args.burst is None:
                raise ValueError("the sporadic-periodic preset needs --burst")
            return gen_sporadic_periodic(args.burst)
        if not args.tasks or not args.release:
            raise ValueError("need --tasks and --release (or --preset)")
        return gen_edf(_parse_tasks(args.tasks),
                       _release_pattern(args.release, args.burst))
    if args.family == "counter":
        transitions = _parse_counter_spec(args.spec)
        states: list[str] = []
        for src, _, dst in transitions:
            for s in (src, dst):
                if s not in states:
                    states.append(s)
        initial = args.initial if args.initial else transitions[0][0]
        target = args.target if args.target else transitions[-1][2]
        box = CounterAutomaton(tuple(states), initial, target, transitions,
                               args.bound)
        return gen_counter_reduction(box)
    if args.family == "fig1":
        return gen_fig1_unguarded() if args.unguarded else gen_fig1()
    return gen_random(RandomProfile(
        n_locs=args.locs, n_clocks=args.clocks, fragment=args.fragment,
        max_const=args.max_const, seed=args.seed))


def cmd_gen(args) -> int:
    try:
        net = _build_gen(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = print_network(net)
    if args.output == "-":
        sys.stdout.write(text)
        return EXIT_NEGATIVE
    path = args.output if args.output else f"{net.name}.uta"
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(path)
    return EXIT_NEGATIVE


def _add_common(p, with_target: bool) -> None:
    p.add_argument("input", help="model file in the uta text format")
    if with_target:
        p.add_argument("--target", required=True,
                       help="location name, bare or as process.location")
    p.add_argument("--method", choices=("reduced", "nonreduced"),
                   default="reduced")
    p.add_argument("--format", dest="out_format", choices=("text", "json"),
                   default="text")
    p.add_argument("--allow-shared-clocks", action="store_true",
                   help="keep going when components share a clock")
    p.add_argument("--dump-model", action="store_true",
                   help="echo the parsed model before the result")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="uta",
        description="Reachability and constraint analysis for timed automata "
                    "with clock updates.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    pa = sub.add_parser("analyze", help="per-component constraint analysis")
    _add_common(pa, with_target=False)
    pa.add_argument("--explain-divergence", action="store_true",
                    help="print the propagation witness for diverged components")

    pr = sub.add_parser("reach", help="zone-graph reachability")
    _add_common(pr, with_target=True)
    pr.add_argument("--timeout", type=float, default=None,
                    help=f"seconds; default {DEFAULT_TIMEOUT:.0f} or UTA_TIMEOUT_SECS")
    pr.add_argument("--no-simulation", action="store_true",
                    help="disable simulation pruning (exact-duplicate dedup only)")

    pg = sub.add_parser("gen", help="write benchmark models")
    gsub = pg.add_subparsers(dest="family", required=True)
    ge = gsub.add_parser("edf", help="schedulability network")
    ge.add_argument("--tasks", help="comma list of c:d or c:d:p")
    ge.add_argument("--release",
                    choices=("flower", "worstcase", "periodic",
                             "sporadic-periodic"))
    ge.add_argument("--burst", type=int, default=None,
                    help="sporadic burst length N")
    ge.add_argument("--preset", choices=("mine-pump", "sporadic-periodic"))
    gc = gsub.add_parser("counter", help="two-clock counter reduction")
    gc.add_argument("--spec", required=True,
                    help="transitions 'src p dst', comma separated")
    gc.add_argument("--bound", type=int, required=True)
    gc.add_argument("--initial", default=None)
    gc.add_argument("--target", default=None)
    gf = gsub.add_parser("fig1", help="the two-clock loop example")
    gf.add_argument("--unguarded", action="store_true")
    gr = gsub.add_parser("random", help="seeded random component")
    gr.add_argument("--seed", type=int, default=0)
    gr.add_argument("--fragment", choices=FRAGMENTS, default="General")
    gr.add_argument("--locs", type=int, default=4)
    gr.add_argument("--clocks", type=int, default=2)
    gr.add_argument("--max-const", type=int, default=4)
    for p in (ge, gc, gf, gr):
        p.add_argument("-o", "--output", default=None,
                       help="output path, '-' for stdout (default <name>.uta)")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"analyze": cmd_analyze, "reach": cmd_reach, "gen": cmd_gen}
    return handler[args.cmd](args)


if __name__ == "__main__":
    sys.exit(main())
