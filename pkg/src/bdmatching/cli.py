"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .drivers import ALGORITHMS, BUDGETED, RunResult
from .harness import ExperimentPlan, generator_config, read_flat, run_algorithm, sweep
from .oracle import check_maximal, max_matching
from .stream import InvalidStream, canonical, final_graph, generate, read_stream, write_stream

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VERIFY = 2


class InputError(Exception):
    pass


def _emit(payload: str, out: str | None) -> None:
    if out:
        Path(out).write_text(payload)
    else:
        sys.stdout.write(payload)


def _load_stream(path: str | None):
    if not path:
        raise InputError("--stream is required")
    try:
        return read_stream(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read stream {path}: {exc}") from exc


def verdict_json(spec, matching, algo: str, epsilon: float | None) -> tuple[dict, bool]:
    """Oracle verdict for ``matching``; the bool says whether it meets the algorithm's guarantee."""
    try:
        graph = final_graph(spec)
    except InvalidStream as exc:
        raise InputError(str(exc)) from exc
    verdict = check_maximal(graph, matching)
    best = len(max_matching(graph))
    size = len(matching)
    ratio = best / size if size else (1.0 if best == 0 else None)
    out = {
        "is_valid_matching": verdict.is_valid_matching,
        "is_maximal": verdict.is_maximal,
        "witness": list(verdict.witness) if verdict.witness else None,
        "max_matching_size": best,
        "ratio": ratio,
    }
    if algo == BUDGETED:
        ok = verdict.is_valid_matching and ratio is not None and ratio <= 2 + (epsilon or 0) + 1e-12
    else:
        ok = verdict.is_maximal
    return out, ok


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        values = read_flat(args.config)
        cfg = generator_config(values)
        count = int(values.get("count", 1))
    except (OSError, ValueError) as exc:
        raise InputError(f"bad generator config: {exc}") from exc
    out = args.out or values.get("out")
    if not out:
        raise InputError("no output path (--out or 'out' key)")
    try:
        if count == 1:
            write_stream(generate(cfg), out)
            return EXIT_OK
        folder = Path(out)
        folder.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            cfg_i = type(cfg)(**{**cfg.__dict__, "seed": cfg.seed + i})
            write_stream(generate(cfg_i), folder / f"{cfg.kind}_{cfg_i.seed}.txt")
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return EXIT_OK


def _run_kwargs(args: argparse.Namespace) -> dict:
    kw = {}
    if args.c is not None:
        kw["C"] = args.c
    if args.c_prime is not None:
        kw["C_prime"] = args.c_prime
    if args.delta is not None:
        kw["delta"] = args.delta
    return kw


def cmd_run(args: argparse.Namespace) -> int:
    spec = _load_stream(args.stream)
    kw = _run_kwargs(args) if args.algo == "rand" else {}
    try:
        result: RunResult = run_algorithm(args.algo, spec, seed=args.seed, epsilon=args.epsilon, **kw)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    payload = result.to_json()
    if not args.timing:
        payload["metrics"].pop("wall_time", None)
    code = EXIT_OK
    if args.verify:
        payload["verdict"], ok = verdict_json(spec, result.matching, args.algo, args.epsilon)
        code = EXIT_OK if ok else EXIT_VERIFY
    if args.trace:
        Path(args.trace).write_text("".join(json.dumps(s.to_json()) + "\n" for s in result.trace))
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return code


def cmd_verify(args: argparse.Namespace) -> int:
    spec = _load_stream(args.stream)
    try:
        result = json.loads(Path(args.result).read_text())
        matching = [canonical(int(u), int(v)) for u, v in result["matching"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read result {args.result}: {exc}") from exc
    algo = args.algo or result.get("algorithm", "rand")
    epsilon = args.epsilon if args.epsilon is not None else result.get("config", {}).get("epsilon")
    verdict, ok = verdict_json(spec, matching, algo, epsilon)
    _emit(json.dumps(verdict, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        plan = ExperimentPlan.read(args.plan)
    except (OSError, ValueError) as exc:
        raise InputError(f"bad plan: {exc}") from exc
    rows = sweep(plan, args.out)
    failed = sum(1 for r in rows if r.error)
    print(f"{len(rows)} rows written to {args.out or plan.out} ({failed} with errors)", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdmatching", description="Maximal matching in bounded-deletion graph streams")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write generated stream fixtures")
    gen.add_argument("config", help="flat key = value generator config")
    gen.add_argument("--out", help="stream file (count = 1) or directory")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="run one algorithm on a stream file")
    run.add_argument("--stream", required=True)
    run.add_argument("--algo", choices=ALGORITHMS, default="rand")
    run.add_argument("--epsilon", type=float, default=0.5)
    run.add_argument("--c", type=float)
    run.add_argument("--c-prime", type=float)
    run.add_argument("--delta", type=float)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--verify", action="store_true", help="embed the oracle verdict; exit 2 if it fails")
    run.add_argument("--trace", help="write the repair trace as JSON lines")
    run.add_argument("--timing", action="store_true", help="keep wall time in the output")
    run.add_argument("--out")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="check a result JSON against a stream")
    ver.add_argument("--stream", required=True)
    ver.add_argument("--result", required=True)
    ver.add_argument("--algo", choices=ALGORITHMS)
    ver.add_argument("--epsilon", type=float)
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)

    sw = sub.add_parser("sweep", help="run an experiment plan into a CSV")
    sw.add_argument("plan")
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
