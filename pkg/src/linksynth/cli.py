"""Command-line entry point: synthesize, run, eval, inspect, gen-synthetic.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .document import DocumentError, GraphConfig, build_corpus, load_link_specs
from .dsl import ProgramError, ProgramParseError, iter_finds, parse_program, pretty, serialize_program
from .evaluation import combine, format_table, predictions_to_json, read_predictions, score
from .interpreter import run_program
from .synthesis import SynthesisConfig, synthesize
from .synthetic import FAMILIES, write_forms

log = logging.getLogger("linksynth")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _graph_args(p):
    p.add_argument("--overlap", type=float, default=0.5,
                   help="minimum projection overlap, as a fraction of the smaller interval (default 0.5)")
    p.add_argument("--no-prune", action="store_true", help="keep transitively implied relations")
    p.add_argument("--page-size", type=float, nargs=2, metavar=("W", "H"),
                   help="page size for annotation files without a page sidecar or image")


def _graph_config(args) -> GraphConfig:
    try:
        return GraphConfig(overlap=args.overlap, prune=not args.no_prune)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load(path, args):
    if not Path(path).exists():
        raise DocumentError(f"{path}: no such file or directory")
    return build_corpus(path, _graph_config(args), args.page_size)


def corpus_hash(path) -> str:
    """sha256 over every file under ``path`` in sorted relative-path order."""
    root = Path(path)
    h = hashlib.sha256()
    files = [root] if root.is_file() else sorted(p for p in root.rglob("*") if p.is_file())
    for f in files:
        h.update(str(f.relative_to(root) if f != root else f.name).encode() + b"\0")
        h.update(f.read_bytes())
    return h.hexdigest()


def sidecar_paths(out: Path) -> dict[str, Path]:
    stem = out.name[:-5] if out.name.endswith(".json") else out.name
    return {k: out.with_name(f"{stem}.{k}.json") for k in ("pp", "np", "manifest")}


def cmd_synthesize(args) -> int:
    if args.max_iterations < 0 or args.max_path_len < 1 or args.min_support < 0 or args.timeout_seconds <= 0:
        raise UsageError("iterations/support must be >= 0, path length >= 1, timeout > 0")
    config = SynthesisConfig(max_iterations=args.max_iterations, max_path_len=args.max_path_len,
                             min_support=args.min_support, timeout_seconds=args.timeout_seconds)
    t0 = time.monotonic()
    graphs, specs = _load(args.train_dir, args)
    if not graphs:
        raise DocumentError(f"{args.train_dir}: no annotation files")
    t_load = time.monotonic() - t0
    result = synthesize(graphs, specs, config)
    if result.diagnostic:
        log.warning("%s; writing the empty program", result.diagnostic)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(serialize_program(result.program))
    side = sidecar_paths(out)
    side["pp"].write_bytes(serialize_program(result.positives))
    side["np"].write_bytes(serialize_program(result.negatives))
    manifest = {
        "version": __version__,
        "train_dir": str(args.train_dir),
        "corpus_sha256": corpus_hash(args.train_dir),
        "documents": len(graphs),
        "graph_config": {"overlap": args.overlap, "prune": not args.no_prune},
        "synthesis_config": vars(config),
        "timings": {"load_seconds": t_load, "synthesis_seconds": result.elapsed},
        "report": result.report(),
    }
    side["manifest"].write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s (%d positive, %d negative programs)", out, len(result.state.PP), len(result.state.NP))
    return EXIT_OK


def _read_program(path):
    try:
        return parse_program(Path(path).read_bytes())
    except OSError as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def cmd_run(args) -> int:
    program = _read_program(args.program)
    graphs, _ = _load(args.docs, args)
    text = predictions_to_json(run_program(program, graphs))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    preds = read_predictions(args.pred)
    if not Path(args.gold).exists():
        raise DocumentError(f"{args.gold}: no such file or directory")
    specs = load_link_specs(args.gold)
    rows = {args.name: score(preds, specs, args.undirected)}
    if args.other:
        other = read_predictions(args.other)
        negatives = read_predictions(args.negatives) if args.negatives else {}
        rows["other"] = score(other, specs, args.undirected)
        rows[f"{args.name}+other"] = score(combine(preds, other, negatives), specs, args.undirected)
    if args.format == "table":
        print(format_table(rows))
    else:
        print(json.dumps({k: r.to_dict() for k, r in rows.items()}, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_inspect(args) -> int:
    program = _read_program(args.program)
    finds = list(iter_finds(program))
    if args.json:
        print(json.dumps({"finds": len(finds), "distinct_finds": len(set(finds)),
                          "bytes": len(serialize_program(program))}, sort_keys=True))
        return EXIT_OK
    print(pretty(program))
    print(f"# {len(finds)} Find nodes ({len(set(finds))} distinct)")
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    families = FAMILIES if args.family == "all" else (args.family,)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    for fam in families:
        n += len(write_forms(out, fam, args.count, args.seed))
    log.info("wrote %d forms to %s", n, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linksynth", description="Synthesize entity-linking programs for forms.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", help="learn a linking program from annotated forms")
    p.add_argument("--train-dir", required=True)
    p.add_argument("--out", required=True, help="program file; sidecars are written next to it")
    d = SynthesisConfig()
    p.add_argument("--max-iterations", type=int, default=d.max_iterations)
    p.add_argument("--max-path-len", type=int, default=d.max_path_len)
    p.add_argument("--min-support", type=int, default=d.min_support)
    p.add_argument("--timeout-seconds", type=float, default=d.timeout_seconds)
    _graph_args(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("run", help="apply a program to documents and print predicted links")
    p.add_argument("--program", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--out", help="write predictions here instead of stdout")
    _graph_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score predictions against gold links")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True, help="FUNSD-format file or directory")
    p.add_argument("--other", help="second prediction set to combine with --pred")
    p.add_argument("--negatives", help="links to remove from the combination")
    p.add_argument("--name", default="program")
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--undirected", action="store_true", help="ignore link direction (ablation only)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="pretty-print a program")
    p.add_argument("--program", required=True)
    p.add_argument("--json", action="store_true", help="print size statistics only")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("gen-synthetic", help="write seeded synthetic forms in FUNSD format")
    p.add_argument("--out", required=True)
    p.add_argument("--family", choices=FAMILIES + ("all",), default="flat")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"linksynth: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DocumentError, ProgramParseError, ProgramError, OSError) as exc:
        print(f"linksynth: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"linksynth: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
