"""Synthesize on a FUNSD-format training split and report Prec/Rec/F1 on the test split.

Expects the usual layout: <root>/training_data/annotations + images and
<root>/testing_data/annotations + images (XFUND json files also work).

    python3 scripts/funsd_benchmark.py /data/funsd --out runs/funsd
"""
import argparse
import json
import logging
import time
from pathlib import Path

from linksynth.document import GraphConfig, build_corpus
from linksynth.dsl import serialize_program
from linksynth.evaluation import combine, format_table, read_predictions, score
from linksynth.interpreter import run_program
from linksynth.synthesis import SynthesisConfig, synthesize


def split_dirs(root: Path):
    for train, test in (("training_data", "testing_data"), ("train", "test")):
        if (root / train).exists() and (root / test).exists():
            return root / train, root / test
    raise SystemExit(f"{root}: expected training_data/ and testing_data/ subdirectories")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root", type=Path)
    ap.add_argument("--out", type=Path, default=Path("runs/funsd"))
    ap.add_argument("--max-iterations", type=int, default=3)
    ap.add_argument("--timeout-seconds", type=float, default=7200)
    ap.add_argument("--no-prune", action="store_true")
    ap.add_argument("--other", type=Path, help="predictions of another model, for the combined row")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    train_dir, test_dir = split_dirs(args.root)
    gconf = GraphConfig(prune=not args.no_prune)
    t0 = time.monotonic()
    g_train, s_train = build_corpus(train_dir, gconf)
    g_test, s_test = build_corpus(test_dir, gconf)
    result = synthesize(g_train, s_train, SynthesisConfig(max_iterations=args.max_iterations,
                                                          timeout_seconds=args.timeout_seconds))
    synth_s = time.monotonic() - t0
    preds = run_program(result.program, g_test)
    rows = {"program": score(preds, s_test)}
    if args.other:
        other = read_predictions(args.other)
        negatives = run_program(result.negatives, g_test)
        rows["other"] = score(other, s_test)
        rows["program+other"] = score(combine(preds, other, negatives), s_test)

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "program.json").write_bytes(serialize_program(result.program))
    summary = {"seconds": round(synth_s, 1), "synthesis": result.report(),
               "scores": {k: {m: getattr(r, m) for m in ("tp", "fp", "fn", "precision", "recall", "f1")}
                          for k, r in rows.items()}}
    (args.out / "report.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(format_table(rows))
    print(f"synthesis + graph building: {synth_s:.1f} s")


if __name__ == "__main__":
    main()
