"""Synthesize and score one program per synthetic layout family.

    python3 scripts/synthetic_benchmark.py --train 20 --test 10 --out runs/synthetic
"""
import argparse
import json
import tempfile
import time
from pathlib import Path

from linksynth.document import build_corpus
from linksynth.evaluation import format_table, score
from linksynth.interpreter import run_program
from linksynth.synthesis import SynthesisConfig, synthesize
from linksynth.synthetic import FAMILIES, write_forms


def run_family(family, n_train, n_test, seed, config, work):
    train, test = work / family / "train", work / family / "test"
    write_forms(train, family, n_train, seed)
    write_forms(test, family, n_test, seed + 1000)
    g_train, s_train = build_corpus(train)
    g_test, s_test = build_corpus(test)
    t0 = time.monotonic()
    result = synthesize(g_train, s_train, config)
    elapsed = time.monotonic() - t0
    return score(run_program(result.program, g_test), s_test), elapsed, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", type=int, default=20)
    ap.add_argument("--test", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iterations", type=int, default=3)
    ap.add_argument("--families", nargs="+", default=list(FAMILIES), choices=FAMILIES)
    ap.add_argument("--out", help="directory for corpora and a results.json; temporary if omitted")
    args = ap.parse_args()

    config = SynthesisConfig(max_iterations=args.max_iterations)
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(args.out or tmp)
        rows, results = {}, {}
        for fam in args.families:
            report, elapsed, res = run_family(fam, args.train, args.test, args.seed, config, work)
            rows[fam] = report
            results[fam] = {"seconds": round(elapsed, 3), **report.to_dict(), "synthesis": res.report()}
            results[fam].pop("per_doc")
        print(format_table(rows))
        if args.out:
            (work / "results.json").write_text(json.dumps(results, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
