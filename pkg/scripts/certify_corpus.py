#!/usr/bin/env python3
"""One-line certification verdicts for every corpus program.

Usage: python scripts/certify_corpus.py [corpus_dir]
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from polytrs.parser import parse_program
from polytrs.qi import parse_assignment
from polytrs.report import build_report

DEFAULT = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def main() -> None:
    corpus = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT
    print(f"{'program':<20} {'p-criterion':>12} {'blind-p':>8} {'extended-p':>11}")
    for path in sorted(corpus.glob("*.trs")):
        program = parse_program(path.read_text())
        qi_path = path.with_suffix(".qi")
        assignment = (
            parse_assignment(qi_path.read_text(), program) if qi_path.exists() else None
        )
        report = build_report(program, assignment, sizes=range(1, 7))
        v = report.verdicts
        print(
            f"{path.name:<20} {v['p_criterion']:>12} {v['blind_p']:>8} "
            f"{v['extended_p']:>11}"
        )


if __name__ == "__main__":
    main()
