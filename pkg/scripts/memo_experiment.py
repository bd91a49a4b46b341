#!/usr/bin/env python3
"""Plain call-by-value against memoisation on the doubly-recursive program.

Prints rule counts for both interpreters over a size sweep; the cbv column
doubles per step while the memo column climbs by a constant.

Usage: python scripts/memo_experiment.py [lo] [hi]
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from polytrs.parser import parse_program, parse_term
from polytrs.semantics import eval_cbv, eval_memo

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def main() -> None:
    lo = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    hi = int(sys.argv[2]) if len(sys.argv) > 2 else 14
    program = parse_program((CORPUS / "doublerec.trs").read_text())
    symbols = {s.name: s for s in program.signature}

    print(f"{'n':>3} {'cbv rules':>10} {'memo rules':>11} {'updates':>8} {'reads':>6}")
    for n in range(lo, hi + 1):
        term = parse_term("dup(" + "s " * n + "0)", symbols)
        cbv = next(iter(eval_cbv(program, term)))
        memo = eval_memo(program, term)
        print(
            f"{n:>3} {cbv.stats.rule_count:>10} {memo.stats.rule_count:>11} "
            f"{len(memo.cache_trace):>8} {memo.stats.semi_active_count:>6}"
        )


if __name__ == "__main__":
    main()
