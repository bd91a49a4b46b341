#!/usr/bin/env python3
"""Worst-case growth of a program next to its blind image.

Reproduces the exponential-gap experiment: the dyadic running example is
polynomial, its blind image doubles its worst output per input letter.

Usage: python scripts/growth_experiment.py [program.trs] [max_size]
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from polytrs.blind import blind_program, classify_growth, measure_strong_poly
from polytrs.parser import parse_program

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def main() -> None:
    path = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else CORPUS / "running.trs"
    hi = int(sys.argv[2]) if len(sys.argv) > 2 else 9
    program = parse_program(path.read_text())
    image = blind_program(program).program
    sizes = range(2, hi + 1)

    original = measure_strong_poly(program, sizes=sizes, inputs_cap=64)
    blinded = measure_strong_poly(image, sizes=sizes)

    print(f"program: {path.name} (blind image: {image.main.name})")
    print(f"{'n':>3} {'rules':>8} {'out':>6} {'bl rules':>9} {'bl out':>7}")
    for a, b in zip(original.rows, blinded.rows):
        print(
            f"{a.size:>3} {a.worst_rules:>8} {a.worst_result_size:>6} "
            f"{b.worst_rules:>9} {b.worst_result_size:>7}"
        )
    print("original rules:", classify_growth([r.worst_rules for r in original.rows]))
    print("blind rules:   ", classify_growth([r.worst_rules for r in blinded.rows]))


if __name__ == "__main__":
    main()
