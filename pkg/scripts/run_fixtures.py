#!/usr/bin/env python3
"""Run every bundled fixture and print its constraint ladder in full."""

from fractions import Fraction

from cartaneds.cli import FIXTURE_CASES, FIXTURE_NAMES, fixture_text
from cartaneds.problems import parse_problem
from cartaneds.report import analyze, emit


def main():
    for name in FIXTURE_NAMES:
        if name in ("vacuous-lepage", "inconsistent"):
            continue
        for label, overrides in FIXTURE_CASES.get(name, [("", {})]):
            doc = parse_problem(fixture_text(name),
                                param_overrides={k: Fraction(v) for k, v in overrides.items()})
            rep = analyze(doc)
            tag = f" [{label}]" if label else ""
            print(f"==== {name}{tag}  ({rep.timing:.2f}s)")
            print(emit(rep, "text").decode(), end="")
            print()


if __name__ == "__main__":
    main()
