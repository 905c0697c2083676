"""The top-level constraint algorithm.

Iterates per the standard loop for linear Pfaffian systems: restrict by
zero-forms until none remain, absorb/restrict torsion until it vanishes, run
Cartan's involutivity test, prolong when the test fails, and repeat.  Every
restriction and prolongation is recorded as a ladder step with its
constraints (classified base vs fiber), Cartan characters and genericity
assumptions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .scalars import NonLinearInUnknowns, Scalar, p_div_exact
from .exterior import Substitution
from .hamilton import HamiltonLocus
from .pfaffian import (CharacterVector, EmptyLocus, PfaffianSystem,
                       cartan_characters, cartan_test, essential_torsion,
                       extract_zero_forms, prolong, restrict,
                       structure_equations)


class NeedsUserBranch(ValueError):
    """A constraint is nonlinear in every permissible unknown and does not
    split off a linear factor under the recorded assumptions."""

    def __init__(self, constraint: Scalar):
        self.constraint = constraint
        super().__init__(f"constraint needs a case split: {constraint} = 0")


class BudgetExceeded(RuntimeError):
    pass


VERDICT_INVOLUTIVE = "involutive"
VERDICT_EMPTY = "empty"
VERDICT_BUDGET = "budget_exceeded"
VERDICT_BRANCH = "needs_user_branch"


@dataclass
class LadderStep:
    level: int
    kind: str                         # zero_forms|torsion|prolongation|involutive|empty_locus
    new_base_constraints: list
    new_fiber_constraints: list
    characters: Optional[CharacterVector]            # coordinate-flag flavor
    assumptions: list                 # rendered "expr != 0", new at this step
    added_coordinates: list
    characters_generic: Optional[CharacterVector] = None


@dataclass
class ConstraintLadder:
    steps: list
    final_system: Optional[PfaffianSystem]
    verdict: str
    substitution: Substitution        # composed: Grassmann chart -> final chart
    hamilton: Optional[HamiltonLocus] = None

    def characters_trail(self) -> list:
        return [s.characters.s for s in self.steps if s.characters is not None]

    def all_assumptions(self) -> list:
        out = []
        for s in self.steps:
            for a in s.assumptions:
                if a not in out:
                    out.append(a)
        return out


def redundant_assumption(a: Scalar, seen: Sequence[Scalar]) -> bool:
    """True when a's nonvanishing already follows from recorded assumptions
    (a is a product of powers of them, up to a constant)."""
    cur = a.num
    for _ in range(16):
        if len(cur) == 1 and () in cur:
            return True
        for s in seen:
            q = p_div_exact(cur, s.num)
            if q is not None and q != cur:
                cur = q
                break
        else:
            return False
    return False


def classify_constraint(c: Scalar, chart) -> tuple:
    """('base', 0) when only level-0 coordinates occur, else ('fiber', max level)."""
    level = 0
    for n in c.variables():
        if n in chart:
            level = max(level, chart.level_of(n))
    return ("base", 0) if level == 0 else ("fiber", level)


def _split_constraints(cons: Sequence[Scalar], chart):
    base, fiber = [], []
    for c in cons:
        kind, _ = classify_constraint(c, chart)
        (base if kind == "base" else fiber).append(c)
    return base, fiber


def _branch_policy(sys: PfaffianSystem, constraints: list, offending: Scalar) -> list:
    """Replace a nonlinear constraint per the declared branch policy.

    Drop it when a factor already vanishes on the locus; divide out a factor
    recorded as nonzero; otherwise the caller must branch.
    """
    rest = [c for c in constraints if c != offending]
    for z in list(sys.zero_forms) + rest:
        if z == offending or z.as_constant() is not None:
            continue
        if p_div_exact(offending.num, z.num) is not None:
            return rest  # a factor is already zero on the locus
    for a in sys.assumptions:
        q = p_div_exact(offending.num, a.num)
        if q is not None:
            return rest + [Scalar(q, offending.den).constraint_normal()]
    raise NeedsUserBranch(offending)


def _restrict_with_policy(sys: PfaffianSystem, constraints: Sequence[Scalar]):
    cons = list(constraints)
    for _ in range(len(cons) + 8):
        try:
            return restrict(sys, cons)
        except NonLinearInUnknowns as err:
            cons = _branch_policy(sys, cons, err.equation.constraint_normal())
    raise NeedsUserBranch(cons[0] if cons else Scalar.const(0))


def run_system(sys: PfaffianSystem, subst: Substitution, seed: int,
               max_prolongations: int = 4, max_steps: int = 32,
               hamilton: Optional[HamiltonLocus] = None) -> ConstraintLadder:
    """Drive the constraint loop on an existing Pfaffian system."""
    if max_prolongations < 1 or max_steps < 1:
        raise ValueError("budgets must be >= 1")
    steps: list = []
    prolongations = 0
    seen: list = list(sys.assumptions)

    def new_assumptions(s: PfaffianSystem) -> list:
        fresh = []
        for a in s.assumptions:
            if not redundant_assumption(a, seen):
                seen.append(a)
                fresh.append(f"{a} != 0")
        return fresh

    def record(kind, constraints=(), characters=None, characters_generic=None,
               added=(), system=None, sub=None):
        base, fiber = _split_constraints(list(constraints), sys.chart)
        if sub is not None:
            # a restriction may eliminate base coordinates while solving fiber
            # relations (e.g. a field forced to zero); surface those too
            for name, value in sub.bindings.items():
                if sys.chart.level_of(name) == 0:
                    derived = (Scalar.var(name) - value).constraint_normal()
                    if all(derived != c for c in base):
                        base.append(derived)
        steps.append(LadderStep(
            level=len(steps) + 1, kind=kind,
            new_base_constraints=base, new_fiber_constraints=fiber,
            characters=characters, characters_generic=characters_generic,
            assumptions=new_assumptions(system if system is not None else sys),
            added_coordinates=list(added)))

    while len(steps) < max_steps:
        zf = extract_zero_forms(sys)
        if zf:
            try:
                nxt, sub = _restrict_with_policy(sys, zf)
            except EmptyLocus:
                record("empty_locus", constraints=zf)
                return ConstraintLadder(steps, None, VERDICT_EMPTY, subst, hamilton)
            except NeedsUserBranch:
                record("zero_forms", constraints=zf)
                return ConstraintLadder(steps, sys, VERDICT_BRANCH, subst, hamilton)
            record("zero_forms", constraints=zf, system=nxt, sub=sub)
            sys, subst = nxt, subst.compose(sub)
            continue
        se = structure_equations(sys)
        torsion = essential_torsion(se)
        if torsion:
            chars = cartan_characters(se, seed)
            chars_gen = cartan_characters(se, seed, flag="generic")
            try:
                nxt, sub = _restrict_with_policy(sys, torsion)
            except EmptyLocus:
                record("empty_locus", constraints=torsion, characters=chars,
                       characters_generic=chars_gen)
                return ConstraintLadder(steps, None, VERDICT_EMPTY, subst, hamilton)
            except NeedsUserBranch:
                record("torsion", constraints=torsion, characters=chars,
                       characters_generic=chars_gen)
                return ConstraintLadder(steps, sys, VERDICT_BRANCH, subst, hamilton)
            record("torsion", constraints=torsion, characters=chars,
                   characters_generic=chars_gen, system=nxt, sub=sub)
            sys, subst = nxt, subst.compose(sub)
            continue
        report = cartan_test(sys, seed)
        if report.involutive:
            record("involutive", characters=report.characters,
                   characters_generic=report.characters_generic)
            return ConstraintLadder(steps, sys, VERDICT_INVOLUTIVE, subst, hamilton)
        if prolongations >= max_prolongations:
            break
        sys, added = prolong(sys)
        prolongations += 1
        record("prolongation", characters=report.characters,
               characters_generic=report.characters_generic, added=added, system=sys)
    return ConstraintLadder(steps, sys, VERDICT_BUDGET, subst, hamilton)


def run(hl: HamiltonLocus, seed: int, max_prolongations: int = 4,
        max_steps: int = 32) -> ConstraintLadder:
    """Run the constraint algorithm on a Hamilton Pfaffian."""
    return run_system(hl.pfaffian, hl.solved, seed,
                      max_prolongations=max_prolongations,
                      max_steps=max_steps, hamilton=hl)


def summarize(ladder: ConstraintLadder) -> dict:
    """Deterministic plain-data rendering of a ladder (steps as strings)."""
    steps = []
    for s in ladder.steps:
        steps.append({
            "level": s.level,
            "kind": s.kind,
            "base_constraints": [str(c) for c in s.new_base_constraints],
            "fiber_constraints": [str(c) for c in s.new_fiber_constraints],
            "characters": list(s.characters.s) if s.characters else [],
            "assumptions": list(s.assumptions),
            "added_coordinates": list(s.added_coordinates),
        })
    out = {
        "verdict": ladder.verdict,
        "steps": steps,
        "final_generators": [str(g) for g in ladder.final_system.generators]
        if ladder.final_system is not None else [],
    }
    return out
