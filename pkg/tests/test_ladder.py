from fractions import Fraction

import pytest

from cartaneds.scalars import Chart, Dependent, Scalar, ONE
from cartaneds.exterior import Form, identity_substitution
from cartaneds.pfaffian import make_system
from cartaneds.ladder import (classify_constraint, redundant_assumption,
                              run, run_system, summarize)


def V(n):
    return Scalar.var(n)


def mechanics_locus(alpha, beta):
    from cartaneds.hamilton import (VariationalProblem, build_lepage_classical,
                                    grassmann_extend, hamilton_equations,
                                    solve_hamilton_locus)
    from cartaneds.exterior import volume_form
    ch = Chart(["t"], [Dependent("q1", "field"), Dependent("q2", "field"),
                       Dependent("v1", "jet", 0, ("q1", "t")),
                       Dependent("v2", "jet", 0, ("q2", "t"))])
    L = V("v1") ** 2 / 2 + V("q2") * V("v1") + (1 - alpha) * V("q1") * V("v2") \
        + Fraction(beta, 2) * (V("q1") - V("q2")) ** 2
    vp = VariationalProblem(chart=ch, lagrangian=volume_form(ch).scale(L), generators=[])
    ls = build_lepage_classical(vp, {"q1": ["p1"], "q2": ["p2"]})
    g = grassmann_extend(ls)
    return solve_hamilton_locus(ls, g, hamilton_equations(ls, g))


def test_free_particle_regime_single_fiber_step():
    lad = run(mechanics_locus(0, 0), seed=3)
    assert lad.verdict == "involutive"
    assert [s.kind for s in lad.steps] == ["zero_forms", "involutive"]
    assert lad.steps[0].new_fiber_constraints == [V("Zv1_t")]
    assert lad.steps[0].new_base_constraints == []


def test_constraint_chain_alpha0_beta1():
    lad = run(mechanics_locus(0, 1), seed=3)
    assert lad.verdict == "involutive"
    bases = [c for s in lad.steps for c in s.new_base_constraints]
    assert any(c == V("q1") - V("q2") for c in bases)
    assert any(c == V("v1") - V("v2") for c in bases)
    fibers = [c for s in lad.steps for c in s.new_fiber_constraints]
    assert any(c == V("Zv2_t") for c in fibers)


def test_classify_constraint():
    ch = Chart(["t"], [Dependent("v", "field"),
                       Dependent("Zv1", "grassmann", 1),
                       Dependent("Zq_x_x", "grassmann", 2)])
    assert classify_constraint(V("v"), ch) == ("base", 0)
    assert classify_constraint(V("Zv1"), ch) == ("fiber", 1)
    assert classify_constraint(V("Zq_x_x") + V("v"), ch) == ("fiber", 2)


def test_levels_strictly_increase_and_terminal_kinds():
    lad = run(mechanics_locus(1, 2), seed=3)
    levels = [s.level for s in lad.steps]
    assert levels == sorted(set(levels))
    assert lad.steps[-1].kind in ("involutive", "empty_locus")


def test_idempotence_at_fixpoint():
    lad = run(mechanics_locus(1, 2), seed=3)
    again = run_system(lad.final_system, identity_substitution(lad.final_system.chart), seed=3)
    assert again.verdict == "involutive"
    assert [s.kind for s in again.steps] == ["involutive"]
    assert again.steps[0].characters.s == lad.steps[-1].characters.s


def test_terminal_system_is_clean():
    lad = run(mechanics_locus(1, 2), seed=3)
    from cartaneds.pfaffian import essential_torsion, extract_zero_forms, structure_equations
    assert extract_zero_forms(lad.final_system) == []
    assert essential_torsion(structure_equations(lad.final_system)) == []


def test_composed_substitution_is_resolved():
    lad = run(mechanics_locus(0, 1), seed=3)
    bound = set(lad.substitution.bindings)
    for value in lad.substitution.bindings.values():
        assert not (value.variables() & bound)


def test_budget_exceeded():
    lad = run(mechanics_locus(1, 2), seed=3, max_steps=2)
    assert lad.verdict == "budget_exceeded"
    with pytest.raises(ValueError):
        run(mechanics_locus(1, 2), seed=3, max_prolongations=0)


def test_needs_user_branch_on_irreducible_product():
    ch = Chart(["x"], [Dependent("u", "field"), Dependent("w", "field"),
                       Dependent("Zu", "grassmann", 1, ("u", "x"))])
    th = Form(ch, 1, {("u",): ONE, ("x",): -V("Zu")})
    sys = make_system(ch, [th], zero_forms=[V("u") * V("w") - V("u")])
    lad = run_system(sys, identity_substitution(ch), seed=1)
    assert lad.verdict == "needs_user_branch"


def test_branch_policy_drops_zero_factor():
    ch = Chart(["x"], [Dependent("u", "field"), Dependent("w", "field"),
                       Dependent("Zu", "grassmann", 1, ("u", "x"))])
    th = Form(ch, 1, {("u",): ONE, ("x",): -V("Zu")})
    sys = make_system(ch, [th],
                      zero_forms=[V("u") - V("w"), (V("u") - V("w")) * (V("Zu") - 1)])
    lad = run_system(sys, identity_substitution(ch), seed=1)
    assert lad.verdict == "involutive"
    assert lad.substitution.bindings["u"] == V("w")
    assert "Zu" not in lad.substitution.bindings  # the product was dropped


def test_branch_policy_divides_by_assumption():
    ch = Chart(["x"], [Dependent("u", "field"), Dependent("w", "field"),
                       Dependent("Zu", "grassmann", 1, ("u", "x"))])
    th = Form(ch, 1, {("u",): ONE, ("x",): -V("Zu")})
    sys = make_system(ch, [th], zero_forms=[(V("w") + 1) * (V("Zu") - 1)],
                      assumptions=[V("w") + 1])
    lad = run_system(sys, identity_substitution(ch), seed=1)
    assert lad.verdict == "involutive"
    assert lad.substitution.bindings["Zu"] == Scalar.const(1)


def test_empty_locus_verdict():
    ch = Chart(["x"], [Dependent("u", "field"),
                       Dependent("Zu", "grassmann", 1, ("u", "x"))])
    th = Form(ch, 1, {("u",): ONE, ("x",): -V("Zu")})
    sys = make_system(ch, [th], zero_forms=[V("u"), V("u") - 1])
    lad = run_system(sys, identity_substitution(ch), seed=1)
    assert lad.verdict == "empty"
    assert lad.steps[-1].kind == "empty_locus"
    assert lad.final_system is None


def test_redundant_assumption():
    y = V("y")
    assert redundant_assumption(y ** 2, [y])
    assert redundant_assumption(3 * y, [y])
    assert not redundant_assumption(y + 1, [y])


def test_ladder_replay_reaches_same_final_system():
    # imposing all recorded base constraints at once on the initial system
    # reaches the same terminal system
    hl = mechanics_locus(0, 1)
    lad = run(hl, seed=3)
    bases = [c for s in lad.steps for c in s.new_base_constraints]
    from cartaneds.pfaffian import restrict
    replayed, _ = restrict(hl.pfaffian, bases)
    lad2 = run_system(replayed, identity_substitution(replayed.chart), seed=3)
    assert lad2.verdict == "involutive"
    assert [str(g) for g in lad2.final_system.generators] == \
        [str(g) for g in lad.final_system.generators]


def test_sundermeyer_locus_complement_is_remaining_velocity_slopes():
    hl = mechanics_locus(1, 2)
    assert hl.pfaffian.complement == ["Zv1_t", "Zv2_t"]


def test_trivial_closed_theta_single_involutive_step():
    from cartaneds.hamilton import build_lepage_explicit, grassmann_extend, solve_hamilton_locus
    ch = Chart(["x"], [Dependent("u", "field")])
    ls = build_lepage_explicit(ch, Form.differential(ch, "x"))
    g = grassmann_extend(ls)
    hl = solve_hamilton_locus(ls, g, [])
    lad = run(hl, seed=1)
    assert lad.verdict == "involutive"
    assert [s.kind for s in lad.steps] == ["involutive"]


def test_summarize_shape():
    lad = run(mechanics_locus(1, 1), seed=3)
    s = summarize(lad)
    assert s["verdict"] == "involutive"
    assert all(set(step) == {"level", "kind", "base_constraints", "fiber_constraints",
                             "characters", "assumptions", "added_coordinates"}
               for step in s["steps"])
