import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from calais_cba.analysis import found_matrix, policy_costs
from calais_cba.scenario import DEFAULT_FACTORS, ModelRangeError
from calais_cba.tree import (
    BERTH_FOUND,
    FRENCH_FOUND,
    MISSED,
    SHED_FOUND,
    CalaisTreeParams,
    CalibrationRangeError,
    TreeConfig,
    TreeNode,
    TreeStructureError,
    build_calais_tree,
    build_policy_tree,
    dt_found_matrix,
    dt_missed_by_cell,
    dt_policy_costs,
    r_max,
    rollback,
    rollback_value,
    tree_dot,
    tree_outline,
    validate,
    word_category,
)

ratio = st.fractions(min_value=Fraction(1, 2), max_value=Fraction(19, 10), max_denominator=500)


def test_rollback_reproduces_base_year():
    counts = rollback(build_calais_tree(1))
    assert counts == {FRENCH_FOUND: 1800, SHED_FOUND: 890, BERTH_FOUND: 784, MISSED: 150}


def test_base_stage_probabilities():
    p = CalaisTreeParams.from_ratio(1)
    assert float(p.p_french) == pytest.approx(0.49669, abs=5e-6)
    assert float(p.p_shed_given_passed) == pytest.approx(0.48794, abs=5e-6)
    assert float(p.p_berth_given_passed_shed) == pytest.approx(0.83940, abs=5e-6)


def test_outcome_probabilities_sum_to_one():
    tree = build_calais_tree(Fraction(6, 5), Fraction(1, 4))
    validate(tree)
    total = sum(rollback(tree).values())
    assert total == tree.weight


@settings(max_examples=40, deadline=None)
@given(ratio, st.sampled_from([Fraction(-1, 2), Fraction(0), Fraction(1, 4)]))
def test_rollback_matches_closed_form(r, cg):
    counts = rollback(build_calais_tree(r, cg))
    k = 1 + cg
    assert counts[FRENCH_FOUND] == 1800 * k
    assert counts[SHED_FOUND] + counts[BERTH_FOUND] == 1674 * r * k
    assert counts[MISSED] == 150 / r * k


@settings(max_examples=20, deadline=None)
@given(st.fractions(min_value=Fraction(1, 10), max_value=Fraction(9, 10)),
       st.fractions(min_value=Fraction(1, 2), max_value=1))
def test_internal_splits_leave_stage_totals_unchanged(soft, confirm):
    cfg = TreeConfig(soft_share=soft, co2_confirm=confirm)
    assert rollback(build_calais_tree(1, 0, cfg)) == rollback(build_calais_tree(1))


def test_dt_found_equals_sa_found_in_every_cell():
    for cg in DEFAULT_FACTORS.cg_values:
        assert dt_found_matrix(cg).cells == found_matrix(cg).cells


def test_dt_policy_costs_equal_sa_costs():
    assert dt_policy_costs() == policy_costs()


def test_policy_tree_picks_ten_percent():
    value, choice = rollback_value(build_policy_tree())
    assert choice == "SG +10%"
    assert value == 60_000_000


def test_missed_by_cell_has_27_cells():
    cells = dt_missed_by_cell()
    assert len(cells) == 27
    assert cells[(0, 0, Fraction(1, 10))] == Fraction(1500, 11)


def test_r_max_matches_berth_selection_bound():
    # berth selection p / 0.95 reaches 1 where 784 r * 0.05 = 0.95 * 150 / r
    assert r_max() == pytest.approx(math.sqrt(0.95 * 150 / (0.05 * 784)), rel=1e-9)
    assert r_max() == pytest.approx(1.9066, abs=1e-4)


def test_beyond_r_max_is_a_calibration_range_error():
    with pytest.raises(CalibrationRangeError):
        build_calais_tree(Fraction(2))
    with pytest.raises(CalibrationRangeError):
        CalaisTreeParams.from_ratio(0)


@pytest.mark.parametrize("p, word", [
    (Fraction(51, 100), "large"), (Fraction(1, 2), "medium"), (Fraction(11, 100), "medium"),
    (Fraction(1, 10), "small"), (Fraction(2, 100), "small"), (Fraction(1, 100), "very small"), (0, "very small"),
    (1, "large"),
])
def test_word_categories(p, word):
    assert word_category(p) == word


def test_word_category_rejects_non_probabilities():
    with pytest.raises(ValueError):
        word_category(Fraction(11, 10))


def test_chance_probabilities_must_sum_to_one():
    leaf = TreeNode.terminal("x")
    bad = TreeNode.chance("bad", ("a", Fraction(1, 2), leaf), ("b", Fraction(1, 3), leaf))
    with pytest.raises(TreeStructureError):
        validate(bad)


def test_rollback_refuses_decision_nodes():
    with pytest.raises(TreeStructureError):
        rollback(build_policy_tree())


def test_rollback_value_minimises_expected_cost():
    cheap = TreeNode.chance("c", ("a", Fraction(1, 2), TreeNode.terminal("a", value=10)),
                            ("b", Fraction(1, 2), TreeNode.terminal("b", value=30)))
    dear = TreeNode.terminal("d", value=25)
    value, choice = rollback_value(TreeNode.decision("pick", ("cheap", cheap), ("dear", dear)))
    assert (value, choice) == (20, "cheap")


def test_outline_and_dot_carry_verbal_probabilities():
    tree = build_calais_tree(1)
    text = tree_outline(tree)
    assert "PMMW scan" in text and "(medium)" in text and "-> missed" in text
    dot = tree_dot(tree)
    assert dot.startswith("digraph") and dot.count("->") == len(list(tree.walk())) - 1


def test_negative_clandestine_growth_floor():
    with pytest.raises(ModelRangeError):
        CalaisTreeParams.from_ratio(1, -1)
