from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from calais_cba.analysis import sa_missed_by_cell
from calais_cba.report import (
    ComparisonReport,
    IncompleteExperimentError,
    MethodCosts,
    comparison_table,
    expected_cost,
    method_costs,
    method_label,
)
from calais_cba.scenario import DEFAULT_FACTORS
from calais_cba.tree import dt_missed_by_cell

SG = DEFAULT_FACTORS.sg_options


def _row(method, pounds):
    return MethodCosts(method, SG, tuple(p * 100 for p in pounds))


def test_sa_row_costs_and_relative():
    row = method_costs("SA", sa_missed_by_cell())
    assert row.costs == (6_050_000_000, 6_000_000_000, 6_041_666_667)
    assert row.cheapest_option == 2
    assert row.relative == (50_000_000, 0, 41_666_667)


def test_dt_row_equals_sa_row():
    assert method_costs("DT", dt_missed_by_cell()).costs == method_costs("SA", sa_missed_by_cell()).costs


def test_nothing_missed_leaves_only_search_cost():
    zero = {cell: 0 for cell in DEFAULT_FACTORS.cells()}
    assert [expected_cost(zero)[sg] for sg in SG] == [0, 500_000_000, 1_000_000_000]


def test_float_means_are_accepted():
    cells = {cell: 150.0 for cell in DEFAULT_FACTORS.cells()}
    assert expected_cost(cells)[0] == 6_000_000_000


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 400), st.integers(-50, 50))
def test_shifting_every_cell_keeps_the_cheapest_option(scale, shift):
    base = sa_missed_by_cell()
    k = Fraction(scale + 1, 100)
    scaled = {c: v * k for c, v in base.items()}
    shifted = {c: v + shift for c, v in base.items()}
    a, b = method_costs("x", scaled), method_costs("x", shifted)
    # a common shift moves every option by the same amount
    assert len({y - x for x, y in zip(method_costs("x", base).costs, b.costs)}) == 1
    assert a.relative[a.cheapest_index] == 0


def test_costs_are_linear_in_missed_counts():
    base = sa_missed_by_cell()
    doubled = method_costs("x", {c: 2 * v for c, v in base.items()}).costs
    zero = {cell: 0 for cell in DEFAULT_FACTORS.cells()}
    search = method_costs("x", zero).costs
    single = method_costs("x", base).costs
    for d, s, z in zip(doubled, single, search):
        assert abs(d - z - 2 * (s - z)) <= 1


def test_incomplete_grid_names_missing_cells():
    cells = sa_missed_by_cell()
    cells.pop((0, 0, 0))
    with pytest.raises(IncompleteExperimentError) as err:
        expected_cost(cells)
    assert err.value.missing == [(0, 0, 0)]


def test_ties_go_to_the_lower_growth_option():
    row = _row("x", (5, 3, 3))
    assert row.cheapest_option == 2 and row.relative == (200, 0, 0)


def test_single_method_report():
    rep = comparison_table([_row("SA", (7, 4, 6))])
    assert rep.cheapest_column == (2,)
    assert rep.dissenters == ()
    assert "| SA | £3 | £0 | £2 | 2 |" in rep.to_markdown(relative=True)


def test_dissenting_method_is_flagged():
    rows = [_row(m, (2, 1, 3)) for m in ("SA", "DT", "MC", "DES0")] + [_row("DES3", (1, 2, 3))]
    rep = comparison_table(rows)
    assert rep.cheapest_column == (2, 2, 2, 2, 1)
    assert rep.majority_option == 2 and rep.dissenters == ("DES3",)
    md = rep.to_markdown()
    assert md.splitlines()[2] == "| Option | 1: SG=0% | 2: SG=10% | 3: SG=20% | Cheapest option |"
    assert "| DES 3 | £1 | £2 | £3 | 1 |" in md
    assert "differs from the majority for: DES 3" in md
    csv_lines = rep.to_csv().splitlines()
    assert csv_lines[0] == "method,sg_0%,sg_+10%,sg_+20%,cheapest_option,dissents"
    assert csv_lines[-1] == "DES3,1,2,3,1,1"


def test_report_validation():
    with pytest.raises(ValueError):
        comparison_table([])
    with pytest.raises(ValueError):
        comparison_table([_row("a", (1, 2, 3)), MethodCosts("b", (0, Fraction(1, 10)), (1, 2))])
    with pytest.raises(ValueError):
        MethodCosts("x", SG, (1, 2))
    assert isinstance(comparison_table([_row("a", (1, 2, 3))]), ComparisonReport)


def test_labels():
    assert method_label("MC") == "MCS" and method_label("DES2") == "DES 2" and method_label("SA") == "SA"
