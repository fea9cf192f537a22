from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from calais_cba.analysis import (
    PolicyMatrix,
    expected_cost_matrix,
    found_matrix,
    missed_matrix,
    policy_costs,
    proportion_matrix,
    relative_matrix,
    sa_missed_by_cell,
    scenario_tables,
)
from calais_cba.scenario import DEFAULT_FACTORS, CalibrationConstants, ModelRangeError

# printed tables, CG = 0, rows TG 0/10/20 %, columns SG 0/10/20 %
PROPORTION = [["0.3300", "0.3630", "0.3960"], ["0.3000", "0.3300", "0.3600"], ["0.2750", "0.3025", "0.3300"]]
FOUND = [[1674.0, 1841.4, 2008.8], [1521.8, 1674.0, 1826.2], [1395.0, 1534.5, 1674.0]]
FOUND_REL = [[1, 1.1, 1.2], [0.909091, 1, 1.090909], [0.833333, 0.916667, 1]]
MISSED = [[150.0, 136.4, 125.0], [165.0, 150.0, 137.5], [180.0, 163.6, 150.0]]
MISSED_REL = [[1.00, 0.91, 0.83], [1.10, 1.00, 0.92], [1.20, 1.09, 1.00]]
COST = [[60_000_000, 59_545_455, 60_000_000], [66_000_000, 65_000_000, 65_000_000],
        [72_000_000, 70_454_545, 70_000_000]]


def test_proportion_table_prints_as_published():
    m = proportion_matrix()
    assert [[m.format_cell(v) for v in row] for row in m.cells] == PROPORTION


def test_found_table_to_one_decimal():
    m = found_matrix(0)
    for row, want in zip(m.cells, FOUND):
        assert [round(float(v), 1) for v in row] == pytest.approx(want, abs=0.1)


def test_missed_table_to_one_decimal():
    m = missed_matrix(0)
    for row, want in zip(m.cells, MISSED):
        assert [round(float(v), 1) for v in row] == pytest.approx(want, abs=0.1)


def test_relative_tables():
    t = scenario_tables()
    for row, want in zip(t["found_relative_cg0"].cells, FOUND_REL):
        assert [float(v) for v in row] == pytest.approx(want, abs=1e-6)
    for row, want in zip(t["missed_relative_cg0"].cells, MISSED_REL):
        assert [float(v) for v in row] == pytest.approx(want, abs=0.005)


def test_expected_cost_table_to_the_pound():
    m = expected_cost_matrix(0)
    assert [[round(Fraction(v, 100)) for v in row] for row in m.cells] == COST


def test_policy_costs_exact():
    costs = policy_costs()
    assert [costs[sg] for sg in DEFAULT_FACTORS.sg_options] == [6_050_000_000, 6_000_000_000, 6_041_666_667]


def test_cg_scales_counts_not_search_cost():
    base, up = expected_cost_matrix(0), expected_cost_matrix(Fraction(1, 4))
    # TG 0 / SG +10%: missed cost scales by 1.25, the £5M search cost does not
    assert up.cell(0, Fraction(1, 10)) - 500_000_000 == pytest.approx(
        1.25 * (base.cell(0, Fraction(1, 10)) - 500_000_000), abs=1)


def test_found_and_missed_sum_to_uk_positives_in_every_cell():
    for cg in DEFAULT_FACTORS.cg_values:
        f, m = found_matrix(cg), missed_matrix(cg)
        for (tg, sg) in [(t, s) for t in DEFAULT_FACTORS.tg_values for s in DEFAULT_FACTORS.sg_options]:
            r = (1 + sg) / (1 + tg)
            assert f.cell(tg, sg) + m.cell(tg, sg) == (1674 * r + 150 / r) * (1 + cg)


def test_missed_by_cell_covers_the_grid():
    cells = sa_missed_by_cell()
    assert set(cells) == set(DEFAULT_FACTORS.cells())
    assert cells[(0, 0, 0)] == 150


def test_relative_to_zero_base_raises():
    zero = CalibrationConstants(missed_positive_lorries=0)
    with pytest.raises(ModelRangeError):
        relative_matrix(missed_matrix(0, constants=zero), 0)


def test_markdown_and_csv_layout():
    m = found_matrix(0)
    md = m.to_markdown().splitlines()
    assert "TG vs. SG" in md[2] and "SG +10%" in md[2]
    assert md[4].startswith("| TG 0%")
    csv_lines = expected_cost_matrix(0).to_csv().splitlines()
    assert csv_lines[1].split(",")[2] == "59545455"


def test_unknown_cell_lookup():
    with pytest.raises(ModelRangeError):
        found_matrix(0).cell(Fraction(3, 10), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=10_000))
def test_missed_scales_linearly_with_base_count(base):
    c = CalibrationConstants(missed_positive_lorries=base)
    m = missed_matrix(0, constants=c)
    assert m.cell(Fraction(1, 5), 0) == Fraction(6, 5) * base
    assert isinstance(m, PolicyMatrix)
