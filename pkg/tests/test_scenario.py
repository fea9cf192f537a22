from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from calais_cba.scenario import (
    DEFAULT_CONSTANTS,
    DEFAULT_FACTORS,
    CalibrationConstants,
    CostModel,
    ModelRangeError,
    ScenarioFactors,
    as_fraction,
    combined_probability,
    format_growth,
    format_pounds,
    proportion_searched,
    scale_factor,
    to_pence,
)

growth = st.fractions(min_value=Fraction(-9, 10), max_value=Fraction(2), max_denominator=1000)


def test_base_year_derived_quantities():
    c = DEFAULT_CONSTANTS
    assert c.uk_found_total == 1674
    assert c.total_found == 3474
    assert c.successful_clandestines == 600
    assert c.cost_per_clandestine == 100_000
    assert c.cost_per_missed_lorry == 400_000
    assert c.base_positive_attempts == 3624


def test_uk_screened_is_the_searched_share_of_traffic():
    c = DEFAULT_CONSTANTS
    assert abs(c.uk_screened / c.total_lorries_per_year - float(c.uk_screen_share)) < 1e-3


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        CalibrationConstants(french_found=-1)


def test_factor_probabilities():
    f = DEFAULT_FACTORS
    assert [f.p_tg(t) for t in f.tg_values] == [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]
    assert all(f.p_cg(c) == Fraction(1, 3) for c in f.cg_values)
    assert sum(combined_probability(t, c) for t in f.tg_values for c in f.cg_values) == 1


def test_cells_iterate_tg_then_cg_then_sg():
    cells = list(DEFAULT_FACTORS.cells())
    assert len(cells) == 27
    assert cells[0] == (0, Fraction(-1, 2), 0)
    assert cells[1] == (0, Fraction(-1, 2), Fraction(1, 10))
    assert cells[-1] == (Fraction(1, 5), Fraction(1, 4), Fraction(1, 5))


def test_combined_probability_marginalises_to_tg():
    f = DEFAULT_FACTORS
    for tg in f.tg_values:
        assert sum(combined_probability(tg, cg) for cg in f.cg_values) == f.p_tg(tg)


@pytest.mark.parametrize("levels", [
    ((0, Fraction(1, 2)), (Fraction(1, 10), Fraction(1, 3))),
    ((0, Fraction(1, 2)), (0, Fraction(1, 2))),
    ((Fraction(-1), 1),),
])
def test_bad_factor_levels(levels):
    with pytest.raises(ValueError):
        ScenarioFactors(tg_levels=levels)


def test_unknown_level_probability():
    with pytest.raises(ModelRangeError):
        DEFAULT_FACTORS.p_tg(Fraction(3, 10))


def test_proportion_searched_base_and_corner():
    assert proportion_searched(0, 0) == Fraction(33, 100)
    assert proportion_searched(Fraction(1, 5), Fraction(1, 10)) == Fraction(121, 400)  # 0.3025


def test_proportion_searched_out_of_range():
    with pytest.raises(ModelRangeError):
        proportion_searched(Fraction(-9, 10), 1)


@given(growth, growth)
def test_scale_factor_identity_and_inverse(tg, sg):
    r = scale_factor(tg, sg)
    assert r * (1 + tg) == 1 + sg
    assert scale_factor(tg, tg) == 1
    assert scale_factor(sg, tg) == 1 / r


def test_float_inputs_go_through_their_decimal_repr():
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction("1/3") == Fraction(1, 3)


def test_money_helpers():
    assert to_pence(Fraction(1, 200)) == 0  # half a penny rounds to even
    assert to_pence(Fraction(3, 200)) == 2
    assert format_pounds(5_954_545_455) == "£59,545,455"
    assert format_pounds(-50_000_000) == "-£500,000"
    assert format_growth(Fraction(1, 10)) == "+10%"
    assert format_growth(0) == "0%"
    assert format_growth(Fraction(-1, 2)) == "-50%"


def test_cost_model():
    m = CostModel.from_constants(DEFAULT_CONSTANTS)
    assert m.cost_per_missed_lorry == 400_000
    assert m.search_cost(Fraction(1, 5)) == 10_000_000
    with pytest.raises(ModelRangeError):
        m.search_cost(Fraction(3, 10))
