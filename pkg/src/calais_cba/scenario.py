"""Shared constants, factor grid, probability and cost rules for the Calais model.

Every method (scenario analysis, decision tree, Monte Carlo, discrete-event
simulation) reads its inputs from the objects defined here so that all of them
work from the same calibrated base year (April 2007 - April 2008).

Growth fractions and probabilities are held as :class:`fractions.Fraction` so
that derived tables are exact; money is held as integer pence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real

__all__ = [
    "CalibrationConstants",
    "ScenarioFactors",
    "CostModel",
    "ModelRangeError",
    "as_fraction",
    "combined_probability",
    "scale_factor",
    "proportion_searched",
    "to_pence",
    "pounds",
    "format_pounds",
    "format_growth",
]


class ModelRangeError(ValueError):
    """A factor level or derived quantity lies outside the modelled range."""


def as_fraction(x) -> Fraction:
    """Convert ``x`` to an exact fraction.

    Floats go through their shortest decimal repr so that ``0.1`` becomes
    ``1/10`` rather than the binary approximation.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, Real):
        return Fraction(repr(float(x)))
    raise TypeError(f"cannot interpret {x!r} as a number")


def to_pence(pounds_value) -> int:
    """Exact pounds (Fraction/int/float) to integer pence, half-to-even."""
    return round(as_fraction(pounds_value) * 100)


def pounds(pence: int) -> Fraction:
    return Fraction(pence, 100)


def format_pounds(pence: int, precision: int = 0) -> str:
    """Render pence as pounds, e.g. ``£59,545,455``.

    Rounding to the displayed precision is banker's rounding.
    """
    value = round(Fraction(pence, 100), precision)
    sign = "-" if value < 0 else ""
    value = abs(value)
    if precision == 0:
        return f"{sign}£{int(value):,}"
    return f"{sign}£{float(value):,.{precision}f}"


def format_growth(x) -> str:
    """``Fraction(1, 10)`` -> ``'+10%'``, ``0`` -> ``'0%'``."""
    pct = as_fraction(x) * 100
    text = f"{float(pct):g}%"
    return f"+{text}" if pct > 0 else text


@dataclass(frozen=True)
class CalibrationConstants:
    """Base-year counts for the Calais lorry flow.

    ``uk_screened`` is the UK-side screened count from the source statistics;
    the companion row for the French side repeats the total lorry count and is
    read as "lorries screened on the French site" (every lorry is screened).
    """

    total_lorries_per_year: int = 900_000
    uk_screen_share: Fraction = Fraction(33, 100)
    french_screened: int = 900_000
    uk_screened: int = 296_406
    french_found: int = 1_800
    uk_shed_found: int = 890
    uk_berth_found: int = 784
    missed_positive_lorries: int = 150
    clandestines_per_lorry: int = 4
    cost_per_clandestine_per_year: int = 20_000
    stay_years: int = 5

    def __post_init__(self):
        object.__setattr__(self, "uk_screen_share", as_fraction(self.uk_screen_share))
        counts = (
            self.total_lorries_per_year,
            self.french_found,
            self.uk_shed_found,
            self.uk_berth_found,
            self.missed_positive_lorries,
        )
        if any(c < 0 for c in counts):
            raise ValueError("calibration counts must be non-negative")
        if not 0 < self.uk_screen_share <= 1:
            raise ValueError("uk_screen_share must lie in (0, 1]")

    @property
    def uk_found_total(self) -> int:
        return self.uk_shed_found + self.uk_berth_found

    @property
    def total_found(self) -> int:
        return self.french_found + self.uk_found_total

    @property
    def successful_clandestines(self) -> int:
        return self.missed_positive_lorries * self.clandestines_per_lorry

    @property
    def cost_per_clandestine(self) -> int:
        """Whole-stay cost of one clandestine in pounds (no discounting)."""
        return self.cost_per_clandestine_per_year * self.stay_years

    @property
    def cost_per_missed_lorry(self) -> int:
        """Pounds lost per positive lorry that reaches the UK."""
        return self.clandestines_per_lorry * self.cost_per_clandestine

    @property
    def base_positive_attempts(self) -> int:
        """Positive lorries entering the system in the base year (found + missed)."""
        return self.total_found + self.missed_positive_lorries


@dataclass(frozen=True)
class ScenarioFactors:
    """Traffic growth (TG), clandestine growth (CG) and search growth (SG).

    TG and CG are random with the given level probabilities; SG is the
    decision variable and carries no probability.
    """

    tg_levels: tuple = (
        (Fraction(0), Fraction(1, 4)),
        (Fraction(1, 10), Fraction(1, 2)),
        (Fraction(1, 5), Fraction(1, 4)),
    )
    cg_levels: tuple = (
        (Fraction(-1, 2), Fraction(1, 3)),
        (Fraction(0), Fraction(1, 3)),
        (Fraction(1, 4), Fraction(1, 3)),
    )
    sg_options: tuple = (Fraction(0), Fraction(1, 10), Fraction(1, 5))

    def __post_init__(self):
        tg = tuple((as_fraction(g), as_fraction(p)) for g, p in self.tg_levels)
        cg = tuple((as_fraction(g), as_fraction(p)) for g, p in self.cg_levels)
        sg = tuple(as_fraction(s) for s in self.sg_options)
        object.__setattr__(self, "tg_levels", tg)
        object.__setattr__(self, "cg_levels", cg)
        object.__setattr__(self, "sg_options", sg)
        for name, levels in (("tg", tg), ("cg", cg)):
            if not levels:
                raise ValueError(f"{name}_levels is empty")
            if any(not 0 <= p <= 1 for _, p in levels):
                raise ValueError(f"{name} probabilities must lie in [0, 1]")
            if sum(p for _, p in levels) != 1:
                raise ValueError(f"{name} probabilities must sum to 1")
            if len({g for g, _ in levels}) != len(levels):
                raise ValueError(f"duplicate {name} levels")
            if any(g <= -1 for g, _ in levels):
                raise ValueError(f"{name} growth must exceed -100%")
        if not sg or len(set(sg)) != len(sg):
            raise ValueError("sg_options must be non-empty and distinct")
        if any(s <= -1 for s in sg):
            raise ValueError("search growth must exceed -100%")

    @property
    def tg_values(self) -> tuple:
        return tuple(g for g, _ in self.tg_levels)

    @property
    def cg_values(self) -> tuple:
        return tuple(g for g, _ in self.cg_levels)

    def p_tg(self, tg) -> Fraction:
        tg = as_fraction(tg)
        for g, p in self.tg_levels:
            if g == tg:
                return p
        raise ModelRangeError(f"unknown traffic-growth level {tg}")

    def p_cg(self, cg) -> Fraction:
        cg = as_fraction(cg)
        for g, p in self.cg_levels:
            if g == cg:
                return p
        raise ModelRangeError(f"unknown clandestine-growth level {cg}")

    def check_sg(self, sg) -> Fraction:
        sg = as_fraction(sg)
        if sg not in self.sg_options:
            raise ModelRangeError(f"unknown search-growth option {sg}")
        return sg

    def cells(self):
        """Yield every (tg, cg, sg) combination in table order."""
        for tg in self.tg_values:
            for cg in self.cg_values:
                for sg in self.sg_options:
                    yield tg, cg, sg


@dataclass(frozen=True)
class CostModel:
    """Cost of a missed positive lorry plus the price of each SG option (pounds)."""

    cost_per_missed_lorry: int = 400_000
    search_growth_cost: dict = field(
        default_factory=lambda: {
            Fraction(0): 0,
            Fraction(1, 10): 5_000_000,
            Fraction(1, 5): 10_000_000,
        }
    )

    def __post_init__(self):
        object.__setattr__(
            self,
            "search_growth_cost",
            {as_fraction(k): v for k, v in self.search_growth_cost.items()},
        )

    @classmethod
    def from_constants(cls, constants: CalibrationConstants, search_growth_cost=None):
        kwargs = {"cost_per_missed_lorry": constants.cost_per_missed_lorry}
        if search_growth_cost is not None:
            kwargs["search_growth_cost"] = search_growth_cost
        return cls(**kwargs)

    def search_cost(self, sg) -> int:
        sg = as_fraction(sg)
        try:
            return self.search_growth_cost[sg]
        except KeyError:
            raise ModelRangeError(f"no search cost configured for SG={sg}") from None


DEFAULT_CONSTANTS = CalibrationConstants()
DEFAULT_FACTORS = ScenarioFactors()
DEFAULT_COSTS = CostModel()


def combined_probability(tg, cg, factors: ScenarioFactors = DEFAULT_FACTORS) -> Fraction:
    """p(TG, CG) = p(TG) * p(CG), the two factors being independent."""
    return factors.p_tg(tg) * factors.p_cg(cg)


def scale_factor(tg, sg) -> Fraction:
    """Effective change in search coverage, r = (1 + SG) / (1 + TG)."""
    tg, sg = as_fraction(tg), as_fraction(sg)
    if tg <= -1:
        raise ModelRangeError("traffic growth must exceed -100%")
    return (1 + sg) / (1 + tg)


def proportion_searched(tg, sg, constants: CalibrationConstants = DEFAULT_CONSTANTS) -> Fraction:
    """Share of traffic searched by the UK side under (TG, SG)."""
    share = constants.uk_screen_share * scale_factor(tg, sg)
    if not 0 <= share <= 1:
        raise ModelRangeError(
            f"searched share {float(share):.4f} outside [0, 1] for TG={tg}, SG={sg}"
        )
    return share
