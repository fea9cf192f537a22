"""Deterministic scenario analysis over the TG x SG grid.

Found and missed counts scale linearly with the effective search coverage
r = (1 + SG) / (1 + TG): found lorries grow with r, missed lorries shrink
with 1/r, and both scale with (1 + CG).

Clandestine growth scales only the missed-lorry part of a cell's cost. The
search-growth price is a budget decision and does not grow with the number of
clandestines; applying (1 + CG) to the whole cell does not reproduce the
published policy totals.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .scenario import (
    DEFAULT_CONSTANTS,
    DEFAULT_COSTS,
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

__all__ = [
    "PolicyMatrix",
    "proportion_matrix",
    "found_matrix",
    "missed_matrix",
    "relative_matrix",
    "expected_cost_matrix",
    "policy_expected_cost",
    "policy_costs",
    "sa_missed_by_cell",
    "scenario_tables",
]


@dataclass(frozen=True)
class PolicyMatrix:
    """A TG (rows) x SG (columns) table.

    ``kind`` is one of ``"count"``, ``"ratio"``, ``"share"`` or ``"money"``.
    Money cells are integer pence, the others exact fractions (or floats for
    simulation output).
    """

    tg_levels: tuple
    sg_options: tuple
    cells: tuple
    kind: str = "count"
    cg_context: Fraction | None = None
    title: str = ""

    def __post_init__(self):
        if len(self.cells) != len(self.tg_levels) or any(
            len(row) != len(self.sg_options) for row in self.cells
        ):
            raise ValueError("cell grid does not match TG x SG shape")

    @property
    def shape(self) -> tuple:
        return len(self.tg_levels), len(self.sg_options)

    def cell(self, tg, sg):
        tg, sg = as_fraction(tg), as_fraction(sg)
        try:
            i = self.tg_levels.index(tg)
            j = self.sg_options.index(sg)
        except ValueError:
            raise ModelRangeError(f"no cell for TG={tg}, SG={sg}") from None
        return self.cells[i][j]

    def to_array(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.cells])

    def map(self, fn, kind=None, title=None) -> "PolicyMatrix":
        cells = tuple(tuple(fn(c) for c in row) for row in self.cells)
        return PolicyMatrix(
            self.tg_levels, self.sg_options, cells, kind or self.kind, self.cg_context,
            self.title if title is None else title,
        )

    # -- rendering ---------------------------------------------------------

    def format_cell(self, value, decimals=None) -> str:
        if self.kind == "money":
            return format_pounds(value)
        if decimals is None:
            decimals = {"count": 1, "share": 4, "ratio": 6}.get(self.kind, 2)
        return f"{float(round(as_fraction(value), decimals)):.{decimals}f}"

    def _rows(self, decimals=None):
        header = ["TG vs. SG"] + [f"SG {format_growth(s)}" for s in self.sg_options]
        body = [
            [f"TG {format_growth(t)}"] + [self.format_cell(c, decimals) for c in row]
            for t, row in zip(self.tg_levels, self.cells)
        ]
        return header, body

    def to_markdown(self, decimals=None) -> str:
        header, body = self._rows(decimals)
        lines = []
        if self.title:
            lines += [f"**{self.title}**", ""]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        lines += ["| " + " | ".join(r) + " |" for r in body]
        return "\n".join(lines) + "\n"

    def to_csv(self, decimals=None) -> str:
        header, body = self._rows(decimals)
        if self.kind == "money":
            # machine-readable pounds, rounded half-to-even
            body = [
                [r[0]] + [str(round(Fraction(c, 100))) for c in row]
                for r, row in zip(body, self.cells)
            ]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
        return buf.getvalue()


def _grid(fn, factors, kind, cg=None, title=""):
    cells = tuple(
        tuple(fn(tg, sg) for sg in factors.sg_options) for tg in factors.tg_values
    )
    return PolicyMatrix(factors.tg_values, factors.sg_options, cells, kind, cg, title)


def proportion_matrix(
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
) -> PolicyMatrix:
    return _grid(
        lambda tg, sg: proportion_searched(tg, sg, constants),
        factors, "share", title="Proportion of vehicles searched",
    )


def found_matrix(
    cg=0,
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
) -> PolicyMatrix:
    """UK-found positive lorries per cell, ``uk_found * r * (1 + cg)``."""
    cg = as_fraction(cg)
    factors.p_cg(cg)
    base = constants.uk_found_total
    return _grid(
        lambda tg, sg: base * scale_factor(tg, sg) * (1 + cg),
        factors, "count", cg,
        f"Adjusted number of positive lorries found if CG = {format_growth(cg)}",
    )


def missed_matrix(
    cg=0,
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
) -> PolicyMatrix:
    """Missed positive lorries per cell, ``missed * (1 + cg) / r``."""
    cg = as_fraction(cg)
    factors.p_cg(cg)
    base = constants.missed_positive_lorries
    return _grid(
        lambda tg, sg: base * (1 + cg) / scale_factor(tg, sg),
        factors, "count", cg,
        f"Number of positive lorries missed if CG = {format_growth(cg)}",
    )


def relative_matrix(matrix: PolicyMatrix, base_cell_value) -> PolicyMatrix:
    base = as_fraction(base_cell_value)
    if base == 0:
        raise ModelRangeError("relative matrix needs a non-zero base value")
    return matrix.map(
        lambda c: as_fraction(c) / base, kind="ratio",
        title=f"{matrix.title} (relative to {float(base):g})" if matrix.title else "",
    )


def _cell_cost(missed, sg, costs: CostModel) -> Fraction:
    return missed * costs.cost_per_missed_lorry + costs.search_cost(sg)


def expected_cost_matrix(
    cg=0,
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
    costs: CostModel = DEFAULT_COSTS,
) -> PolicyMatrix:
    """Cost per cell in pence: missed lorries at full price plus the SG budget."""
    missed = missed_matrix(cg, factors, constants)
    cells = tuple(
        tuple(to_pence(_cell_cost(m, sg, costs)) for m, sg in zip(row, factors.sg_options))
        for row in missed.cells
    )
    return PolicyMatrix(
        factors.tg_values, factors.sg_options, cells, "money", missed.cg_context,
        f"Expected costs including SG costs for CG = {format_growth(cg)}",
    )


def _exact_policy_cost(sg, factors, constants, costs) -> Fraction:
    sg = factors.check_sg(sg)
    total = Fraction(0)
    for cg in factors.cg_values:
        missed = missed_matrix(cg, factors, constants)
        for tg in factors.tg_values:
            p = combined_probability(tg, cg, factors)
            total += p * _cell_cost(missed.cell(tg, sg), sg, costs)
    return total


def policy_expected_cost(
    sg,
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
    costs: CostModel = DEFAULT_COSTS,
) -> int:
    """Probability-weighted cost of one SG option over all (TG, CG), in pence."""
    return to_pence(_exact_policy_cost(sg, factors, constants, costs))


def policy_costs(
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
    costs: CostModel = DEFAULT_COSTS,
) -> dict:
    return {sg: policy_expected_cost(sg, factors, constants, costs) for sg in factors.sg_options}


def sa_missed_by_cell(
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
) -> dict:
    """Missed positive lorries for every (tg, cg, sg) cell."""
    out = {}
    for cg in factors.cg_values:
        m = missed_matrix(cg, factors, constants)
        for tg in factors.tg_values:
            for sg in factors.sg_options:
                out[(tg, cg, sg)] = m.cell(tg, sg)
    return out


def scenario_tables(
    factors: ScenarioFactors = DEFAULT_FACTORS,
    constants: CalibrationConstants = DEFAULT_CONSTANTS,
    costs: CostModel = DEFAULT_COSTS,
) -> dict:
    """Every scenario-analysis table, keyed by a short name.

    The CG-conditioned tables are produced for every CG level; the
    ``*_cg0`` style keys use the level's percentage.
    """
    tables = {"proportion_searched": proportion_matrix(factors, constants)}
    for cg in factors.cg_values:
        pct = int(cg * 100)
        tag = f"cg{pct:+d}" if pct else "cg0"
        found = found_matrix(cg, factors, constants)
        missed = missed_matrix(cg, factors, constants)
        tables[f"found_{tag}"] = found
        tables[f"found_relative_{tag}"] = relative_matrix(
            found, constants.uk_found_total * (1 + cg)
        )
        tables[f"missed_{tag}"] = missed
        tables[f"missed_relative_{tag}"] = relative_matrix(
            missed, constants.missed_positive_lorries * (1 + cg)
        )
        tables[f"expected_cost_{tag}"] = expected_cost_matrix(cg, factors, constants, costs)
    return tables
