"""Expected policy costs per method and the cross-method comparison.

Every method reduces to the same thing: an expected number of missed
positive lorries in each (TG, CG, SG) cell. Costs follow from the cost model
and the scenario probabilities; the comparison picks the cheapest search
growth option per method and flags methods that disagree with the majority.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .scenario import (
    DEFAULT_COSTS,
    DEFAULT_FACTORS,
    CostModel,
    ScenarioFactors,
    as_fraction,
    format_growth,
    format_pounds,
    to_pence,
)

__all__ = [
    "METHODS",
    "IncompleteExperimentError",
    "MethodCosts",
    "ComparisonReport",
    "expected_cost",
    "method_costs",
    "comparison_table",
    "method_label",
]

METHODS = ("SA", "DT", "MC", "DES0", "DES1", "DES2", "DES3")

_LABELS = {"MC": "MCS", "DES0": "DES 0", "DES1": "DES 1", "DES2": "DES 2", "DES3": "DES 3"}


def method_label(method: str) -> str:
    return _LABELS.get(method, method)


class IncompleteExperimentError(KeyError):
    """Some (TG, CG, SG) cells have no missed-lorry figure."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"{len(self.missing)} scenario cells missing, e.g. {self.missing[:3]}")


def _exact(x) -> Fraction:
    # replication means arrive as floats; take their exact binary value
    return Fraction(x) if isinstance(x, float) else as_fraction(x)


def expected_cost(missed_by_cell: dict, cost_model: CostModel = DEFAULT_COSTS,
                  factors: ScenarioFactors = DEFAULT_FACTORS) -> dict:
    """``{sg: pence}``: probability-weighted missed cost plus the search cost.

    The cost model is in pounds; the result is rounded to whole pence.

    ``missed_by_cell`` maps ``(tg, cg, sg)`` to the expected number of missed
    positive lorries in that cell (for simulations, the replication mean).
    """
    cells = {(as_fraction(t), as_fraction(c), as_fraction(s)): v for (t, c, s), v in missed_by_cell.items()}
    missing = [cell for cell in factors.cells() if cell not in cells]
    if missing:
        raise IncompleteExperimentError(missing)
    out = {}
    for sg in factors.sg_options:
        total = Fraction(0)
        for tg in factors.tg_values:
            for cg in factors.cg_values:
                p = factors.p_tg(tg) * factors.p_cg(cg)
                total += p * _exact(cells[(tg, cg, sg)]) * cost_model.cost_per_missed_lorry
        out[sg] = to_pence(total + cost_model.search_cost(sg))
    return out


@dataclass(frozen=True)
class MethodCosts:
    """One method's expected cost for each search growth option."""

    method: str
    sg_options: tuple
    costs: tuple  # pence, aligned with sg_options

    def __post_init__(self):
        if len(self.costs) != len(self.sg_options) or not self.costs:
            raise ValueError("one cost per SG option is required")

    @classmethod
    def from_dict(cls, method: str, costs: dict) -> "MethodCosts":
        keys = sorted(costs, key=as_fraction)
        return cls(method, tuple(as_fraction(k) for k in keys), tuple(int(costs[k]) for k in keys))

    @property
    def cheapest_index(self) -> int:
        """0-based index of the cheapest option; ties go to the lower SG."""
        return min(range(len(self.costs)), key=lambda i: (self.costs[i], self.sg_options[i]))

    @property
    def cheapest_option(self) -> int:
        """1-based option number, as printed in the comparison tables."""
        return self.cheapest_index + 1

    @property
    def relative(self) -> tuple:
        low = self.costs[self.cheapest_index]
        return tuple(c - low for c in self.costs)


def method_costs(method: str, missed_by_cell: dict, cost_model: CostModel = DEFAULT_COSTS,
                 factors: ScenarioFactors = DEFAULT_FACTORS) -> MethodCosts:
    return MethodCosts.from_dict(method, expected_cost(missed_by_cell, cost_model, factors))


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple

    @property
    def sg_options(self) -> tuple:
        return self.rows[0].sg_options

    @property
    def cheapest_column(self) -> tuple:
        return tuple(r.cheapest_option for r in self.rows)

    @property
    def majority_option(self) -> int:
        counts = Counter(self.cheapest_column)
        top = max(counts.values())
        return min(o for o, n in counts.items() if n == top)

    @property
    def dissenters(self) -> tuple:
        """Methods whose cheapest option differs from the majority's."""
        m = self.majority_option
        return tuple(r.method for r in self.rows if r.cheapest_option != m)

    def _header(self):
        return ["Option"] + [f"{i + 1}: SG={format_growth(sg).lstrip('+')}" for i, sg in enumerate(self.sg_options)] + [
            "Cheapest option"]

    def to_markdown(self, relative: bool = False) -> str:
        title = ("Relative cost comparisons of all methodologies" if relative
                 else "Overall cost comparisons of all methodologies")
        head = self._header()
        lines = [f"**{title}**", "", "| " + " | ".join(head) + " |",
                 "|" + "|".join("---" for _ in head) + "|"]
        for r in self.rows:
            vals = r.relative if relative else r.costs
            cells = [method_label(r.method)] + [format_pounds(v) for v in vals] + [str(r.cheapest_option)]
            lines.append("| " + " | ".join(cells) + " |")
        if self.dissenters:
            lines += ["", "Cheapest option differs from the majority for: " + ", ".join(
                method_label(m) for m in self.dissenters)]
        return "\n".join(lines) + "\n"

    def to_csv(self, relative: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method"] + [f"sg_{format_growth(sg)}" for sg in self.sg_options]
                   + ["cheapest_option", "dissents"])
        dis = set(self.dissenters)
        for r in self.rows:
            vals = r.relative if relative else r.costs
            # pence to whole pounds, half-to-even
            w.writerow([r.method] + [round(Fraction(v, 100)) for v in vals]
                       + [r.cheapest_option, int(r.method in dis)])
        return buf.getvalue()


def comparison_table(rows) -> ComparisonReport:
    rows = tuple(rows)
    if not rows:
        raise ValueError("need at least one method")
    sgs = rows[0].sg_options
    if any(r.sg_options != sgs for r in rows):
        raise ValueError("methods disagree on the SG options")
    return ComparisonReport(rows)
