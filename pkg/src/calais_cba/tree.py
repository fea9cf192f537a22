"""Decision trees: a small generic representation plus the Calais screening tree.

The Calais tree follows one positive lorry through the French controls, the
UK shed and the berth. Stage probabilities are calibrated from the base-year
counts with the attempt-inflation closure: total positive attempts are

    N(r) = french_found + uk_found * r + missed / r

so that the expected French finds stay constant, UK finds grow with r and
misses shrink with 1/r. Forward propagation of the tree times N(r) * (1 + CG)
therefore reproduces the scenario-analysis counts exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from scipy.optimize import brentq

from .analysis import PolicyMatrix
from .scenario import (
    DEFAULT_CONSTANTS,
    DEFAULT_COSTS,
    DEFAULT_FACTORS,
    CalibrationConstants,
    CostModel,
    ModelRangeError,
    ScenarioFactors,
    as_fraction,
    format_growth,
    scale_factor,
    to_pence,
)

__all__ = [
    "TreeStructureError",
    "CalibrationRangeError",
    "Branch",
    "TreeNode",
    "TreeConfig",
    "CalaisTreeParams",
    "OUTCOMES",
    "build_calais_tree",
    "build_policy_tree",
    "rollback",
    "rollback_value",
    "word_category",
    "r_max",
    "dt_found_matrix",
    "dt_missed_by_cell",
    "dt_policy_costs",
    "tree_outline",
    "tree_dot",
]

FRENCH_FOUND = "french-found"
SHED_FOUND = "shed-found"
BERTH_FOUND = "berth-found"
MISSED = "missed"
OUTCOMES = (FRENCH_FOUND, SHED_FOUND, BERTH_FOUND, MISSED)

_PROB_TOL = 1e-9


class TreeStructureError(ValueError):
    """The tree violates a structural invariant (probabilities, cycles, kinds)."""


class CalibrationRangeError(ModelRangeError):
    """Requested coverage ratio would push a branch probability outside [0, 1]."""


@dataclass(frozen=True)
class Branch:
    label: str
    child: "TreeNode"
    probability: Fraction | float | None = None


@dataclass(frozen=True)
class TreeNode:
    """A node of a decision tree.

    ``kind`` is ``"decision"``, ``"chance"`` or ``"terminal"``. Terminals carry
    an ``outcome`` class and a ``value`` (a cost, or any per-entity payoff).
    ``weight`` on the root is the number of entities entering the tree.
    """

    kind: str
    label: str
    branches: tuple = ()
    outcome: str | None = None
    value: Fraction | float = 0
    weight: Fraction | float = 1

    def __post_init__(self):
        if self.kind not in ("decision", "chance", "terminal"):
            raise TreeStructureError(f"unknown node kind {self.kind!r}")
        if self.kind == "terminal" and self.branches:
            raise TreeStructureError(f"terminal {self.label!r} has branches")
        if self.kind != "terminal" and not self.branches:
            raise TreeStructureError(f"{self.kind} node {self.label!r} has no branches")

    @classmethod
    def chance(cls, label, *branches, **kw):
        return cls("chance", label, tuple(Branch(lab, child, p) for lab, p, child in branches), **kw)

    @classmethod
    def decision(cls, label, *branches, **kw):
        return cls("decision", label, tuple(Branch(lab, child) for lab, child in branches), **kw)

    @classmethod
    def terminal(cls, label, outcome=None, value=0):
        return cls("terminal", label, outcome=outcome, value=value)

    def walk(self):
        """Depth-first iteration over (depth, incoming branch, node)."""
        stack = [(0, None, self)]
        while stack:
            depth, branch, node = stack.pop()
            yield depth, branch, node
            for b in reversed(node.branches):
                stack.append((depth + 1, b, b.child))


def _check_chance(node: TreeNode):
    total = 0
    for b in node.branches:
        p = b.probability
        if p is None or not 0 <= p <= 1:
            raise TreeStructureError(
                f"branch {b.label!r} of {node.label!r} has probability {p!r}"
            )
        total += p
    if abs(total - 1) > _PROB_TOL:
        raise TreeStructureError(
            f"branches of {node.label!r} sum to {float(total):.12g}, not 1"
        )


def validate(root: TreeNode):
    """Check probabilities and acyclicity. Shared subtrees are allowed."""
    on_path = set()

    def visit(node):
        if id(node) in on_path:
            raise TreeStructureError(f"cycle through {node.label!r}")
        if node.kind == "chance":
            _check_chance(node)
        on_path.add(id(node))
        for b in node.branches:
            visit(b.child)
        on_path.discard(id(node))

    visit(root)


def rollback(root: TreeNode, total=None) -> dict:
    """Expected number of entities reaching each terminal outcome class.

    Probabilities are pushed forward from the root and multiplied by ``total``
    (default: the root's ``weight``). Decision nodes are not allowed here; use
    :func:`rollback_value` for trees with choices.
    """
    validate(root)
    total = root.weight if total is None else total
    counts: dict = {}

    def push(node, mass):
        if node.kind == "terminal":
            counts[node.outcome] = counts.get(node.outcome, 0) + mass
            return
        if node.kind == "decision":
            raise TreeStructureError("rollback of counts needs a decision-free tree")
        for b in node.branches:
            push(b.child, mass * b.probability)

    push(root, total)
    return counts


def rollback_value(node: TreeNode, minimize: bool = True):
    """Fold back terminal values: chance -> expectation, decision -> best branch.

    Returns ``(value, choice)`` where ``choice`` is the label of the selected
    branch at the root if the root is a decision node, else ``None``.
    Ties at a decision node go to the earliest branch.
    """
    if node.kind == "terminal":
        return node.value, None
    if node.kind == "chance":
        _check_chance(node)
        return sum(b.probability * rollback_value(b.child, minimize)[0] for b in node.branches), None
    values = [(rollback_value(b.child, minimize)[0], i) for i, b in enumerate(node.branches)]
    pick = min(values) if minimize else max(values, key=lambda v: (v[0], -v[1]))
    return pick[0], node.branches[pick[1]].label


def word_category(p) -> str:
    """Verbal label used when numeric probabilities cannot be published."""
    if not 0 <= p <= 1:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    if p > Fraction(1, 2):
        return "large"
    if p > Fraction(1, 10):
        return "medium"
    if p > Fraction(1, 100):
        return "small"
    return "very small"


# -- Calais tree -------------------------------------------------------------


@dataclass(frozen=True)
class TreeConfig:
    """Internal branch splits that leave the stage aggregates unchanged.

    ``soft_share`` is the share of soft-sided lorries (unpublished; default
    50/50). ``co2_confirm`` is P(CO2 probe positive | flagged positive lorry);
    the PMMW flag probability is derived so that soft lorries reach the French
    aggregate. ``shed_detection`` and ``berth_detection`` are P(found |
    searched); selection probabilities are derived from them.
    """

    soft_share: Fraction = Fraction(1, 2)
    co2_confirm: Fraction = Fraction(9, 10)
    shed_detection: Fraction = Fraction(19, 20)
    berth_detection: Fraction = Fraction(19, 20)

    def __post_init__(self):
        for name in ("soft_share", "co2_confirm", "shed_detection", "berth_detection"):
            v = as_fraction(getattr(self, name))
            object.__setattr__(self, name, v)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("co2_confirm", "shed_detection", "berth_detection"):
            if getattr(self, name) == 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CalaisTreeParams:
    """Stage probabilities of the Calais tree for one coverage ratio ``r``."""

    r: Fraction
    cg: Fraction
    attempt_total: Fraction
    p_french: Fraction
    p_shed_given_passed: Fraction
    p_berth_given_passed_shed: Fraction
    constants: CalibrationConstants = field(default=DEFAULT_CONSTANTS, repr=False)

    @classmethod
    def from_ratio(cls, r, cg=0, constants: CalibrationConstants = DEFAULT_CONSTANTS):
        r, cg = as_fraction(r), as_fraction(cg)
        if r <= 0:
            raise CalibrationRangeError(f"coverage ratio must be positive, got {r}")
        if cg <= -1:
            raise ModelRangeError("clandestine growth must exceed -100%")
        c = constants
        uk, missed = c.uk_found_total * r, c.missed_positive_lorries / r
        berth = c.uk_berth_found * r
        n = c.french_found + uk + missed
        return cls(
            r=r,
            cg=cg,
            attempt_total=n,
            p_french=Fraction(c.french_found) / n,
            p_shed_given_passed=(c.uk_shed_found * r) / (uk + missed) if uk + missed else Fraction(0),
            p_berth_given_passed_shed=berth / (berth + missed) if berth + missed else Fraction(0),
            constants=c,
        )

    @property
    def entering(self) -> Fraction:
        """Positive lorries entering the tree, N(r) * (1 + CG)."""
        return self.attempt_total * (1 + self.cg)

    def expected(self) -> dict:
        c, k = self.constants, 1 + self.cg
        return {
            FRENCH_FOUND: c.french_found * k,
            SHED_FOUND: c.uk_shed_found * self.r * k,
            BERTH_FOUND: c.uk_berth_found * self.r * k,
            MISSED: c.missed_positive_lorries / self.r * k,
        }

    def branch_probabilities(self, config: TreeConfig) -> dict:
        """Every internal branch probability implied by the stage aggregates."""
        return {
            "pmmw_flag": self.p_french / config.co2_confirm,
            "co2_confirm": config.co2_confirm,
            "hb_flag": self.p_french,
            "shed_select": self.p_shed_given_passed / config.shed_detection,
            "shed_detect": config.shed_detection,
            "berth_select": self.p_berth_given_passed_shed / config.berth_detection,
            "berth_detect": config.berth_detection,
        }

    def check(self, config: TreeConfig):
        bad = {k: v for k, v in self.branch_probabilities(config).items() if not 0 <= v <= 1}
        if bad:
            detail = ", ".join(f"{k}={float(v):.4f}" for k, v in bad.items())
            raise CalibrationRangeError(
                f"r={float(self.r):.4f} is outside the calibrated range ({detail})"
            )


def r_max(config: TreeConfig = TreeConfig(), constants: CalibrationConstants = DEFAULT_CONSTANTS,
          upper: float = 1e6) -> float:
    """Largest coverage ratio keeping every branch probability <= 1.

    The binding constraints are the shed and berth selection probabilities,
    both increasing in r; ``inf`` when neither ever reaches 1.
    """

    def worst(r):
        p = CalaisTreeParams.from_ratio(Fraction(r), 0, constants).branch_probabilities(config)
        return float(max(p["shed_select"], p["berth_select"])) - 1.0

    if worst(upper) <= 0:
        return float("inf")
    lo = 1e-9
    if worst(lo) > 0:
        return 0.0
    return brentq(worst, lo, upper, xtol=1e-12)


def _uk_subtree(params, probs, miss_value, path):
    berth = TreeNode.chance(
        "Berth",
        ("searched", probs["berth_select"], TreeNode.chance(
            "Berth search",
            ("found", probs["berth_detect"], TreeNode.terminal(f"{path}berth: found", BERTH_FOUND)),
            ("not found", 1 - probs["berth_detect"],
             TreeNode.terminal(f"{path}berth: boarded", MISSED, miss_value)),
        )),
        ("not searched", 1 - probs["berth_select"],
         TreeNode.terminal(f"{path}berth: boarded unsearched", MISSED, miss_value)),
    )
    shed = TreeNode.chance(
        "Shed",
        ("searched", probs["shed_select"], TreeNode.chance(
            "Shed search",
            ("found", probs["shed_detect"], TreeNode.terminal(f"{path}shed: found", SHED_FOUND)),
            ("not found", 1 - probs["shed_detect"], berth),
        )),
        ("not searched", 1 - probs["shed_select"], berth),
    )
    uk_passport = TreeNode.chance("UK passport", ("passed", Fraction(1), shed))
    return TreeNode.chance("Ticket", ("bought", Fraction(1), uk_passport))


def build_calais_tree(r, cg=0, config: TreeConfig = TreeConfig(),
                      constants: CalibrationConstants = DEFAULT_CONSTANTS,
                      cost_per_missed=0) -> TreeNode:
    """Tree for one positive lorry at coverage ratio ``r`` and clandestine growth ``cg``.

    The root's ``weight`` is the expected number of positive lorries entering,
    so ``rollback(tree)`` returns annual expected counts per outcome. Missed
    terminals carry ``cost_per_missed`` as their value.
    """
    params = CalaisTreeParams.from_ratio(r, cg, constants)
    params.check(config)
    probs = params.branch_probabilities(config)
    s = config.soft_share
    found = lambda label: TreeNode.terminal(label, FRENCH_FOUND)  # noqa: E731

    soft = TreeNode.chance(
        "PMMW scan",
        ("suspicious", probs["pmmw_flag"], TreeNode.chance(
            "CO2 probe",
            ("positive", probs["co2_confirm"], TreeNode.chance(
                "Open (soft)", ("clandestines found", Fraction(1), found("soft: opened, found")))),
            ("negative", 1 - probs["co2_confirm"],
             _uk_subtree(params, probs, cost_per_missed, "soft/co2-clear/")),
        )),
        ("clear", 1 - probs["pmmw_flag"], _uk_subtree(params, probs, cost_per_missed, "soft/clear/")),
    )
    hard = TreeNode.chance(
        "HB detector",
        ("suspicious", probs["hb_flag"], TreeNode.chance(
            "Open (hard)", ("clandestines found", Fraction(1), found("hard: opened, found")))),
        ("clear", 1 - probs["hb_flag"], _uk_subtree(params, probs, cost_per_missed, "hard/clear/")),
    )
    side = TreeNode.chance("Lorry side", ("soft-sided", s, soft), ("hard-sided", 1 - s, hard))
    return TreeNode(
        "chance", "Passport", (Branch("passed", side, Fraction(1)),), weight=params.entering
    )


def _cell_missed(tg, cg, sg, config, constants):
    tree = build_calais_tree(scale_factor(tg, sg), cg, config, constants)
    return rollback(tree).get(MISSED, 0)


def dt_missed_by_cell(factors: ScenarioFactors = DEFAULT_FACTORS, config: TreeConfig = TreeConfig(),
                      constants: CalibrationConstants = DEFAULT_CONSTANTS) -> dict:
    """Rolled-back missed lorries for every (tg, cg, sg) cell."""
    return {(tg, cg, sg): _cell_missed(tg, cg, sg, config, constants) for tg, cg, sg in factors.cells()}


def dt_found_matrix(cg=0, factors: ScenarioFactors = DEFAULT_FACTORS, config: TreeConfig = TreeConfig(),
                    constants: CalibrationConstants = DEFAULT_CONSTANTS) -> PolicyMatrix:
    """UK-found (shed + berth) lorries from the rolled-back tree."""
    cg = as_fraction(cg)
    rows = []
    for tg in factors.tg_values:
        row = []
        for sg in factors.sg_options:
            counts = rollback(build_calais_tree(scale_factor(tg, sg), cg, config, constants))
            row.append(counts.get(SHED_FOUND, 0) + counts.get(BERTH_FOUND, 0))
        rows.append(tuple(row))
    return PolicyMatrix(
        factors.tg_values, factors.sg_options, tuple(rows), "count", cg,
        f"Decision Tree results: Number of positive lorries found if CG = {format_growth(cg)}",
    )


def build_policy_tree(factors: ScenarioFactors = DEFAULT_FACTORS, config: TreeConfig = TreeConfig(),
                      constants: CalibrationConstants = DEFAULT_CONSTANTS,
                      costs: CostModel = DEFAULT_COSTS) -> TreeNode:
    """SG decision -> TG chance -> CG chance, leaves valued in pounds."""
    options = []
    for sg in factors.sg_options:
        tg_branches = []
        for tg, p_tg in factors.tg_levels:
            cg_branches = []
            for cg, p_cg in factors.cg_levels:
                tree = build_calais_tree(scale_factor(tg, sg), cg, config, constants,
                                         costs.cost_per_missed_lorry)
                value = rollback_value(tree)[0] * tree.weight + costs.search_cost(sg)
                cg_branches.append((f"CG {format_growth(cg)}", p_cg, TreeNode.terminal(
                    f"SG {format_growth(sg)} / TG {format_growth(tg)} / CG {format_growth(cg)}",
                    "cost", value)))
            tg_branches.append((f"TG {format_growth(tg)}", p_tg,
                                TreeNode.chance("Clandestine growth", *cg_branches)))
        options.append((f"SG {format_growth(sg)}", TreeNode.chance("Traffic growth", *tg_branches)))
    return TreeNode.decision("Search growth", *options)


def dt_policy_costs(factors: ScenarioFactors = DEFAULT_FACTORS, config: TreeConfig = TreeConfig(),
                    constants: CalibrationConstants = DEFAULT_CONSTANTS,
                    costs: CostModel = DEFAULT_COSTS) -> dict:
    """Expected cost (pence) of each SG option from the rolled-back policy tree."""
    policy = build_policy_tree(factors, config, constants, costs)
    validate(policy)
    out = {}
    for sg, branch in zip(factors.sg_options, policy.branches):
        out[sg] = to_pence(rollback_value(branch.child)[0])
    return out


# -- export ------------------------------------------------------------------


def _fmt_prob(p) -> str:
    return f"p={float(p):.5f} ({word_category(p)})"


def tree_outline(root: TreeNode, indent: str = "  ") -> str:
    """Plain-text indented outline with numeric and verbal probabilities."""
    lines = []
    for depth, branch, node in root.walk():
        pad = indent * depth
        head = ""
        if branch is not None:
            head = f"[{branch.label}"
            if branch.probability is not None:
                head += f" {_fmt_prob(branch.probability)}"
            head += "] "
        if node.kind == "terminal":
            tail = f" -> {node.outcome}" if node.outcome else ""
            lines.append(f"{pad}{head}{node.label}{tail}")
        else:
            lines.append(f"{pad}{head}{node.label} <{node.kind}>")
    return "\n".join(lines) + "\n"


def tree_dot(root: TreeNode, name: str = "decision_tree") -> str:
    """Graphviz DOT text. Shared subtrees are expanded so the graph stays a tree."""
    shapes = {"decision": "box", "chance": "ellipse", "terminal": "plaintext"}
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    counter = [0]

    def emit(node):
        nid = f"n{counter[0]}"
        counter[0] += 1
        label = node.label + (f"\\n{node.outcome}" if node.kind == "terminal" and node.outcome else "")
        lines.append(f'  {nid} [shape={shapes[node.kind]}, label="{label}"];')
        for b in node.branches:
            cid = emit(b.child)
            elabel = b.label
            if b.probability is not None:
                elabel += f"\\n{float(b.probability):.4f} ({word_category(b.probability)})"
            lines.append(f'  {nid} -> {cid} [label="{elabel}"];')
        return nid

    emit(root)
    lines.append("}")
    return "\n".join(lines) + "\n"
