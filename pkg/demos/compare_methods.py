"""
Which search growth option is cheapest?
=======================================

Each method turns its missed-lorry counts into an expected cost per option.
The exact methods and Monte Carlo run in seconds; the four discrete-event
variants take several minutes each, so they are run from the command line:

    calais-cba compare --out results
"""

from calais_cba.analysis import sa_missed_by_cell
from calais_cba.flow import BaseConfig, run_grid
from calais_cba.report import comparison_table, method_costs
from calais_cba.tree import dt_missed_by_cell

mc = run_grid("MC", BaseConfig(), replications=10, seed=42)
rows = [
    method_costs("SA", sa_missed_by_cell()),
    method_costs("DT", dt_missed_by_cell()),
    method_costs("MC", {cell: r.mean("missed") for cell, r in mc.items()}),
]
report = comparison_table(rows)
print(report.to_markdown())
print(report.to_markdown(relative=True))
