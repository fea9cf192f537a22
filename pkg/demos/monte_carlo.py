"""
Sampling the tree: Monte Carlo against the exact answer
=======================================================

Only positive lorries are simulated, with the tree's probabilities and no
service times. Ten replications per cell already sit close to the tree.
"""

from calais_cba.flow import found_matrix_from_results, mc_vs_dt_errors, run_grid
from calais_cba.flow import BaseConfig
from calais_cba.tree import dt_found_matrix

results = run_grid("MC", BaseConfig(), replications=10, seed=42)
sim = found_matrix_from_results(results, 0)
print(sim.to_markdown(decimals=2))

# tree minus simulation, cell by cell
print(mc_vs_dt_errors(sim, dt_found_matrix(0)).to_markdown(decimals=2))

res = results[(0, 0, 0)]
s = res.summary["uk_found"]
print(f"base cell: {s.mean:.1f} +/- {s.half_width:.1f} (95% CI, n={s.n})")
print("conservation holds:", all(r.conservation_holds() for r in results.values()))
