"""
Scenario analysis of UK search growth at Calais
===============================================

Three factors: traffic growth (TG), clandestine growth (CG) and the policy
lever, search growth (SG). Every table here is exact arithmetic.
"""

from calais_cba.analysis import expected_cost_matrix, found_matrix, missed_matrix, policy_costs, proportion_matrix
from calais_cba.scenario import DEFAULT_FACTORS, format_pounds

# share of lorries searched; searching more lorries raises it, more traffic dilutes it
print(proportion_matrix().to_markdown())

# positive lorries found and missed in the UK zones, CG at its middle level
print(found_matrix(0).to_markdown())
print(missed_matrix(0).to_markdown())

# £400,000 per missed lorry, plus the cost of the extra searching
print(expected_cost_matrix(0).to_markdown())

# weight each (TG, CG) cell by its probability and pick the cheapest SG
costs = policy_costs()
for sg in DEFAULT_FACTORS.sg_options:
    print(f"SG {float(sg):4.0%}: {format_pounds(costs[sg])}")
best = min(costs, key=costs.get)
print(f"cheapest: SG {float(best):.0%}")
