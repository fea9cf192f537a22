"""
The Calais search process as a decision tree
============================================

Each lorry passes the French checks, then the UK shed, then the berth. Branch
probabilities are fixed by the base-year counts; rolling the tree back
recovers those counts and the expected cost of each policy.
"""

from fractions import Fraction

from calais_cba.tree import (
    CalaisTreeParams,
    build_calais_tree,
    build_policy_tree,
    dt_found_matrix,
    r_max,
    rollback,
    rollback_value,
    tree_outline,
)

tree = build_calais_tree(1)
print(tree_outline(tree))

# rolling back the chance nodes gives back 1800 / 890 / 784 / 150
print(rollback(tree))

p = CalaisTreeParams.from_ratio(1)
print("French find rate", float(p.p_french))

# ten per cent more searching with no traffic growth
print(rollback(build_calais_tree(Fraction(11, 10))))

# beyond this ratio the berth would need to select more than every lorry
print(f"largest searched/traffic ratio the tree supports: {r_max():.4f}")

print(dt_found_matrix(0).to_markdown())

value, choice = rollback_value(build_policy_tree())
print(f"{choice}: £{round(value):,}")
