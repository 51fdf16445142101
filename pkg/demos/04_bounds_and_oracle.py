"""Lower bounds on partial assignments, checked against full enumeration."""

# %%
import numpy as np

from ddtruss import (PartialAssignment, brute_force, build_model, lower_bound,
                     solve_exact)
from ddtruss.dataset import MaterialDataset

# three bars meeting at node 0, which is free and loaded
model = build_model([(0, 0), (1, 0), (0, 1), (1, 1)],
                    [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
                    [(k, a) for k in (1, 2, 3) for a in (0, 1)],
                    [(0, 0, 0.4), (0, 1, -0.7)])
rng = np.random.default_rng(7)
strain = rng.normal(size=8)
data = MaterialDataset(strain, strain + rng.normal(scale=0.3, size=8))
# a load large enough to push some bars outside the data cloud
c, p = 1.0, 4 * model.load_pattern

# %% Enumeration visits all 8**3 assignments
orc = brute_force(model, data, c, p)
print(f"oracle: {orc.objective:.6f} at {orc.assignment.tolist()} ({orc.nodes_explored} evaluated)")

# %% Both bounds stay below the best completion; the hull bound is tighter
root = PartialAssignment.root(model.m)  # every member free
for method in ("free", "hull"):
    print(f"root {method} bound: {lower_bound(root, model, data, c, p, method=method):.6f}")
one = root.with_fixed(0, int(orc.assignment[0]))
print(f"member 0 fixed, hull bound: {lower_bound(one, model, data, c, p):.6f}")

# %%
ex = solve_exact(model, data, c, p, record_tree=True)
print(f"branch and bound: {ex.objective:.6f} with {ex.nodes_explored} nodes")
assert ex.objective == orc.objective
