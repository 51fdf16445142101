"""Fixed-point iteration against branch and bound on one load case."""

# %%
from ddtruss import (builtin_ten_bar, compute_c, generate_synthetic, load_vector,
                     solve_exact, solve_heuristic)

model = builtin_ten_bar()
data = generate_synthetic(d=30, seed=1)
c = compute_c(data).c
p = load_vector(model, 6.0)

# %% The heuristic alternates between solving the state and reassigning points
h = solve_heuristic(model, data, c, p)
print(f"heuristic: {h.objective * 1e3:.3f} mJ after {h.iterations} iterations "
      f"(converged={h.converged})")
print("trace (mJ):", [round(t * 1e3, 3) for t in h.trace])

# %% Branch and bound proves the global minimum
ex = solve_exact(model, data, c, p, gap_tol=0.0)
print(f"exact: {ex.objective * 1e3:.3f} mJ, {ex.nodes_explored} nodes, "
      f"{ex.wall_time:.1f} s, status {ex.status}")
print("heuristic / exact =", h.objective / ex.objective)

# %% A relative gap trades proof for time
quick = solve_exact(model, data, c, p, gap_tol=0.05)
print(f"5% gap: {quick.objective * 1e3:.3f} mJ, {quick.nodes_explored} nodes, status {quick.status}")
