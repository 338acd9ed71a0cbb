"""Solve the Y-subproblem directly and watch representatives emerge.

For a fixed embedding H the kernel-selection step is a convex quadratic
program over column-stochastic Y.  As lambda grows the linear dissimilarity
term dominates and every column collapses onto its cheapest kernel.
"""
import numpy as np

from repmkkm import build_kernel_bank, make_blobs
from repmkkm.clustering import update_embedding
from repmkkm.selection import dissimilarity_matrix, residual_costs, solve_y_subproblem

np.set_printoptions(precision=3, suppress=True)

X, _ = make_blobs(seed=0)
bank = build_kernel_bank(X).subset([0, 1, 3, 7, 8])
C = dissimilarity_matrix(bank)
H = update_embedding(bank.grams.mean(axis=0), 3)
d = residual_costs(bank, H)
print("residual costs d:", d)
print("column argmins of C:", np.argmin(C, axis=0))

for lam in (0.0, 2.0**-5, 1.0, 2.0**5):
    sol = solve_y_subproblem(C, d, lam)
    w = sol.Y.mean(axis=1)
    print(f"\nlambda={lam:g}  objective={sol.objective:.6g}  kkt={sol.kkt:.1e}  iters={sol.iterations}")
    print("Y =\n", sol.Y)
    print("weights:", w, " selected:", np.flatnonzero(w > 1e-3))
