"""Run a lambda sweep through the workbench and export figure CSVs.

Usage: python demos/lambda_sweep.py [outdir]
"""
import math
import sys
from pathlib import Path

from repmkkm.datasets import make_blobs
from repmkkm.experiment import PAPER_LAMBDAS, export_figures, run_methods, save_run, write_comparison_table
from repmkkm.kernels import build_kernel_bank

out = Path(sys.argv[1] if len(sys.argv) > 1 else "sweep_out")
X, y = make_blobs(seed=1)
bank = build_kernel_bank(X)

records = run_methods(bank, y, 3, ["SB-KKM", "A-MKKM", "MKKM", "Proposed"], PAPER_LAMBDAS,
                      restarts=10, dataset="blobs")
save_run(records, out)
for path in export_figures(records, out / "figures"):
    print("wrote", path)
print("wrote", write_comparison_table(records, out / "table.csv"))

for rec in records:
    if rec.method == "Proposed":
        print(f"lambda=2^{int(round(math.log2(rec.lam))):+d}  acc={rec.acc:.3f}  "
              f"selected={rec.n_selected}{'  <- best' if rec.best else ''}")
