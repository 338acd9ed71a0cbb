"""Multiple kernel k-means clustering with representative-kernel selection.

Build a bank of base kernels, pick a diverse representative subset through a
column-stochastic representation matrix ``Y``, and alternate spectral
embedding updates with ``Y`` updates until the objective settles.

>>> from repmkkm import make_blobs, build_kernel_bank, fit, SolveOptions
>>> X, y = make_blobs(seed=0)
>>> result = fit(build_kernel_bank(X), k=3, opts=SolveOptions(lam=1.0))
"""
__version__ = "0.1.0"

from .baselines import BaselineResult, a_mkkm, mkkm_vanilla, mkkm_weights, sb_kkm
from .clustering import discretize, kernel_kmeans, lloyd_kmeans, relaxed_objective, update_embedding
from .data_io import (load_dataset, load_kernel_manifest, load_labels, read_manifest, save_kernel_bank,
                      save_matrix_csv)
from .datasets import blob_noise_benchmark, make_blobs
from .errors import KernelError, NumericalError, ParseError
from .experiment import (ExperimentConfig, RunRecord, export_figures, load_run, run_experiment,
                         run_methods, save_run, write_comparison_table)
from .kernels import (KernelBank, KernelSpec, build_kernel, build_kernel_bank, cosine_kernel,
                      normalize_kernel, paper_recipe, polynomial_kernel, rbf_kernel, validate_bank)
from .metrics import MetricReport, accuracy, evaluate, nmi, purity
from .selection import (dissimilarity_matrix, kkt_residual, project_simplex, residual_costs,
                        solve_y_subproblem, y_gradient, y_objective)
from .solver import SolveOptions, SolveResult, combine_kernels, fit, objective, weights_from_y

__all__ = [
    "BaselineResult", "ExperimentConfig", "KernelBank", "KernelError", "KernelSpec", "MetricReport",
    "NumericalError", "ParseError", "RunRecord", "SolveOptions", "SolveResult",
    "a_mkkm", "accuracy", "blob_noise_benchmark", "build_kernel", "build_kernel_bank", "combine_kernels",
    "cosine_kernel", "discretize", "dissimilarity_matrix", "evaluate", "export_figures", "fit",
    "kernel_kmeans", "kkt_residual", "lloyd_kmeans", "load_dataset", "load_kernel_manifest", "load_labels",
    "load_run", "make_blobs", "mkkm_vanilla", "mkkm_weights", "nmi", "normalize_kernel", "objective",
    "paper_recipe", "polynomial_kernel", "project_simplex", "purity", "rbf_kernel", "read_manifest",
    "relaxed_objective", "residual_costs", "run_experiment", "run_methods", "sb_kkm", "save_kernel_bank",
    "save_matrix_csv", "save_run", "solve_y_subproblem", "update_embedding", "validate_bank",
    "weights_from_y", "write_comparison_table", "y_gradient", "y_objective",
]
