"""Reference clustering methods run under the same protocol.

* SB-KKM: kernel k-means on every single kernel, keep the most accurate.
* A-MKKM: kernel k-means on the equal-weight average kernel.
* MKKM: alternate the embedding with the closed-form minimizer of
  ``sum_p w_p^2 d_p`` on the simplex, ``w_p proportional to 1 / d_p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import discretize, kernel_kmeans, update_embedding
from .kernels import KernelBank
from .metrics import MetricReport, evaluate
from .selection import residual_costs
from .solver import SolveOptions, combine_kernels, converged_step


@dataclass
class BaselineResult:
    method: str
    labels: np.ndarray
    w: np.ndarray
    H: np.ndarray | None = None
    objectives: list = field(default_factory=list)
    iterations: int = 1
    converged: bool = True
    metrics: MetricReport | None = None
    per_kernel: list = field(default_factory=list)
    best_index: int | None = None


def sb_kkm(bank: KernelBank, k: int, truth, seed: int = 0, restarts: int = 20,
           nmi_average: str = "geometric") -> BaselineResult:
    """Single best kernel, chosen by accuracy; the lower index wins ties."""
    per_kernel = []
    best = None
    for p in range(bank.m):
        labels, H = kernel_kmeans(bank[p], k, seed=seed, restarts=restarts)
        report = evaluate(labels, truth, nmi_average=nmi_average)
        per_kernel.append((p, labels, report))
        if best is None or report.acc > best[2].acc:
            best = (p, labels, report, H)
    p, labels, report, H = best
    w = np.zeros(bank.m)
    w[p] = 1.0
    return BaselineResult("SB-KKM", labels, w, H, metrics=report, per_kernel=per_kernel, best_index=p)


def a_mkkm(bank: KernelBank, k: int, seed: int = 0, restarts: int = 20) -> BaselineResult:
    """Kernel k-means on ``(1/m) sum_p K_p``."""
    K = bank.grams.mean(axis=0)
    labels, H = kernel_kmeans(K, k, seed=seed, restarts=restarts)
    return BaselineResult("A-MKKM", labels, np.full(bank.m, 1.0 / bank.m), H)


def mkkm_weights(d) -> np.ndarray:
    """Minimizer of ``sum_p w_p^2 d_p`` over the simplex.

    Zero-cost kernels, if any, share all the weight equally.
    """
    d = np.maximum(np.asarray(d, dtype=float), 0.0)
    zero = d <= 0
    if zero.any():
        return zero / zero.sum()
    inv = 1.0 / d
    return inv / inv.sum()


def mkkm_vanilla(bank: KernelBank, k: int, opts: SolveOptions | None = None) -> BaselineResult:
    opts = SolveOptions() if opts is None else opts
    w = np.full(bank.m, 1.0 / bank.m)
    objectives = []
    best = None
    converged = False
    for t in range(1, opts.max_outer_iters + 1):
        H = update_embedding(combine_kernels(bank, w), k)
        d = np.maximum(residual_costs(bank, H), 0.0)
        w = mkkm_weights(d)
        f = float(np.dot(w * w, d))
        objectives.append(f)
        if best is None or f <= best[0]:
            best = (f, w, H)
        if t > 1 and converged_step(objectives[-2], f, opts.epsilon):
            converged = True
            break
    _, w, H = best
    labels = discretize(H, k, seed=opts.seed, restarts=opts.restarts, row_normalize=opts.row_normalize)
    return BaselineResult("MKKM", labels, w, H, objectives=objectives,
                          iterations=len(objectives), converged=converged)
