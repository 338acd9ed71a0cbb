"""Alternating optimization of the embedding and the representation matrix.

The joint objective is

    f(H, Y) = Tr(K_Y (I - H H^T)) + lam * Tr(C^T Y),
    K_Y     = sum_i w_i^2 K_i,   w_i = mean_j Y[i, j].

Each outer iteration takes the top-``k`` eigenvectors of ``K_Y`` as ``H``
and then re-solves the convex Y-subproblem warm-started from the previous
``Y``.  Both steps are descent steps, so the recorded objective is
non-increasing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .clustering import discretize, update_embedding
from .kernels import KernelBank
from .selection import dissimilarity_matrix, residual_costs, solve_y_subproblem

log = logging.getLogger(__name__)


def weights_from_y(Y) -> np.ndarray:
    """Row means of ``Y``: the average probability of each kernel representing the bank."""
    Y = np.asarray(Y, dtype=float)
    return Y.mean(axis=1)


def combine_kernels(bank: KernelBank, w) -> np.ndarray:
    """``sum_p w_p^2 K_p`` (weights enter squared)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (bank.m,):
        raise ValueError(f"expected {bank.m} weights, got shape {w.shape}")
    return np.tensordot(w * w, bank.grams, axes=1)


def objective(bank: KernelBank, Y, H, lam: float, C=None) -> float:
    Y = np.asarray(Y, dtype=float)
    C = dissimilarity_matrix(bank) if C is None else np.asarray(C, dtype=float)
    K = combine_kernels(bank, weights_from_y(Y))
    first = float(np.trace(K) - np.sum((K @ H) * H))
    return first + lam * float(np.sum(C * Y))


@dataclass
class SolveOptions:
    lam: float = 1.0
    epsilon: float = 1e-6
    max_outer_iters: int = 100
    qp_tol: float = 1e-7
    qp_max_iters: int = 10_000
    seed: int = 0
    restarts: int = 20
    row_normalize: bool = True
    store_y: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    w: np.ndarray
    qp_kkt: float
    qp_iterations: int
    qp_converged: bool
    Y: np.ndarray | None = None


@dataclass
class SolveResult:
    Y: np.ndarray
    w: np.ndarray
    H: np.ndarray
    labels: np.ndarray
    trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    lam: float = 0.0
    C: np.ndarray | None = None

    @property
    def objective(self) -> float:
        return self.trace[-1].objective

    @property
    def objectives(self) -> np.ndarray:
        return np.array([rec.objective for rec in self.trace])

    def selected_kernels(self, threshold: float = 1e-3) -> np.ndarray:
        return np.flatnonzero(self.w > threshold)


def converged_step(prev: float, cur: float, epsilon: float) -> bool:
    return abs(prev - cur) <= epsilon * max(1.0, abs(prev))


def fit(bank: KernelBank, k: int, opts: SolveOptions | None = None, Y0=None) -> SolveResult:
    """Cluster with representative-kernel weights.

    ``Y0`` defaults to the uniform matrix, i.e. equal initial weights.
    Labels come from :func:`discretize` on the final embedding.
    """
    opts = SolveOptions() if opts is None else opts
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > bank.n:
        raise ValueError(f"k={k} exceeds the number of samples {bank.n}")
    m = bank.m
    C = dissimilarity_matrix(bank)
    Y = np.full((m, m), 1.0 / m) if Y0 is None else np.array(Y0, dtype=float)
    w = weights_from_y(Y)

    trace = []
    best = None
    converged = False
    for t in range(1, opts.max_outer_iters + 1):
        H = update_embedding(combine_kernels(bank, w), k)
        d = residual_costs(bank, H)
        sol = solve_y_subproblem(C, d, opts.lam, Y0=Y, tol=opts.qp_tol, max_iters=opts.qp_max_iters)
        if not sol.converged:
            log.debug("Y-subproblem stopped at KKT residual %.3e after %d iterations", sol.kkt, sol.iterations)
        Y = sol.Y
        w = weights_from_y(Y)
        f = objective(bank, Y, H, opts.lam, C)
        trace.append(IterationRecord(t, f, w.copy(), sol.kkt, sol.iterations, sol.converged,
                                     Y.copy() if opts.store_y else None))
        if best is None or f <= best[0]:
            best = (f, Y, w, H)
        if t > 1 and converged_step(trace[-2].objective, f, opts.epsilon):
            converged = True
            break

    _, Y, w, H = best
    labels = discretize(H, k, seed=opts.seed, restarts=opts.restarts, row_normalize=opts.row_normalize)
    return SolveResult(Y=Y, w=w, H=H, labels=labels, trace=trace, converged=converged,
                       iterations=len(trace), lam=opts.lam, C=C)
