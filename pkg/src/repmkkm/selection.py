"""Representative kernel selection.

The Y-subproblem is the convex quadratic program

    min_Y  (1/m^2) (Y 1)^T D (Y 1) + lam * Tr(C^T Y)
    s.t.   every column of Y lies on the probability simplex,

where ``C[i, j] = Tr(K_i^T K_j)`` and ``D = diag(d)`` holds the residual
costs ``d_i = Tr(K_i (I - H H^T))``.  Entry ``Y[i, j]`` is the (relaxed)
probability that kernel ``i`` represents kernel ``j``.

The solver is an accelerated projected gradient method in a row-scaled
metric with backtracking; a step is only taken when it does not increase the
objective.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .kernels import KernelBank

ORTHO_TOL = 1e-8


def dissimilarity_matrix(bank: KernelBank) -> np.ndarray:
    """``C[i, j] = Tr(K_i^T K_j)``, the Frobenius inner product of two kernels."""
    flat = bank.grams.reshape(bank.m, -1)
    C = flat @ flat.T
    return 0.5 * (C + C.T)


def check_orthonormal(H, tol: float = ORTHO_TOL) -> float:
    H = np.asarray(H, dtype=float)
    resid = float(np.max(np.abs(H.T @ H - np.eye(H.shape[1])))) if H.size else 0.0
    if resid > tol:
        raise ValueError(f"embedding columns are not orthonormal: max |H^T H - I| = {resid:.3e}")
    return resid


def residual_costs(bank: KernelBank, H) -> np.ndarray:
    """``d_i = Tr(K_i) - Tr(H^T K_i H)`` for every kernel in the bank."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != bank.n:
        raise ValueError(f"embedding shape {H.shape} does not match n={bank.n}")
    check_orthonormal(H)
    traces = np.trace(bank.grams, axis1=1, axis2=2)
    # Tr(H^T K H) = sum((K H) * H)
    captured = np.einsum("pab,bk,ak->p", bank.grams, H, H)
    return traces - captured


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of a vector onto the unit probability simplex."""
    return project_columns(np.asarray(v, dtype=float)[:, None])[:, 0]


def project_columns(V) -> np.ndarray:
    """Project every column of ``V`` onto the unit simplex (sort-and-threshold)."""
    V = np.asarray(V, dtype=float)
    m = V.shape[0]
    U = -np.sort(-V, axis=0)
    css = np.cumsum(U, axis=0) - 1.0
    ind = np.arange(1, m + 1)[:, None]
    cond = U - css / ind > 0
    rho = m - np.argmax(cond[::-1], axis=0)
    theta = css[rho - 1, np.arange(V.shape[1])] / rho
    return np.maximum(V - theta[None, :], 0.0)


def project_columns_weighted(A, w) -> np.ndarray:
    """Project every column of ``A`` onto the simplex in the norm ``sum_i w_i u_i^2``.

    Solves ``min sum_i w_i (u_i - a_i)^2`` over the simplex column by column:
    ``u_i = max(0, a_i - theta / w_i)`` with ``theta`` fixed by ``sum u = 1``.
    """
    A = np.asarray(A, dtype=float)
    w = np.asarray(w, dtype=float)
    m, ncol = A.shape
    brk = A * w[:, None]                       # u_i > 0 iff theta < a_i w_i
    order = np.argsort(-brk, axis=0, kind="stable")
    cols = np.arange(ncol)
    a_sorted = np.take_along_axis(A, order, axis=0)
    inv_sorted = (1.0 / w)[order]
    brk_sorted = np.take_along_axis(brk, order, axis=0)
    theta = (np.cumsum(a_sorted, axis=0) - 1.0) / np.cumsum(inv_sorted, axis=0)
    valid = brk_sorted > theta
    p = m - np.argmax(valid[::-1], axis=0)
    th = theta[p - 1, cols]
    return np.maximum(A - th[None, :] / w[:, None], 0.0)


def y_objective(Y, C, d, lam: float) -> float:
    Y = np.asarray(Y, dtype=float)
    m = Y.shape[0]
    r = Y.sum(axis=1)
    return float(np.dot(d, r * r) / m**2 + lam * np.sum(C * Y))


def y_gradient(Y, C, d, lam: float) -> np.ndarray:
    """Gradient entries ``(2/m^2) d_i r_i + lam C[i, j]`` with ``r`` the row sums."""
    Y = np.asarray(Y, dtype=float)
    m = Y.shape[0]
    r = Y.sum(axis=1)
    return (2.0 / m**2) * (d * r)[:, None] + lam * np.asarray(C, dtype=float)


def _center(G) -> np.ndarray:
    # simplex projection ignores per-column shifts; removing them avoids
    # cancellation when lam * C dwarfs the gradient gaps
    return G - G.min(axis=0, keepdims=True)


def kkt_residual(Y, C, d, lam: float) -> float:
    """Largest column distance between ``Y`` and its unit-step projected-gradient image."""
    Y = np.asarray(Y, dtype=float)
    G = _center(y_gradient(Y, C, d, lam))
    step = project_columns(Y - G) - Y
    return float(np.max(np.linalg.norm(step, axis=0)))


@dataclass
class YSolution:
    Y: np.ndarray
    objective: float
    kkt: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _check_feasible(Y, tol=1e-9):
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise ValueError(f"Y must be square, got shape {Y.shape}")
    if np.any(Y < -tol) or np.any(np.abs(Y.sum(axis=0) - 1.0) > tol):
        raise ValueError("initial Y is not column-stochastic")


def transport_polish(Y, C, lam: float):
    """Re-solve the linear cost with the row sums of ``Y`` held fixed.

    Moving mass around a cycle of entries leaves every row sum, and hence the
    quadratic term, unchanged; along such directions the problem is a
    transportation LP which gradient steps resolve only slowly.  Returns
    ``None`` when the LP fails.
    """
    m = Y.shape[0]
    r = Y.sum(axis=1)
    r *= m / r.sum()
    rows = np.kron(np.eye(m), np.ones(m))      # sum_j y_ij = r_i
    cols = np.kron(np.ones(m), np.eye(m))      # sum_i y_ij = 1
    A = np.vstack([rows, cols])[:-1]           # one constraint is redundant
    b = np.concatenate([r, np.ones(m)])[:-1]
    res = linprog(lam * np.asarray(C, dtype=float).ravel(), A_eq=A, b_eq=b,
                  bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    return project_columns(np.maximum(res.x.reshape(m, m), 0.0))


def _quad(delta, d, m) -> float:
    dr = delta.sum(axis=1)
    return float(np.dot(d, dr * dr)) / m**2


def solve_y_subproblem(C, d, lam: float, Y0=None, tol: float = 1e-7,
                       max_iters: int = 10_000, polish_every: int = 50,
                       record: bool = False) -> YSolution:
    """Minimize the Y-subproblem over column-stochastic matrices.

    Monotone accelerated projected gradient.  Each trial step projects the
    columns of ``V - W^-1 G(V)`` onto the simplex in the metric ``W``, where
    ``W`` is a backtracked multiple of the per-row curvature bound
    ``2 d_i / m``.  The iterate moves only if the objective does not
    increase, and momentum is reset whenever it points uphill.

    Parameters
    ----------
    C : (m, m) array
        Kernel dissimilarity matrix.
    d : (m,) array
        Residual costs; small negative values from round-off are clamped to 0.
    lam : float
        Weight of the encoding-cost term, ``lam >= 0``.
    Y0 : (m, m) array, optional
        Feasible starting point (uniform ``1/m`` when omitted).
    tol : float
        Target value of :func:`kkt_residual`.
    max_iters : int
        Iteration cap; on exhaustion the result has ``converged=False``.
    polish_every : int
        Period of the :func:`transport_polish` attempt (0 disables it).  A
        polished point is kept only if it lowers both the objective and the
        KKT residual.
    record : bool
        Store the objective after every iteration in ``YSolution.history``.

    Returns
    -------
    YSolution
        The returned objective never exceeds the objective at ``Y0``.
    """
    C = np.asarray(C, dtype=float)
    d = np.maximum(np.asarray(d, dtype=float), 0.0)
    m = C.shape[0]
    if C.shape != (m, m) or d.shape != (m,):
        raise ValueError(f"shape mismatch: C {C.shape}, d {d.shape}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    Y = np.full((m, m), 1.0 / m) if Y0 is None else np.array(Y0, dtype=float)
    _check_feasible(Y)
    Y = project_columns(Y)

    # Hessian is (2/m^2) D kron 11^T: row i has curvature at most 2 d_i / m.
    # Stepping in that row-scaled metric removes the spread of d from the
    # conditioning; rows with (near) zero cost get a floor and behave like LP rows.
    metric = 2.0 * d / m
    metric = np.maximum(metric, max(metric.max(initial=0.0), 1.0) * 1e-10)
    scale = 1.0
    G = _center(y_gradient(Y, C, d, lam))
    V, GV = Y, G
    t = 1.0
    kkt = kkt_residual(Y, C, d, lam)
    history = [y_objective(Y, C, d, lam)] if record else []
    it = 0
    while kkt > tol and it < max_iters:
        it += 1
        scale = max(scale * 0.5, 1e-6)
        while True:
            w = scale * metric
            Z = project_columns_weighted(V - GV / w[:, None], w)
            delta = Z - V
            wsq = float(np.sum(w[:, None] * delta * delta))
            if _quad(delta, d, m) <= 0.5 * wsq * (1.0 + 1e-12) or scale >= 1.0:
                break
            scale = min(2.0 * scale, 1.0)
        GZ = _center(y_gradient(Z, C, d, lam))
        # f(Z) - f(Y), exact for a quadratic
        step = Z - Y
        gain = float(np.sum(G * step)) + _quad(step, d, m)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if gain <= 0.0:
            Y_next, G_next = Z, GZ
        else:
            Y_next, G_next = Y, G
        if float(np.sum(w[:, None] * (V - Z) * (Z - Y))) > 0.0 or gain > 0.0:
            t_next = 1.0
            V, GV = Y_next, G_next
        else:
            V = Y_next + (t / t_next) * (Z - Y_next) + ((t - 1.0) / t_next) * (Y_next - Y)
            V = np.maximum(V, 0.0)
            V /= V.sum(axis=0, keepdims=True)
            GV = _center(y_gradient(V, C, d, lam))
        if wsq == 0.0 and gain >= 0.0:
            break
        Y, G, t = Y_next, G_next, t_next
        kkt = kkt_residual(Y, C, d, lam)
        if polish_every and it % polish_every == 0 and kkt > tol and lam > 0:
            P = transport_polish(Y, C, lam)
            if P is not None:
                step = P - Y
                gain = float(np.sum(G * step)) + _quad(step, d, m)
                kkt_p = kkt_residual(P, C, d, lam)
                if gain <= 0.0 and kkt_p < kkt:
                    Y, G, kkt = P, _center(y_gradient(P, C, d, lam)), kkt_p
                    V, GV, t = Y, G, 1.0
        if record:
            history.append(y_objective(Y, C, d, lam))
    return YSolution(Y=Y, objective=y_objective(Y, C, d, lam), kkt=kkt, iterations=it,
                     converged=kkt <= tol, history=history)
