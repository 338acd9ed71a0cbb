"""Base kernel construction, normalization and validation.

Every kernel in a bank is a dense ``n x n`` Gram matrix.  The standard bank
is twelve kernels: one cosine kernel, four polynomial kernels
``(a + <x_i, x_j>)^b`` with ``a in {0, 1}`` and ``b in {2, 4}``, and seven
Gaussian kernels whose bandwidth is ``sigma = c * M`` where ``M`` is the
largest pairwise distance in the data.  All kernels are passed through the
cosine normalization ``K_ij / sqrt(K_ii K_jj)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import KernelError

FAMILIES = ("cosine", "polynomial", "rbf", "precomputed")
RBF_MULTIPLIERS = (0.01, 0.05, 0.1, 1.0, 10.0, 50.0, 100.0)
PSD_RTOL = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """How one base kernel is built.

    ``a`` and ``b`` are the polynomial offset and degree, ``c`` the RBF
    bandwidth multiplier.  ``source`` records a file path for precomputed
    kernels.
    """

    family: str
    a: float | None = None
    b: int | None = None
    c: float | None = None
    source: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "polynomial":
            if self.a is None or self.b is None:
                raise ValueError("polynomial kernel needs a and b")
            if int(self.b) != self.b or self.b < 1:
                raise ValueError(f"polynomial degree must be a positive integer, got {self.b}")
        if self.family == "rbf" and (self.c is None or not self.c > 0):
            raise ValueError(f"rbf multiplier must be positive, got {self.c}")

    @property
    def label(self) -> str:
        if self.family == "polynomial":
            return f"poly(a={self.a:g},b={self.b})"
        if self.family == "rbf":
            return f"rbf(c={self.c:g})"
        if self.family == "precomputed":
            return f"precomputed({self.source})" if self.source else "precomputed"
        return "cosine"


def paper_recipe() -> list[KernelSpec]:
    """The standard 12-kernel recipe: 1 cosine, 4 polynomial, 7 RBF."""
    recipe = [KernelSpec("cosine")]
    recipe += [KernelSpec("polynomial", a=a, b=b) for a in (0.0, 1.0) for b in (2, 4)]
    recipe += [KernelSpec("rbf", c=c) for c in RBF_MULTIPLIERS]
    return recipe


@dataclass(frozen=True)
class KernelBank:
    """Ordered stack of ``m`` Gram matrices sharing the same ``n``.

    ``grams`` has shape ``(m, n, n)``; ``specs[p]`` describes ``grams[p]``.
    """

    grams: np.ndarray
    specs: tuple = field(default=())

    def __post_init__(self):
        grams = np.asarray(self.grams, dtype=float)
        if grams.ndim == 2:
            grams = grams[None]
        if grams.ndim != 3 or grams.shape[1] != grams.shape[2]:
            raise ValueError(f"kernel bank must have shape (m, n, n), got {grams.shape}")
        if grams.shape[0] < 1:
            raise ValueError("kernel bank must contain at least one kernel")
        grams.setflags(write=False)
        object.__setattr__(self, "grams", grams)
        specs = tuple(self.specs) if self.specs else tuple(
            KernelSpec("precomputed") for _ in range(grams.shape[0]))
        if len(specs) != grams.shape[0]:
            raise ValueError(f"{len(specs)} specs for {grams.shape[0]} kernels")
        object.__setattr__(self, "specs", specs)

    @property
    def m(self) -> int:
        return self.grams.shape[0]

    @property
    def n(self) -> int:
        return self.grams.shape[1]

    def __len__(self):
        return self.m

    def __getitem__(self, p):
        return self.grams[p]

    def subset(self, indices: Sequence[int]) -> "KernelBank":
        indices = list(indices)
        return KernelBank(self.grams[indices], tuple(self.specs[i] for i in indices))

    @classmethod
    def from_list(cls, grams, specs=None) -> "KernelBank":
        return cls(np.stack([np.asarray(g, dtype=float) for g in grams]), tuple(specs or ()))


def _as_features(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise KernelError(f"feature matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X))[0, 0])
        raise KernelError(f"non-finite feature value in row {bad}", index=bad)
    return X


def _symmetrize(G: np.ndarray) -> np.ndarray:
    return 0.5 * (G + G.T)


def cosine_kernel(X) -> np.ndarray:
    """Cosine similarity ``<x_i, x_j> / (|x_i| |x_j|)`` with unit diagonal."""
    X = _as_features(X)
    norms = np.linalg.norm(X, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise KernelError(f"cosine kernel undefined: row {zero[0]} has zero norm", index=int(zero[0]))
    Xn = X / norms[:, None]
    G = _symmetrize(Xn @ Xn.T)
    np.fill_diagonal(G, 1.0)
    return G


def polynomial_kernel(X, a: float, b: int) -> np.ndarray:
    """Unnormalized polynomial kernel ``(a + <x_i, x_j>)^b``."""
    X = _as_features(X)
    return _symmetrize((a + X @ X.T) ** int(b))


def max_pairwise_distance(X) -> float:
    X = _as_features(X)
    if X.shape[0] < 2:
        return 0.0
    return float(np.sqrt(pdist(X, "sqeuclidean").max()))


def rbf_kernel(X, c: float) -> np.ndarray:
    """Gaussian kernel with bandwidth ``c`` times the maximum pairwise distance."""
    X = _as_features(X)
    sq = pdist(X, "sqeuclidean")
    M = np.sqrt(sq.max()) if sq.size else 0.0
    if M == 0:
        raise KernelError("rbf kernel undefined: all samples are identical (max distance 0)")
    sigma = c * M
    G = np.zeros((X.shape[0], X.shape[0]))
    iu = np.triu_indices(X.shape[0], k=1)
    G[iu] = np.exp(-sq / (2.0 * sigma**2))
    G = G + G.T
    np.fill_diagonal(G, 1.0)
    return G


def normalize_kernel(K) -> np.ndarray:
    """Return ``K_ij / sqrt(K_ii K_jj)``; the diagonal becomes exactly one.

    No further rescaling is applied, so a cosine kernel may keep negative
    entries.
    """
    K = np.asarray(K, dtype=float)
    diag = np.diag(K).copy()
    bad = np.flatnonzero(~(diag > 0))
    if bad.size:
        raise KernelError(
            f"cannot normalize: diagonal entry {bad[0]} is {diag[bad[0]]!r} (must be > 0)",
            index=int(bad[0]))
    s = np.sqrt(diag)
    G = K / s[:, None] / s[None, :]
    np.fill_diagonal(G, 1.0)
    return G


def build_kernel(X, spec: KernelSpec) -> np.ndarray:
    if spec.family == "cosine":
        G = cosine_kernel(X)
    elif spec.family == "polynomial":
        G = polynomial_kernel(X, spec.a, spec.b)
    elif spec.family == "rbf":
        G = rbf_kernel(X, spec.c)
    else:
        raise KernelError("precomputed kernels are loaded from files, not built from features")
    return normalize_kernel(G)


def build_kernel_bank(X, recipe: Sequence[KernelSpec] | None = None) -> KernelBank:
    """Build one normalized kernel per spec, in recipe order.

    ``recipe`` defaults to :func:`paper_recipe`.  Construction errors are
    re-raised with the position of the failing spec.
    """
    recipe = paper_recipe() if recipe is None else list(recipe)
    if not recipe:
        raise ValueError("kernel recipe is empty")
    X = _as_features(X)
    if X.shape[0] < 2:
        raise KernelError(f"need at least 2 samples, got {X.shape[0]}")
    grams = []
    for p, spec in enumerate(recipe):
        try:
            grams.append(build_kernel(X, spec))
        except KernelError as exc:
            raise KernelError(f"kernel {p} ({spec.label}): {exc}", index=p) from exc
    return KernelBank(np.stack(grams), tuple(recipe))


@dataclass
class KernelCheck:
    index: int
    symmetry_residual: float
    min_eig: float
    max_eig: float
    diag_deviation: float
    flags: list = field(default_factory=list)


@dataclass
class ValidationReport:
    checks: list
    tol: float

    @property
    def ok(self) -> bool:
        return not any(c.flags for c in self.checks)

    def flagged(self) -> list:
        return [c for c in self.checks if c.flags]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = ",".join(c.flags) if c.flags else "ok"
            lines.append(
                f"kernel {c.index:3d}: sym={c.symmetry_residual:.2e} "
                f"eig=[{c.min_eig:.3e}, {c.max_eig:.3e}] diag_dev={c.diag_deviation:.2e} {status}")
        return "\n".join(lines)


def validate_bank(bank: KernelBank, tol: float = 1e-10, psd_rtol: float = PSD_RTOL,
                  check_diagonal: bool = True) -> ValidationReport:
    """Report symmetry, spectrum and diagonal checks per kernel; never mutates."""
    checks = []
    for p, G in enumerate(bank.grams):
        sym = float(np.max(np.abs(G - G.T))) if G.size else 0.0
        eig = np.linalg.eigvalsh(_symmetrize(G))
        lo, hi = float(eig[0]), float(eig[-1])
        dev = float(np.max(np.abs(np.diag(G) - 1.0)))
        check = KernelCheck(p, sym, lo, hi, dev)
        if sym > tol:
            check.flags.append("asymmetric")
        if lo < -psd_rtol * max(abs(hi), np.finfo(float).tiny):
            check.flags.append("negative_eigenvalue")
        if check_diagonal and dev > tol:
            check.flags.append("diagonal_not_one")
        checks.append(check)
    return ValidationReport(checks, tol)
