"""Synthetic benchmarks with known cluster structure."""
from __future__ import annotations

import numpy as np

from .kernels import KernelBank, KernelSpec, build_kernel_bank, paper_recipe


def make_blobs(n_per_cluster: int = 30, k: int = 3, radius: float = 5.0, std: float = 1.0,
               seed: int = 0):
    """Isotropic Gaussian blobs with centers evenly spaced on a circle.

    Centers sit at angles ``2 pi c / k`` so that clusters differ in direction
    as well as position, which keeps the cosine and homogeneous polynomial
    kernels informative.  Returns ``(X, labels)``.
    """
    rng = np.random.default_rng(seed)
    ang = 2.0 * np.pi * np.arange(k) / k
    centers = radius * np.c_[np.cos(ang), np.sin(ang)]
    X = np.vstack([c + std * rng.normal(size=(n_per_cluster, 2)) for c in centers])
    return X, np.repeat(np.arange(k), n_per_cluster)


def noise_kernel_recipe(count: int = 24) -> list[KernelSpec]:
    return [KernelSpec("rbf", c=float(c)) for c in np.geomspace(0.1, 1.0, count)]


def blob_noise_benchmark(seed: int = 0, n_per_cluster: int = 30, std: float = 1.5,
                         radius: float = 3.0, noise_kernels: int = 24, noise_dim: int = 3):
    """Blob data whose kernel bank is padded with uninformative kernels.

    The informative part is the standard 12-kernel recipe on 3 overlapping
    blobs.  The padding is ``noise_kernels`` smooth Gaussian kernels built on
    independent ``noise_dim``-dimensional Gaussian features; their leading
    eigenvectors are unrelated to the clusters, so an equal-weight average is
    dominated by noise while a good kernel weighting is not.

    Returns ``(bank, labels, X)``.
    """
    X, y = make_blobs(n_per_cluster, 3, radius=radius, std=std, seed=seed)
    rng = np.random.default_rng(seed + 10_000)
    Z = rng.normal(size=(X.shape[0], noise_dim))
    good = build_kernel_bank(X, paper_recipe())
    noise = build_kernel_bank(Z, noise_kernel_recipe(noise_kernels))
    bank = KernelBank(np.concatenate([good.grams, noise.grams]), good.specs + noise.specs)
    return bank, y, X


def block_kernel(sizes, within: float = 1.0, between: float = 0.0) -> np.ndarray:
    """Kernel with constant blocks: ``within`` inside a group, ``between`` across groups."""
    labels = np.repeat(np.arange(len(sizes)), sizes)
    K = np.where(labels[:, None] == labels[None, :], within, between).astype(float)
    return K
