"""Deterministic low-discrepancy point sets (unscrambled Halton)."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, qmc


def halton(dim: int, count: int, skip: int = 1) -> np.ndarray:
    """First ``count`` Halton points in ``[0,1)^dim`` after dropping ``skip``.

    The origin is always the first unscrambled point, hence ``skip=1``.
    """
    seq = qmc.Halton(d=dim, scramble=False)
    if skip:
        seq.fast_forward(skip)
    return seq.random(count)


def _gaussian(dim: int, count: int) -> np.ndarray:
    u = halton(dim, count)
    return norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))


def sphere_directions(n: int, count: int) -> np.ndarray:
    """Unit vectors in R^n, shape ``(count, n)``."""
    if n == 2:
        # golden-ratio rotation sequence, evenly spread for any prefix
        t = 2 * np.pi * ((np.arange(1, count + 1) * 0.6180339887498949) % 1.0)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    z = _gaussian(n, count)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def shell_points(center, radii, per_shell: int) -> np.ndarray:
    """``per_shell`` directions on each sphere of the given radii about ``center``."""
    center = np.asarray(center, dtype=float)
    d = sphere_directions(center.size, per_shell)
    return np.concatenate([center + r * d for r in radii])


def ball_points(center, radius: float, count: int) -> np.ndarray:
    """``count`` points spread through the closed ball of ``radius`` about ``center``."""
    center = np.asarray(center, dtype=float)
    n = center.size
    u = halton(n + 1, count)
    z = norm.ppf(np.clip(u[:, :n], 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * u[:, n] ** (1.0 / n)
    return center + r[:, None] * z


def orthonormal_pairs(n: int, count: int) -> np.ndarray:
    """Euclidean-orthonormal pairs, shape ``(count, 2, n)``."""
    z = _gaussian(2 * n, count).reshape(count, 2, n)
    u = z[:, 0] / np.linalg.norm(z[:, 0], axis=1, keepdims=True)
    w = z[:, 1] - np.sum(z[:, 1] * u, axis=1, keepdims=True) * u
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return np.stack([u, w], axis=1)
