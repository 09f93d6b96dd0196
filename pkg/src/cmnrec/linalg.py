"""Small dense linear-algebra helpers shared by the solvers."""

from __future__ import annotations

import warnings

import numpy as np


def as_vector(v, name: str = "v") -> np.ndarray:
    """Coerce to a finite 1-D float array."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Coerce to a finite, nonempty 2-D float array (row-major)."""
    arr = np.ascontiguousarray(A, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def soft_threshold(v, t) -> np.ndarray:
    """Elementwise shrinkage sign(v) * max(|v| - t, 0).

    ``t`` is a scalar or a vector of the same length as ``v``; all
    thresholds must be nonnegative.
    """
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if t.ndim > 0 and t.shape != v.shape:
        raise ValueError(f"threshold shape {t.shape} does not match input shape {v.shape}")
    if np.any(t < 0):
        raise ValueError("soft_threshold requires nonnegative thresholds")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def spectral_norm_sq(A, iters: int = 100, seed: int = 0) -> float:
    """Estimate the largest eigenvalue of A^T A by power iteration.

    Deterministic for fixed ``seed``. Emits a RuntimeWarning if the
    estimate has not stabilised to 1e-6 relative change after ``iters``
    iterations.
    """
    A = as_matrix(A)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:  # cannot happen for a continuous draw; guard anyway
        v = np.ones(A.shape[1])
        nv = np.linalg.norm(v)
    v /= nv

    est = 0.0
    rel_change = np.inf
    for _ in range(max(int(iters), 1)):
        w = A @ v
        new_est = float(w @ w)  # Rayleigh quotient of A^T A at unit v
        v = A.T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0  # v in the null space: zero matrix (or unlucky start)
        v /= nv
        rel_change = abs(new_est - est) / new_est if new_est > 0 else 0.0
        est = new_est
    if rel_change > 1e-6:
        warnings.warn(
            f"power iteration not stabilised after {iters} iterations "
            f"(relative change {rel_change:.2e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return est
