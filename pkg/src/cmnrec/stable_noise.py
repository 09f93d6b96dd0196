"""Symmetric alpha-stable noise sampling and its generalized-Gaussian proxy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StableNoiseParams:
    """Stability index alpha in (0, 2] and scale gamma > 0 (zero skew/location)."""

    alpha: float
    gamma: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must be in (0, 2], got {self.alpha}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


def sample_sas(params: StableNoiseParams, count: int, seed) -> np.ndarray:
    """Draw ``count`` i.i.d. symmetric alpha-stable variates.

    Chambers-Mallows-Stuck transform: with V ~ Uniform(-pi/2, pi/2) and
    W ~ Exp(1),

        X = sin(alpha V) / cos(V)^(1/alpha)
            * (cos(V - alpha V) / W)^((1 - alpha)/alpha)      (alpha != 1)
        X = tan(V)                                            (alpha == 1)

    scaled by gamma. ``seed`` may be an int, a SeedSequence or a Generator;
    output is deterministic given (params, count, seed).
    """
    if count < 0:
        raise ValueError(f"count must be nonnegative, got {count}")
    alpha, gamma = params.alpha, params.gamma
    rng = np.random.default_rng(seed)
    v = rng.uniform(-math.pi / 2, math.pi / 2, size=count)
    w = rng.standard_exponential(size=count)
    if alpha == 1.0:
        x = np.tan(v)
    else:
        x = (
            np.sin(alpha * v)
            / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha)
        )
    return gamma * x


def ggd_pdf(x, alpha: float, sigma_n: float):
    """Generalized Gaussian density alpha/(2 sigma_n Gamma(1/alpha)) exp(-|x|^alpha / sigma_n^alpha).

    The shape parameter alpha makes this a tractable stand-in for the
    (closed-form-free) symmetric alpha-stable density. Elementwise in ``x``.
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if sigma_n <= 0.0:
        raise ValueError(f"sigma_n must be positive, got {sigma_n}")
    x = np.asarray(x, dtype=float)
    norm = alpha / (2.0 * sigma_n * math.gamma(1.0 / alpha))
    out = norm * np.exp(-np.abs(x) ** alpha / sigma_n**alpha)
    return float(out) if out.ndim == 0 else out
