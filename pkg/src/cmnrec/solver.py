"""ADMM solver with a majorized continuous mixed-norm fidelity.

Solves

    min_x  cmn((A x - y) / sigma_n)  +  mu ||x||_1

by splitting on z = (A x - y)/sigma_n and alternating

  * a z-update that minimises the separable majorizer of the mixed norm
    (soft-thresholding for q = 1, a diagonal scaling for q = 2),
  * a proximal-gradient x-update on the resulting lasso subproblem,
  * a multiplier update,
  * geometric continuation mu <- max(zeta mu, mu_min).

The degenerate range p_s = p_f = p recovers a plain l_p fidelity and is
exposed as :func:`solve_lp_admm`, the comparison baseline used by the
experiment harness.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .cmn import CmnParams, cmn_value, phi_weight
from .linalg import as_matrix, as_vector, soft_threshold, spectral_norm_sq


class SolverDivergenceError(RuntimeError):
    """Raised when an iterate stops being finite (step sizes too aggressive)."""


@dataclass(frozen=True)
class Problem:
    """Measurement matrix A (m x n), observations y (m) and noise scale sigma_n."""

    A: np.ndarray
    y: np.ndarray
    sigma_n: float = 1.0

    def __post_init__(self):
        A = as_matrix(self.A)
        y = as_vector(self.y, "y")
        if y.shape[0] != A.shape[0]:
            raise ValueError(f"y has length {y.shape[0]}, expected {A.shape[0]}")
        if self.sigma_n <= 0.0:
            raise ValueError(f"sigma_n must be positive, got {self.sigma_n}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the alternating solver.

    ``mu_init="auto"`` starts continuation at 0.1 ||A^T y||_inf (measured in
    the sigma_n-normalised problem). ``lambda0="auto"`` picks 1.01 times the
    squared spectral norm of A/sigma_n; a numeric lambda0 below that bound is
    raised to it with a warning (or kept, warning only, when
    ``lambda0_autoraise`` is off).
    """

    cmn: CmnParams
    sigma: float = 1.0
    mu_init: float | str = "auto"
    mu_min: float = 0.5
    zeta: float = 0.95
    lambda0: float | str = "auto"
    tol: float = 1e-5
    max_iter: int = 100
    lambda0_autoraise: bool = True
    inner_steps: int = 1

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.zeta <= 1.0:
            raise ValueError(f"zeta must be in (0, 1], got {self.zeta}")
        if self.mu_min <= 0.0:
            raise ValueError(f"mu_min must be positive, got {self.mu_min}")
        if isinstance(self.mu_init, str):
            if self.mu_init != "auto":
                raise ValueError(f"mu_init must be a number or 'auto', got {self.mu_init!r}")
        elif self.mu_init < 0.0:
            raise ValueError(f"mu_init must be nonnegative, got {self.mu_init}")
        if isinstance(self.lambda0, str):
            if self.lambda0 != "auto":
                raise ValueError(f"lambda0 must be a number or 'auto', got {self.lambda0!r}")
        elif self.lambda0 <= 0.0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.inner_steps < 1:
            raise ValueError(f"inner_steps must be >= 1, got {self.inner_steps}")


@dataclass(frozen=True)
class SolverState:
    """Iterates (x, z, eta), current continuation weight mu and iteration count."""

    x: np.ndarray
    z: np.ndarray
    eta: np.ndarray
    mu: float
    k: int = 0


@dataclass(frozen=True)
class IterationRecord:
    primal: float
    dual: float
    objective: float
    mu: float


@dataclass(frozen=True)
class SolveReport:
    x_hat: np.ndarray
    iterations: int
    converged: bool
    history: tuple[IterationRecord, ...]


def _fidelity_residual(state: SolverState, problem: Problem, config: SolverConfig) -> np.ndarray:
    return (problem.A @ state.x - problem.y) / problem.sigma_n + state.eta / config.sigma


def z_update_q1(state: SolverState, problem: Problem, config: SolverConfig) -> np.ndarray:
    """Soft-threshold z-step for q = 1: thresholds phi(|z_i| + eps)/sigma."""
    if config.cmn.q != 1.0:
        raise ValueError(f"q=1 update called with q={config.cmn.q}")
    v = _fidelity_residual(state, problem, config)
    thresh = phi_weight(np.abs(state.z), config.cmn) / config.sigma
    return soft_threshold(v, thresh)


def z_update_q2(state: SolverState, problem: Problem, config: SolverConfig) -> np.ndarray:
    """Diagonal-scaling z-step for q = 2: z_i = v_i / (1 + 2 w_i / sigma)."""
    if config.cmn.q != 2.0:
        raise ValueError(f"q=2 update called with q={config.cmn.q}")
    v = _fidelity_residual(state, problem, config)
    w = phi_weight(np.abs(state.z), config.cmn)
    if np.any(w < 0):
        raise AssertionError("negative majorizer weight; invariant violated")
    return v / (1.0 + (2.0 / config.sigma) * w)


def resolve_lambda0(problem: Problem, config: SolverConfig) -> float:
    """Step-size curvature for the x-update, validated against ||A||^2 / sigma_n^2."""
    bound = spectral_norm_sq(problem.A) / problem.sigma_n**2
    if config.lambda0 == "auto":
        return 1.01 * bound
    lam0 = float(config.lambda0)
    if lam0 <= bound:
        if config.lambda0_autoraise:
            warnings.warn(
                f"lambda0={lam0:g} violates lambda0 > ||A||^2/sigma_n^2 ({bound:g}); "
                f"raising to {1.01 * bound:g}",
                RuntimeWarning,
                stacklevel=2,
            )
            return 1.01 * bound
        warnings.warn(
            f"lambda0={lam0:g} violates lambda0 > ||A||^2/sigma_n^2 ({bound:g}); "
            "the x-update may diverge",
            RuntimeWarning,
            stacklevel=2,
        )
    return lam0


def resolve_mu_init(problem: Problem, config: SolverConfig) -> float:
    if config.mu_init == "auto":
        g = problem.A.T @ problem.y / problem.sigma_n**2
        return 0.1 * float(np.max(np.abs(g))) if g.size else 0.0
    return float(config.mu_init)


def x_update(
    state: SolverState,
    z_new: np.ndarray,
    problem: Problem,
    config: SolverConfig,
    lambda0: float | None = None,
) -> np.ndarray:
    """One proximal-gradient step on the lasso subproblem in x.

    x <- S_{mu/(sigma lambda0)}( x - A^T r / (lambda0 sigma_n) ) with
    r = (A x - y)/sigma_n - z_new + eta/sigma. Descent requires
    lambda0 > ||A||^2 / sigma_n^2.
    """
    lam0 = resolve_lambda0(problem, config) if lambda0 is None else lambda0
    r = (problem.A @ state.x - problem.y) / problem.sigma_n - z_new + state.eta / config.sigma
    g = state.x - problem.A.T @ r / (lam0 * problem.sigma_n)
    return soft_threshold(g, state.mu / (config.sigma * lam0))


def eta_update(
    state: SolverState, z_new: np.ndarray, x_new: np.ndarray, problem: Problem, config: SolverConfig
) -> np.ndarray:
    """Multiplier step eta <- eta + sigma ((A x_new - y)/sigma_n - z_new)."""
    return state.eta + config.sigma * ((problem.A @ x_new - problem.y) / problem.sigma_n - z_new)


def residuals(
    state_prev: SolverState, state_new: SolverState, problem: Problem, config: SolverConfig
) -> tuple[float, float]:
    """Primal and dual residual norms of the split constraint.

    primal = ||(A x_new - y)/sigma_n - z_new||_2,
    dual = (sigma/sigma_n) ||A^T (z_new - z_prev)||_2.
    """
    primal = (problem.A @ state_new.x - problem.y) / problem.sigma_n - state_new.z
    dual = problem.A.T @ (state_new.z - state_prev.z)
    return (
        float(np.linalg.norm(primal)),
        float(config.sigma / problem.sigma_n * np.linalg.norm(dual)),
    )


def _normalized(problem: Problem) -> Problem:
    # fold sigma_n into the operator so every update sees (A x - y)/sigma_n;
    # makes solves invariant under joint rescaling of (A, y, sigma_n)
    if problem.sigma_n == 1.0:
        return problem
    return Problem(problem.A / problem.sigma_n, problem.y / problem.sigma_n, 1.0)


def solve_cmn_alm(problem: Problem, config: SolverConfig) -> SolveReport:
    """Run the full alternating solver (Algorithm knobs in ``config``).

    Initialises eta = 0, x = 0, z = -(y/sigma_n) and iterates z-, x- and
    eta-updates with mu-continuation until both residuals fall below
    ``config.tol`` or ``config.max_iter`` is reached. Raises
    :class:`SolverDivergenceError` if an iterate becomes non-finite.
    """
    if config.cmn.q == 1.0:
        z_step = z_update_q1
    elif config.cmn.q == 2.0:
        z_step = z_update_q2
    else:
        raise ValueError(f"solver supports q in {{1, 2}}, got q={config.cmn.q}")

    prob = _normalized(problem)
    lam0 = resolve_lambda0(prob, config)
    mu = resolve_mu_init(prob, config)
    m, n = prob.shape
    state = SolverState(x=np.zeros(n), z=-prob.y.copy(), eta=np.zeros(m), mu=mu, k=0)

    history: list[IterationRecord] = []
    converged = False
    for k in range(config.max_iter):
        prev = state
        for _ in range(config.inner_steps):
            state = replace(state, z=z_step(state, prob, config))
        for _ in range(config.inner_steps):
            state = replace(state, x=x_update(state, state.z, prob, config, lambda0=lam0))
        eta = eta_update(state, state.z, state.x, prob, config)
        state = replace(state, eta=eta, k=k + 1)

        if not (
            np.all(np.isfinite(state.x))
            and np.all(np.isfinite(state.z))
            and np.all(np.isfinite(state.eta))
        ):
            raise SolverDivergenceError(f"non-finite iterate at iteration {k + 1}")

        primal, dual = residuals(prev, state, prob, config)
        objective = cmn_value(prob.A @ state.x - prob.y, config.cmn) + state.mu * float(
            np.sum(np.abs(state.x))
        )
        history.append(IterationRecord(primal, dual, objective, state.mu))

        state = replace(state, mu=max(config.zeta * state.mu, config.mu_min))
        if primal <= config.tol and dual <= config.tol:
            converged = True
            break

    return SolveReport(
        x_hat=state.x, iterations=len(history), converged=converged, history=tuple(history)
    )


def lp_params(p: float, eps: float) -> CmnParams:
    """Degenerate range for the l_p baseline: q = 1 for p <= 1, else q = 2."""
    if not 0.0 < p <= 2.0:
        raise ValueError(f"p must be in (0, 2], got {p}")
    return CmnParams(p_s=p, p_f=p, q=1.0 if p <= 1.0 else 2.0, eps=eps)


def solve_lp_admm(problem: Problem, p: float, config: SolverConfig) -> SolveReport:
    """l_p-fidelity baseline: the solver with the range collapsed to p_s = p_f = p."""
    return solve_cmn_alm(problem, replace(config, cmn=lp_params(p, config.cmn.eps)))
