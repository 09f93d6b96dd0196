"""Monte-Carlo benchmark harness for the mixed-norm solver.

Three experiment families, all fully deterministic given a master seed:

  * preference: fixed noise, solve each mixed-norm variant once per trial
    and the l_p baseline at every p on a grid; report the fraction of the
    grid where a variant's mean SNR meets or beats the baseline curve.
  * noise_sweep: mean SNR versus the noise scale gamma. Within a trial the
    same unit-scale noise draw is rescaled by gamma at every grid point,
    so curves are coupled across the sweep.
  * cs_sweep: mean SNR versus the sampling ratio m/n. Within a trial the
    measurement rows at smaller m are prefixes of the rows at larger m,
    again coupling the sweep.

Per-trial RNG streams derive from (master_seed, trial_index), so results
are independent of how trials are distributed over workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cmn import CmnParams
from .linalg import as_vector, spectral_norm_sq
from .solver import Problem, SolverConfig, SolverDivergenceError, solve_cmn_alm, solve_lp_admm
from .stable_noise import StableNoiseParams, sample_sas

SNR_CAP_DB = 300.0
BASELINE_LABEL = "lp_baseline"
MATRIX_NORMS = ("none", "unit_spectral", "inv_sqrt_m")
KINDS = ("preference", "noise_sweep", "cs_sweep")


def snr_db(x_true, x_hat) -> float:
    """Recovery quality 20 log10(||x_true|| / ||x_hat - x_true||), capped at +300 dB."""
    x_true = as_vector(x_true, "x_true")
    x_hat = as_vector(x_hat, "x_hat")
    ref = float(np.linalg.norm(x_true))
    if ref == 0.0:
        raise ValueError("snr_db is undefined for a zero reference signal")
    err = float(np.linalg.norm(x_hat - x_true))
    if err == 0.0:
        return SNR_CAP_DB
    return min(20.0 * math.log10(ref / err), SNR_CAP_DB)


def gen_sparse_signal(n: int, k: int, seed) -> np.ndarray:
    """k-sparse vector: support uniform at random, nonzeros standard normal."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    support = rng.choice(n, size=k, replace=False)
    x[support] = rng.standard_normal(k)
    return x


def _apply_matrix_norm(A: np.ndarray, norm: str) -> np.ndarray:
    if norm == "none":
        return A
    if norm == "inv_sqrt_m":
        return A / math.sqrt(A.shape[0])
    if norm == "unit_spectral":
        return A / math.sqrt(spectral_norm_sq(A))
    raise ValueError(f"matrix norm must be one of {MATRIX_NORMS}, got {norm!r}")


def gen_gaussian_matrix(m: int, n: int, norm: str = "unit_spectral", seed=0) -> np.ndarray:
    """i.i.d. standard-normal m x n matrix, optionally rescaled."""
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {m} x {n}")
    rng = np.random.default_rng(seed)
    return _apply_matrix_norm(rng.standard_normal((m, n)), norm)


def _stream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


@dataclass(frozen=True)
class TrialSpec:
    """Deterministic recipe for one synthetic instance y = A x + noise."""

    n: int
    m: int
    k: int
    noise: StableNoiseParams
    matrix_norm: str = "unit_spectral"
    master_seed: int = 0
    trial_index: int = 0


def make_instance(spec: TrialSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Materialise (x_true, A, y, noise) from a trial spec; y = A @ x_true + noise exactly."""
    x = gen_sparse_signal(spec.n, spec.k, _stream(spec.master_seed, spec.trial_index, 0))
    A = gen_gaussian_matrix(
        spec.m, spec.n, spec.matrix_norm, _stream(spec.master_seed, spec.trial_index, 1)
    )
    noise = sample_sas(spec.noise, spec.m, _stream(spec.master_seed, spec.trial_index, 2))
    return x, A, A @ x + noise, noise


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment family plus the solver defaults shared by all curves.

    ``grid`` is the sweep axis: baseline exponents p for ``preference``,
    gamma values for ``noise_sweep``, sampling ratios m/n for ``cs_sweep``.
    ``variants`` are (label, CmnParams) pairs; ``baseline_ps`` are the fixed
    l_p baselines drawn alongside the variants in the sweep kinds.

    The solver knob defaults here are calibrated to the default
    unit-spectral measurement scale (mu floor at a few percent of
    ||A^T y||_inf, continuation finishing within the iteration budget);
    they intentionally differ from the raw-scale defaults on
    :class:`SolverConfig`.
    """

    kind: str
    n: int
    m: int
    k: int
    alpha: float
    gamma: float
    grid: tuple[float, ...]
    trials: int
    master_seed: int
    variants: tuple[tuple[str, CmnParams], ...]
    baseline_ps: tuple[float, ...] = (0.5, 1.0, 1.5)
    matrix_norm: str = "unit_spectral"
    sigma_n: float = 1.0
    eps: float = 1e-2
    sigma: float = 0.5
    mu_init: float | str = "auto"
    mu_min: float = 0.0125
    zeta: float = 0.93
    lambda0: float | str = "auto"
    tol: float = 1e-5
    max_iter: int = 100

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.variants:
            raise ValueError("at least one solver variant is required")
        if len(self.grid) == 0:
            raise ValueError("sweep grid must be nonempty")
        if any(b >= a for a, b in zip(self.grid[1:], self.grid)):
            raise ValueError("sweep grid must be strictly increasing")
        if self.matrix_norm not in MATRIX_NORMS:
            raise ValueError(f"matrix norm must be one of {MATRIX_NORMS}, got {self.matrix_norm!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")

    def solver_config(self, cmn: CmnParams) -> SolverConfig:
        return SolverConfig(
            cmn=cmn,
            sigma=self.sigma,
            mu_init=self.mu_init,
            mu_min=self.mu_min,
            zeta=self.zeta,
            lambda0=self.lambda0,
            tol=self.tol,
            max_iter=self.max_iter,
        )


@dataclass(frozen=True)
class ExperimentResult:
    """Per-curve, per-grid-point SNR statistics (rows follow ``labels``)."""

    kind: str
    labels: tuple[str, ...]
    grid: tuple[float, ...]
    mean_snr_db: np.ndarray
    sd_snr_db: np.ndarray
    n_trials: int
    n_failed: np.ndarray
    master_seed: int
    preference_ratios: dict[str, float] = field(default_factory=dict)


def preference_ratio(variant_mean: float, baseline_curve) -> float:
    """Percentage of grid points where the variant meets or beats the baseline."""
    curve = np.asarray(baseline_curve, dtype=float)
    if curve.size == 0:
        raise ValueError("baseline curve is empty")
    return 100.0 * float(np.count_nonzero(variant_mean >= curve)) / curve.size


def _safe_snr(x_true: np.ndarray, problem: Problem, solve) -> float:
    try:
        report = solve(problem)
    except SolverDivergenceError:
        return math.nan
    return snr_db(x_true, report.x_hat)


def _preference_trial(cfg: ExperimentConfig, t: int) -> np.ndarray:
    spec = TrialSpec(
        cfg.n,
        cfg.m,
        cfg.k,
        StableNoiseParams(cfg.alpha, cfg.gamma),
        cfg.matrix_norm,
        cfg.master_seed,
        t,
    )
    x, A, y, _ = make_instance(spec)
    problem = Problem(A, y, cfg.sigma_n)
    out = np.empty((len(cfg.variants) + 1, len(cfg.grid)))
    for i, (_, cmn) in enumerate(cfg.variants):
        conf = cfg.solver_config(cmn)
        out[i, :] = _safe_snr(x, problem, lambda pr: solve_cmn_alm(pr, conf))
    base_conf = cfg.solver_config(CmnParams(0.0, 1.0, 1.0, cfg.eps))
    for j, p in enumerate(cfg.grid):
        out[-1, j] = _safe_snr(x, problem, lambda pr: solve_lp_admm(pr, p, base_conf))
    return out


def _sweep_labels(cfg: ExperimentConfig) -> tuple[str, ...]:
    return tuple(label for label, _ in cfg.variants) + tuple(
        f"lp(p={p:g})" for p in cfg.baseline_ps
    )


def _sweep_snrs(cfg: ExperimentConfig, x: np.ndarray, problem: Problem) -> np.ndarray:
    vals = np.empty(len(cfg.variants) + len(cfg.baseline_ps))
    for i, (_, cmn) in enumerate(cfg.variants):
        conf = cfg.solver_config(cmn)
        vals[i] = _safe_snr(x, problem, lambda pr: solve_cmn_alm(pr, conf))
    base_conf = cfg.solver_config(CmnParams(0.0, 1.0, 1.0, cfg.eps))
    for j, p in enumerate(cfg.baseline_ps):
        vals[len(cfg.variants) + j] = _safe_snr(x, problem, lambda pr: solve_lp_admm(pr, p, base_conf))
    return vals


def _noise_sweep_trial(cfg: ExperimentConfig, t: int) -> np.ndarray:
    x = gen_sparse_signal(cfg.n, cfg.k, _stream(cfg.master_seed, t, 0))
    A = gen_gaussian_matrix(cfg.m, cfg.n, cfg.matrix_norm, _stream(cfg.master_seed, t, 1))
    base_noise = sample_sas(
        StableNoiseParams(cfg.alpha, 1.0), cfg.m, _stream(cfg.master_seed, t, 2)
    )
    out = np.empty((len(cfg.variants) + len(cfg.baseline_ps), len(cfg.grid)))
    for g, gamma in enumerate(cfg.grid):
        problem = Problem(A, A @ x + gamma * base_noise, cfg.sigma_n)
        out[:, g] = _sweep_snrs(cfg, x, problem)
    return out


def _cs_sweep_trial(cfg: ExperimentConfig, t: int) -> np.ndarray:
    ms = [int(round(r * cfg.n)) for r in cfg.grid]
    m_max = max(ms)
    x = gen_sparse_signal(cfg.n, cfg.k, _stream(cfg.master_seed, t, 0))
    raw = _stream(cfg.master_seed, t, 1).standard_normal((m_max, cfg.n))
    noise = sample_sas(
        StableNoiseParams(cfg.alpha, cfg.gamma), m_max, _stream(cfg.master_seed, t, 2)
    )
    out = np.empty((len(cfg.variants) + len(cfg.baseline_ps), len(cfg.grid)))
    for g, m in enumerate(ms):
        A = _apply_matrix_norm(raw[:m], cfg.matrix_norm)
        problem = Problem(A, A @ x + noise[:m], cfg.sigma_n)
        out[:, g] = _sweep_snrs(cfg, x, problem)
    return out


_TRIAL_FNS = {
    "preference": _preference_trial,
    "noise_sweep": _noise_sweep_trial,
    "cs_sweep": _cs_sweep_trial,
}


def _trial_worker(args: tuple[ExperimentConfig, int]) -> np.ndarray:
    cfg, t = args
    return _TRIAL_FNS[cfg.kind](cfg, t)


def _run_trials(cfg: ExperimentConfig, workers: int) -> np.ndarray:
    args = [(cfg, t) for t in range(cfg.trials)]
    if workers <= 1:
        stacks = [_trial_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stacks = list(pool.map(_trial_worker, args))
    # reduce in trial order so the result is independent of scheduling
    return np.stack(stacks, axis=0)


def _reduce(cfg: ExperimentConfig, labels: tuple[str, ...], snr: np.ndarray) -> ExperimentResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN slices stay NaN
        mean = np.nanmean(snr, axis=0)
        sd = np.nanstd(snr, axis=0, ddof=1)
    failed = np.isnan(snr).sum(axis=0).astype(int)
    return ExperimentResult(
        kind=cfg.kind,
        labels=labels,
        grid=cfg.grid,
        mean_snr_db=mean,
        sd_snr_db=sd,
        n_trials=cfg.trials,
        n_failed=failed,
        master_seed=cfg.master_seed,
    )


def run_preference_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Variant-vs-baseline preference protocol at a fixed noise setting.

    The mixed-norm variants are solved once per trial (their curves are
    constant in p); the l_p baseline is solved at every grid exponent.
    Ties count in the variant's favour.
    """
    if cfg.kind != "preference":
        raise ValueError(f"config kind is {cfg.kind!r}, expected 'preference'")
    snr = _run_trials(cfg, workers)
    labels = tuple(label for label, _ in cfg.variants) + (BASELINE_LABEL,)
    result = _reduce(cfg, labels, snr)
    baseline_curve = result.mean_snr_db[-1]
    ratios = {
        label: preference_ratio(result.mean_snr_db[i, 0], baseline_curve)
        for i, (label, _) in enumerate(cfg.variants)
    }
    return replace(result, preference_ratios=ratios)


def run_noise_sweep(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Mean SNR of every curve versus the noise scale gamma."""
    if cfg.kind != "noise_sweep":
        raise ValueError(f"config kind is {cfg.kind!r}, expected 'noise_sweep'")
    return _reduce(cfg, _sweep_labels(cfg), _run_trials(cfg, workers))


def run_cs_sweep(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Mean SNR of every curve versus the sampling ratio m/n."""
    if cfg.kind != "cs_sweep":
        raise ValueError(f"config kind is {cfg.kind!r}, expected 'cs_sweep'")
    return _reduce(cfg, _sweep_labels(cfg), _run_trials(cfg, workers))


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Dispatch on ``cfg.kind``."""
    runners = {
        "preference": run_preference_experiment,
        "noise_sweep": run_noise_sweep,
        "cs_sweep": run_cs_sweep,
    }
    return runners[cfg.kind](cfg, workers)
