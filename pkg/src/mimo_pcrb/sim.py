"""Synthetic echoes, MAP angle estimation and Monte Carlo MSE.

The estimator treats ``alpha`` as an unknown nuisance and profiles it out by
least squares at every candidate angle, then maximises the concentrated
log-likelihood plus the log-prior.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .array import ArrayConfig, SceneConfig, channel, steering_rx, steering_tx
from .fim import RunConfig
from .optimizer import TransmitDesign
from .prior import GaussianMixturePrior, log_pdf, sample


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    theta_true: float
    alpha_true: complex


@dataclass(frozen=True)
class EstimateResult:
    theta_hat: float
    alpha_hat: complex
    log_posterior: float


@dataclass(frozen=True)
class GridSpec:
    """Search grid: ``points_per_component`` angles over ``theta_k +- half_width_sigmas * sigma_k``.

    ``components`` restricts the search to a subset of mixture components.
    """

    points_per_component: int = 400
    half_width_sigmas: float = 6.0
    components: tuple | None = None
    refine_tol: float = 1e-7

    def angles(self, prior: GaussianMixturePrior) -> np.ndarray:
        ks = range(prior.n_components) if self.components is None else self.components
        pieces = [
            np.linspace(prior.means[k] - self.half_width_sigmas * prior.stds[k],
                        prior.means[k] + self.half_width_sigmas * prior.stds[k],
                        self.points_per_component)
            for k in ks
        ]
        return np.unique(np.concatenate(pieces))


def generate(
    design: TransmitDesign,
    theta_true: float,
    scene: SceneConfig,
    cfg: ArrayConfig,
    run: RunConfig,
    rng: np.random.Generator,
) -> Observation:
    """``Y = alpha b a^H X + N`` with CSCG noise of per-entry variance ``sigma^2``."""
    x = design.waveform
    if x.shape != (cfg.n_tx, run.num_samples):
        raise ValueError(f"waveform shape {x.shape} does not match ({cfg.n_tx}, {run.num_samples})")
    y = channel(theta_true, scene, cfg) @ x
    if scene.noise_power_w > 0:
        std = np.sqrt(scene.noise_power_w / 2.0)
        y = y + std * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return Observation(y, float(theta_true), scene.reflection_gain)


class _Profile:
    """Concentrated log-posterior ``theta -> |b^H Y X^H a|^2 / (N_r a^H X X^H a sigma^2) + ln p``."""

    def __init__(self, obs, design, prior, noise_power, cfg):
        x = design.waveform
        self.yx = obs.y @ x.conj().T
        self.xx = x @ x.conj().T
        self.prior = prior
        self.noise = noise_power
        self.cfg = cfg

    def terms(self, theta):
        a = steering_tx(theta, self.cfg)
        b = steering_rx(theta, self.cfg)
        z = np.einsum("...m,mn,...n->...", b.conj(), self.yx, a)
        q = np.real(np.einsum("...i,ij,...j->...", a.conj(), self.xx, a))
        return z, q

    def value(self, theta, z, q):
        n_rx = self.cfg.n_rx
        with np.errstate(divide="ignore", invalid="ignore"):
            fit = np.abs(z) ** 2 / (n_rx * q)
        if self.noise > 0:
            return fit / self.noise + log_pdf(theta, self.prior)
        return fit

    def __call__(self, theta):
        z, q = self.terms(theta)
        return self.value(theta, z, q)


def map_estimate(
    obs: Observation,
    design: TransmitDesign,
    prior: GaussianMixturePrior,
    scene: SceneConfig,
    cfg: ArrayConfig,
    grid: GridSpec | None = None,
) -> EstimateResult:
    """MAP angle estimate with the reflection gain profiled out.

    The best grid angle is refined by a bounded scalar search between its
    grid neighbours. Grid angles the design does not illuminate
    (``a^H X X^H a = 0``) are skipped. With zero noise power the prior term
    is dropped and the estimate is pure maximum likelihood.
    """
    grid = grid or GridSpec()
    thetas = grid.angles(prior)
    prof = _Profile(obs, design, prior, scene.noise_power_w, cfg)
    z, q = prof.terms(thetas)
    lit = q > 1e-14 * max(np.max(q), np.finfo(float).tiny)
    if not np.any(lit):
        raise ValueError("design has no coverage of prior support")
    vals = np.where(lit, prof.value(thetas, z, np.where(lit, q, 1.0)), -np.inf)
    i = int(np.argmax(vals))
    best_t, best_v = float(thetas[i]), float(vals[i])
    lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, thetas.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -prof(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": grid.refine_tol})
        if np.isfinite(res.fun) and -res.fun >= best_v:
            best_t, best_v = float(res.x), float(-res.fun)
    zt, qt = prof.terms(best_t)
    return EstimateResult(best_t, complex(zt / (cfg.n_rx * qt)), best_v)


def jackknife_se(values) -> float:
    """Jackknife standard error of the sample mean."""
    v = np.asarray(values, dtype=float)
    n = v.size
    loo = (v.sum() - v) / (n - 1)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def trial_rngs(seed: int, n_trials: int) -> list[np.random.Generator]:
    """Independent per-trial generators; trial ``i`` gets the same stream for any thread count."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_trials)]


def monte_carlo_trials(
    design, prior, scene, cfg, run, n_trials: int, seed: int, grid=None, threads: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """True and estimated angles for ``n_trials`` independent prior draws.

    Returns ``(theta_true, theta_hat)``. Results depend only on ``seed``, not
    on ``threads``.
    """

    def one(rng):
        theta = sample(prior, rng)
        obs = generate(design, theta, scene, cfg, run, rng)
        return theta, map_estimate(obs, design, prior, scene, cfg, grid).theta_hat

    rngs = trial_rngs(seed, n_trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, rngs))
    else:
        out = [one(r) for r in rngs]
    out = np.array(out, dtype=float).reshape(-1, 2)
    return out[:, 0], out[:, 1]


def empirical_mse(
    design: TransmitDesign,
    prior: GaussianMixturePrior,
    scene: SceneConfig,
    cfg: ArrayConfig,
    run: RunConfig,
    n_trials: int,
    seed: int,
    grid: GridSpec | None = None,
    threads: int = 1,
) -> tuple[float, float]:
    """Monte Carlo MSE of the MAP estimator over prior draws, with its jackknife standard error."""
    if n_trials < 100:
        raise ValueError("empirical_mse needs at least 100 trials")
    theta, hat = monte_carlo_trials(design, prior, scene, cfg, run, n_trials, seed, grid, threads)
    err = (hat - theta) ** 2
    return float(err.mean()), jackknife_se(err)
