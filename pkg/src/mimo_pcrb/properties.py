"""Randomised checks of the bound inequalities and the closed-form design.

Each check returns a :class:`PropertyResult`; ``max_violation`` is the worst
relative amount by which the inequality was broken (0 when it always held).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array import ArrayConfig, SceneConfig
from .fim import (
    RunConfig,
    SpectralMoments,
    compute_moments,
    crb_average,
    fim_observation,
    moment_inequality_gap,
    pcrb_exact,
    pcrb_upper,
)
from .optimizer import hermitian_evd, optimal_design, random_feasible_covariance
from .prior import GaussianMixturePrior, QuadratureSpec, prior_fisher, rho_integral

SLACK = 1e-9


@dataclass(frozen=True)
class PropertyResult:
    name: str
    trials: int
    failures: int
    max_violation: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def random_mixture(rng: np.random.Generator, k: int | None = None, max_std: float = 0.1) -> GaussianMixturePrior:
    """Random valid mixture with ``k`` components (1..6 if not given)."""
    k = int(rng.integers(1, 7)) if k is None else k
    stds = rng.uniform(0.003, max_std, size=k)
    means = rng.uniform(8 * stds + 1e-3, 2 * np.pi - 8 * stds - 1e-3)
    w = rng.dirichlet(np.ones(k))
    w[-1] = 1.0 - w[:-1].sum()
    return GaussianMixturePrior(tuple(w), tuple(means), tuple(stds**2))


def _relative_shortfall(lhs, rhs):
    """How far ``lhs >= rhs`` is broken, relative to ``rhs`` (0 if it holds)."""
    if np.isinf(lhs):
        return 0.0
    return max(0.0, (rhs - lhs) / abs(rhs))


def check_moment_gap(m: SpectralMoments, power_w: float, n_trials: int, rng) -> PropertyResult:
    worst, fails = 0.0, 0
    for _ in range(n_trials):
        r = random_feasible_covariance(m.n_tx, power_w, rng)
        gap = moment_inequality_gap(m, r)
        scale = float(np.real(np.sum(m.a2 * r.T)) * np.real(np.sum(m.a4 * r.T)))
        v = max(0.0, -gap / scale)
        worst = max(worst, v)
        fails += v > SLACK
    return PropertyResult("moment_gap", n_trials, fails, worst)


def check_bound_chain(
    prior: GaussianMixturePrior,
    m: SpectralMoments,
    fp11: float,
    scene: SceneConfig,
    run: RunConfig,
    cfg: ArrayConfig,
    n_trials: int,
    rng,
) -> PropertyResult:
    """``crb_average >= pcrb_upper >= pcrb_exact`` on random feasible designs."""
    worst, fails = 0.0, 0
    for _ in range(n_trials):
        r = random_feasible_covariance(cfg.n_tx, run.power_w, rng)
        exact = pcrb_exact(fim_observation(m, r, scene, run, fp11))
        upper = pcrb_upper(m, r, scene, run, fp11)
        avg = crb_average(prior, r, scene, run, cfg)
        v = max(_relative_shortfall(upper, exact), _relative_shortfall(avg, upper))
        worst = max(worst, v)
        fails += v > SLACK
    return PropertyResult("bound_chain", n_trials, fails, worst)


def check_rank_one_dominance(m: SpectralMoments, run: RunConfig, n_trials: int, rng) -> PropertyResult:
    opt = optimal_design(m, run).covariance
    best = float(np.real(np.sum(m.a1 * opt.T)))
    lam1 = float(hermitian_evd(m.a1).eigenvalues[0])
    worst, fails = 0.0, 0
    for _ in range(n_trials):
        r = random_feasible_covariance(m.n_tx, run.power_w, rng)
        val = float(np.real(np.sum(m.a1 * r.T)))
        v = max(0.0, (val - best) / (run.power_w * lam1))
        worst = max(worst, v)
        fails += v > SLACK
    return PropertyResult("rank_one_dominance", n_trials, fails, worst)


def check_schur_vs_inversion(m: SpectralMoments, fp11: float, run: RunConfig, n_trials: int, rng) -> PropertyResult:
    """Scalar Schur-complement PCRB against ``[F^-1]_11`` of the assembled 3x3 FIM."""
    worst, fails = 0.0, 0
    for _ in range(n_trials):
        r = random_feasible_covariance(m.n_tx, run.power_w, rng)
        snr = 10 ** rng.uniform(-2, 4)
        noise = 1.0
        alpha = np.sqrt(snr * noise / (run.power_w * run.num_samples)) * np.exp(2j * np.pi * rng.uniform())
        blocks = fim_observation(m, r, SceneConfig(alpha, noise), run, fp11 * rng.uniform(0, 1))
        direct = np.linalg.inv(blocks.matrix())[0, 0]
        v = abs(pcrb_exact(blocks) - direct) / abs(direct)
        worst = max(worst, v)
        fails += v > 1e-10
    return PropertyResult("schur_vs_inversion", n_trials, fails, worst)


def check_prior_fisher_decomposition(n_trials: int, rng, include: tuple = ()) -> PropertyResult:
    """``[F_p]_11 + rho = sum_k p_k / sigma_k^2`` with ``rho`` integrated on its own."""
    priors = list(include) + [random_mixture(rng) for _ in range(n_trials)]
    worst, fails = 0.0, 0
    for pr in priors:
        res = prior_fisher(pr)
        total = pr.information_sum
        v = abs(res.value + rho_integral(pr) - total) / total
        if not (0.0 <= res.value <= total):
            v = max(v, 1.0)
        worst = max(worst, v)
        fails += v > 1e-6
    return PropertyResult("prior_fisher_decomposition", len(priors), fails, worst)


def check_moment_convergence(prior: GaussianMixturePrior, cfg: ArrayConfig, tol: float = 1e-8) -> PropertyResult:
    """60-node against 90-node Gauss-Hermite moments, relative Frobenius change."""
    coarse = compute_moments(prior, cfg, QuadratureSpec(gh_nodes=60, gh_check_nodes=90))
    fine = compute_moments(prior, cfg, QuadratureSpec(gh_nodes=90, gh_check_nodes=120))
    v = max(
        np.linalg.norm(getattr(coarse, k) - getattr(fine, k)) / np.linalg.norm(getattr(fine, k))
        for k in ("a1", "a2", "a3", "a4")
    )
    return PropertyResult("moment_convergence", 1, int(v >= tol), float(v))
