"""Gaussian-mixture angle prior and its Fisher information.

The prior Fisher term is integrated with composite Simpson over the merged
effective support ``U_k [theta_k - 8 sigma_k, theta_k + 8 sigma_k]``. The
integrand mixes all components in its denominator, so a per-component
Gauss-Hermite rule does not apply there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

TWO_PI = 2.0 * np.pi
PDF_FLOOR = 1e-300


class QuadratureError(RuntimeError):
    """A quadrature error estimate exceeded its tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration controls shared by the prior and moment computations.

    Attributes:
        support_sigmas: half-width of each component's effective support.
        simpson_divisor: Simpson step is at most ``sigma_min / simpson_divisor``.
        gh_nodes: Gauss-Hermite nodes per mixture component.
        gh_check_nodes: node count used for the moment error estimate.
        rel_tol: relative error estimate above which integration is rejected.
    """

    support_sigmas: float = 8.0
    simpson_divisor: float = 20.0
    gh_nodes: int = 60
    gh_check_nodes: int = 90
    rel_tol: float = 1e-6

    def refined(self, factor: float = 2.0) -> "QuadratureSpec":
        return QuadratureSpec(
            self.support_sigmas,
            self.simpson_divisor * factor,
            self.gh_nodes,
            self.gh_check_nodes,
            self.rel_tol,
        )


@dataclass(frozen=True)
class GaussianMixturePrior:
    """``p(theta) = sum_k p_k N(theta; theta_k, sigma_k^2)`` on ``[0, 2 pi)``."""

    weights: tuple
    means: tuple
    variances: tuple
    support_sigmas: float = field(default=8.0, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.means, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if not (w.ndim == m.ndim == v.ndim == 1) or not (w.size == m.size == v.size) or w.size == 0:
            raise ValueError("weights, means and variances must be equal-length, non-empty 1-D")
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("mixture weights must lie in [0, 1]")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {w.sum()!r}")
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("component variances must be positive")
        if np.any(m < 0) or np.any(m >= TWO_PI):
            raise ValueError("component means must lie in [0, 2 pi)")
        half = self.support_sigmas * np.sqrt(v)
        if np.any(m - half < 0) or np.any(m + half >= TWO_PI):
            raise ValueError(
                "effective support of the prior leaves [0, 2 pi); "
                "shrink the variances or move the means inward"
            )
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "means", tuple(float(x) for x in m))
        object.__setattr__(self, "variances", tuple(float(x) for x in v))

    @classmethod
    def from_components(cls, components) -> "GaussianMixturePrior":
        """Build from ``[{"weight": .., "mean": .., "variance": ..}, ...]`` records."""
        comps = list(components)
        return cls(
            tuple(c["weight"] for c in comps),
            tuple(c["mean"] for c in comps),
            tuple(c["variance"] for c in comps),
        )

    def to_components(self) -> list[dict]:
        return [
            {"weight": w, "mean": m, "variance": v}
            for w, m, v in zip(self.weights, self.means, self.variances)
        ]

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def stds(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.variances))

    @property
    def information_sum(self) -> float:
        """``sum_k p_k / sigma_k^2``, the prior information if components never overlapped."""
        return float(np.sum(np.asarray(self.weights) / np.asarray(self.variances)))

    def support_intervals(self, n_sigma: float | None = None) -> list[tuple[float, float]]:
        """Merged, sorted ``[theta_k - n sigma_k, theta_k + n sigma_k]`` intervals."""
        n_sigma = self.support_sigmas if n_sigma is None else n_sigma
        m = np.asarray(self.means)
        half = n_sigma * self.stds
        spans = sorted(zip(m - half, m + half))
        merged = [list(spans[0])]
        for lo, hi in spans[1:]:
            if lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [(lo, hi) for lo, hi in merged]

    def in_support(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        inside = np.zeros(theta.shape, dtype=bool)
        for lo, hi in self.support_intervals():
            inside |= (theta >= lo) & (theta <= hi)
        return inside


def default_prior() -> GaussianMixturePrior:
    """Five-component prior of the reference experiment."""
    return GaussianMixturePrior(
        weights=(0.15, 0.32, 0.17, 0.2, 0.16),
        means=(0.52, 0.82, 0.87, 2.6, 2.7),
        variances=(1e-4, 1e-4, 1e-3, 1e-3, 1e-4),
    )


def _component_log_terms(theta, prior):
    """``log(p_k f_k(theta))`` with shape ``theta.shape + (K,)``."""
    theta = np.asarray(theta, dtype=float)
    w = np.asarray(prior.weights)
    m = np.asarray(prior.means)
    v = np.asarray(prior.variances)
    diff = theta[..., None] - m
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    return logw - 0.5 * np.log(2 * np.pi * v) - 0.5 * diff**2 / v


def log_pdf(theta, prior: GaussianMixturePrior):
    return logsumexp(_component_log_terms(theta, prior), axis=-1)


def pdf(theta, prior: GaussianMixturePrior):
    """Mixture density at ``theta`` (scalar or array).

    Summed directly: the density is only ever used where it is not
    negligible, so the log domain buys nothing and costs a lot inside
    adaptive quadrature loops.
    """
    return np.sum(np.exp(_component_log_terms(theta, prior)), axis=-1)


def responsibilities(theta, prior: GaussianMixturePrior) -> np.ndarray:
    """Posterior component probabilities ``p_k f_k / p``, shape ``theta.shape + (K,)``."""
    terms = _component_log_terms(theta, prior)
    return np.exp(terms - logsumexp(terms, axis=-1, keepdims=True))


def _score_unchecked(theta, prior):
    theta = np.asarray(theta, dtype=float)
    slopes = -(theta[..., None] - np.asarray(prior.means)) / np.asarray(prior.variances)
    return np.sum(responsibilities(theta, prior) * slopes, axis=-1)


def score(theta, prior: GaussianMixturePrior):
    """``d/dtheta ln p(theta)``.

    Raises:
        ValueError: if the density underflows at any requested angle.
    """
    if np.any(pdf(theta, prior) < PDF_FLOOR):
        raise ValueError("angle outside effective support: prior density underflows")
    return _score_unchecked(theta, prior)


def simpson_rule(prior: GaussianMixturePrior, quad: QuadratureSpec | None = None):
    """Composite Simpson nodes and weights over the merged effective support.

    Each merged interval gets an even number of panels with step at most
    ``sigma_min / quad.simpson_divisor``.
    """
    quad = quad or QuadratureSpec()
    h_max = float(np.min(prior.stds)) / quad.simpson_divisor
    nodes, weights = [], []
    for lo, hi in prior.support_intervals(quad.support_sigmas):
        n = int(np.ceil((hi - lo) / h_max))
        n += n % 2
        x = np.linspace(lo, hi, n + 1)
        h = (hi - lo) / n
        w = np.full(n + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        nodes.append(x)
        weights.append(w * h / 3.0)
    return np.concatenate(nodes), np.concatenate(weights)


def _fisher_integrals(prior, quad):
    x, w = simpson_rule(prior, quad)
    dens = pdf(x, prior)
    keep = dens >= PDF_FLOOR
    x, w, dens = x[keep], w[keep], dens[keep]
    s = _score_unchecked(x, prior)
    return float(np.sum(w * s**2 * dens))


@dataclass(frozen=True)
class PriorFisherResult:
    value: float
    rho: float
    quad_error_estimate: float


def prior_fisher(prior: GaussianMixturePrior, quad: QuadratureSpec | None = None) -> PriorFisherResult:
    """Prior Fisher information ``E[(d ln p / d theta)^2]``.

    The integral is evaluated at the configured Simpson step and at half that
    step; the finer value is returned and the Richardson difference
    ``|I_h/2 - I_h| / 15`` is the error estimate. ``rho`` is the overlap
    deficit ``sum_k p_k / sigma_k^2 - value``.
    """
    quad = quad or QuadratureSpec()
    coarse = _fisher_integrals(prior, quad)
    fine = _fisher_integrals(prior, quad.refined(2.0))
    err = abs(fine - coarse) / 15.0
    total = prior.information_sum
    if err > quad.rel_tol * max(total, 1.0):
        raise QuadratureError(f"prior Fisher quadrature did not converge (error estimate {err:.3e})")
    value = min(max(fine, 0.0), total)
    return PriorFisherResult(value=value, rho=total - value, quad_error_estimate=err)


def rho_integral(prior: GaussianMixturePrior, quad: QuadratureSpec | None = None) -> float:
    """The overlap term as its own integral: the pairwise component double sum.

    Integrates ``sum_{k1,k2} p1 p2 f1 f2 (d1 - d2)^2 / (2 p)`` with
    ``d_k = (theta - theta_k) / sigma_k^2``, independently of the score.
    """
    quad = quad or QuadratureSpec()
    x, w = simpson_rule(prior, quad.refined(2.0))
    dens = pdf(x, prior)
    keep = dens >= PDF_FLOOR
    x, w, dens = x[keep], w[keep], dens[keep]
    r = responsibilities(x, prior)
    d = (x[:, None] - np.asarray(prior.means)) / np.asarray(prior.variances)
    pair = (d[:, :, None] - d[:, None, :]) ** 2
    integrand = 0.5 * np.einsum("ni,nj,nij->n", r, r, pair) * dens
    return float(np.sum(w * integrand))


def sample(prior: GaussianMixturePrior, rng: np.random.Generator, size=None):
    """Draw a component with probability ``p_k``, then a Gaussian angle from it."""
    k = rng.choice(prior.n_components, size=size, p=np.asarray(prior.weights))
    theta = np.asarray(prior.means)[k] + prior.stds[k] * rng.standard_normal(size=size)
    return theta if size is not None else float(theta)
