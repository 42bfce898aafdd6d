"""Fisher information and posterior Cramer-Rao bounds for the angle.

Unknowns are ``zeta = [theta, alpha_R, alpha_I]``. The observation FIM is
averaged over the prior through four steering moment matrices

    A1 = E[||b'||^2 a a^H],  A2 = E[a' a'^H],  A3 = E[a' a^H],  A4 = E[a a^H]

and the angle bound is the inverse Schur complement of the ``alpha`` block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.integrate import quad as quad_integrate
from scipy.optimize import minimize_scalar

from .array import (
    ArrayConfig,
    SceneConfig,
    rx_deriv_norm_sq,
    steering_tx,
    steering_tx_deriv,
)
from .prior import (
    GaussianMixturePrior,
    QuadratureError,
    QuadratureSpec,
    pdf,
    simpson_rule,
)

# relative floor below which per-angle information is treated as exactly zero
ZERO_INFO_REL = 1e-20


@dataclass(frozen=True)
class RunConfig:
    num_samples: int = 25
    power_w: float = 1.0

    def __post_init__(self):
        if int(self.num_samples) != self.num_samples or self.num_samples < 1:
            raise ValueError(f"num_samples must be a positive integer, got {self.num_samples!r}")
        if not np.isfinite(self.power_w) or self.power_w <= 0:
            raise ValueError(f"power_w must be positive, got {self.power_w!r}")


def snr(scene: SceneConfig, run: RunConfig) -> float:
    """Overall receive SNR ``P |alpha|^2 L / sigma^2`` (linear)."""
    return run.power_w * scene.alpha_sq * run.num_samples / scene.noise_power_w


def _noise_scale(scene: SceneConfig, run: RunConfig) -> float:
    # sigma^2 / (2 |alpha|^2 L)
    return scene.noise_power_w / (2.0 * scene.alpha_sq * run.num_samples)


@dataclass(frozen=True)
class SpectralMoments:
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    a4: np.ndarray
    quad_error_estimate: float
    n_rx: int

    @property
    def n_tx(self) -> int:
        return self.a1.shape[0]


def gauss_hermite_rule(prior: GaussianMixturePrior, n_nodes: int):
    """Per-component Gauss-Hermite nodes and prior-weighted quadrature weights.

    ``sum(w * f(x))`` approximates ``E_prior[f(theta)]``.
    """
    z, wz = hermegauss(n_nodes)
    wz = wz / np.sqrt(2.0 * np.pi)
    nodes = np.concatenate([m + s * z for m, s in zip(prior.means, prior.stds)])
    weights = np.concatenate([p * wz for p in prior.weights])
    return nodes, weights


def _moments_at(prior, cfg, n_nodes):
    x, w = gauss_hermite_rule(prior, n_nodes)
    a = steering_tx(x, cfg)
    da = steering_tx_deriv(x, cfg)
    nb = rx_deriv_norm_sq(x, cfg)
    a1 = np.einsum("n,ni,nj->ij", w * nb, a, a.conj())
    a2 = np.einsum("n,ni,nj->ij", w, da, da.conj())
    a3 = np.einsum("n,ni,nj->ij", w, da, a.conj())
    a4 = np.einsum("n,ni,nj->ij", w, a, a.conj())
    # exact Hermitian symmetry for the PSD moments
    return [0.5 * (a1 + a1.conj().T), 0.5 * (a2 + a2.conj().T), a3, 0.5 * (a4 + a4.conj().T)]


def compute_moments(
    prior: GaussianMixturePrior, cfg: ArrayConfig, quad: QuadratureSpec | None = None
) -> SpectralMoments:
    """Steering moment matrices under the prior.

    Uses ``quad.gh_nodes`` Gauss-Hermite nodes per component; the error
    estimate is the largest relative Frobenius change against
    ``quad.gh_check_nodes`` nodes.
    """
    quad = quad or QuadratureSpec()
    base = _moments_at(prior, cfg, quad.gh_nodes)
    check = _moments_at(prior, cfg, quad.gh_check_nodes)
    err = max(
        np.linalg.norm(b - c) / max(np.linalg.norm(c), np.finfo(float).tiny) for b, c in zip(base, check)
    )
    if err > quad.rel_tol:
        raise QuadratureError(f"moment quadrature did not converge (relative change {err:.3e})")
    return SpectralMoments(*base, quad_error_estimate=float(err), n_rx=cfg.n_rx)


def check_covariance(r_x, power_w: float | None = None) -> np.ndarray:
    """Validate a transmit covariance: Hermitian, PSD and within the power budget."""
    r_x = np.asarray(r_x, dtype=complex)
    if r_x.ndim != 2 or r_x.shape[0] != r_x.shape[1]:
        raise ValueError("covariance must be a square matrix")
    tr = float(np.real(np.trace(r_x)))
    scale = max(np.abs(r_x).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(r_x - r_x.conj().T).max(initial=0.0) > 1e-8 * scale:
        raise ValueError("covariance is not Hermitian")
    if r_x.size and np.linalg.eigvalsh(0.5 * (r_x + r_x.conj().T))[0] < -1e-9 * max(tr, scale):
        raise ValueError("covariance is not positive semidefinite")
    if power_w is not None and tr > power_w * (1 + 1e-9):
        raise ValueError(f"covariance trace {tr:.6g} exceeds the power budget {power_w:.6g}")
    return r_x


def _tr(a, b) -> complex:
    # tr(A B) without forming the product
    return complex(np.sum(a * b.T))


@dataclass(frozen=True)
class FimBlocks:
    """Blocks of the total FIM on ``[theta, alpha_R, alpha_I]``.

    ``j_aa_scalar`` is the coefficient of ``I_2`` in the alpha block and
    ``fp11`` the prior term, which only touches the ``(theta, theta)`` entry.
    """

    j_tt: float
    j_ta: np.ndarray
    j_aa_scalar: float
    fp11: float

    def matrix(self) -> np.ndarray:
        """Assembled real 3x3 total FIM."""
        f = np.zeros((3, 3))
        f[0, 0] = self.j_tt + self.fp11
        f[0, 1:] = self.j_ta
        f[1:, 0] = self.j_ta
        f[1, 1] = f[2, 2] = self.j_aa_scalar
        return f


def fim_observation(
    m: SpectralMoments, r_x, scene: SceneConfig, run: RunConfig, fp11: float = 0.0
) -> FimBlocks:
    """Observation FIM blocks for a transmit covariance, plus the prior term.

    The cross block is ``(2 L N_r / sigma^2) [Re(c), -Im(c)]`` with
    ``c = conj(alpha) tr(A3 R_X)``, which is the real parameterisation of the
    complex cross term; its squared norm is ``|alpha|^2 |tr(A3 R_X)|^2``.
    """
    r_x = check_covariance(r_x, run.power_w)
    k = 2.0 * run.num_samples / scene.noise_power_w
    alpha = scene.reflection_gain
    j_tt = k * scene.alpha_sq * np.real(_tr(m.a1, r_x) + m.n_rx * _tr(m.a2, r_x))
    c = np.conj(alpha) * _tr(m.a3, r_x)
    j_ta = k * m.n_rx * np.array([c.real, -c.imag])
    j_aa = k * m.n_rx * np.real(_tr(m.a4, r_x))
    return FimBlocks(float(max(j_tt, 0.0)), j_ta, float(max(j_aa, 0.0)), float(fp11))


def pcrb_exact(blocks: FimBlocks) -> float:
    """Angle PCRB ``1 / S`` with ``S`` the Schur complement of the alpha block."""
    cross = float(np.dot(blocks.j_ta, blocks.j_ta))
    if blocks.j_aa_scalar > 0:
        schur = cross / blocks.j_aa_scalar
    elif cross == 0:
        schur = 0.0
    else:
        raise ValueError("singular Fisher information: zero alpha block with nonzero cross term")
    s = blocks.j_tt + blocks.fp11 - schur
    if not s > 0:
        raise ValueError("singular Fisher information")
    return 1.0 / s


def pcrb_upper(m: SpectralMoments, r_x, scene: SceneConfig, run: RunConfig, fp11: float) -> float:
    """Tractable upper bound on the angle PCRB, depending on ``R_X`` only via ``tr(A1 R_X)``."""
    r_x = check_covariance(r_x, run.power_w)
    c = _noise_scale(scene, run)
    den = c * fp11 + float(np.real(_tr(m.a1, r_x)))
    return c / den if den > 0 else np.inf


def crb_at(theta, r_x, scene: SceneConfig, run: RunConfig, cfg: ArrayConfig):
    """Per-angle CRB without prior information; ``inf`` where the angle is unobservable.

    Accepts a scalar angle or an array of angles. Information below
    ``ZERO_INFO_REL`` of the largest value the array could produce counts as
    zero, so ``cos(pi/2) ~ 6e-17`` yields ``inf`` rather than ``~1e27``.
    """
    r_x = np.asarray(r_x, dtype=complex)
    den = _angle_information(theta, r_x, cfg)
    ceiling = rx_deriv_norm_sq(0.0, cfg) * cfg.n_tx * max(float(np.real(np.trace(r_x))), 0.0)
    c = _noise_scale(scene, run)
    ok = den > ZERO_INFO_REL * ceiling
    with np.errstate(divide="ignore"):
        out = np.where(ok, c / np.where(ok, den, 1.0), np.inf)
    return float(out) if np.ndim(out) == 0 else out


def _angle_information(theta, r_x, cfg):
    # ||b'(theta)||^2 a^H R_X a, the per-angle information up to the noise scale
    a = steering_tx(theta, cfg)
    gain = np.real(np.einsum("...i,ij,...j->...", a.conj(), r_x, a))
    return rx_deriv_norm_sq(theta, cfg) * gain


def information_minima(prior, r_x, cfg, quad=None):
    """Local minima of the per-angle information inside the prior's effective support.

    Located on the Simpson grid and polished with a bounded scalar search.
    Returns ``(angles, values, grid_max)``.
    """
    quad = quad or QuadratureSpec()
    x, _ = simpson_rule(prior, quad)
    h = _angle_information(x, r_x, cfg)
    idx = [
        i for i in range(x.size)
        if (i == 0 or h[i] <= h[i - 1]) and (i == x.size - 1 or h[i] <= h[i + 1])
    ]
    angles, values = [], []
    for i in idx:
        lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
        if hi - lo > 4 * (x[1] - x[0]) or hi <= lo:
            # interval edge or gap between support pieces: keep the grid value
            angles.append(x[i])
            values.append(h[i])
            continue
        res = minimize_scalar(lambda t: _angle_information(t, r_x, cfg), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun < h[i]:
            angles.append(float(res.x))
            values.append(float(res.fun))
        else:
            angles.append(x[i])
            values.append(h[i])
    return np.array(angles), np.array(values), float(h.max(initial=0.0))


def crb_average(
    prior: GaussianMixturePrior,
    r_x,
    scene: SceneConfig,
    run: RunConfig,
    cfg: ArrayConfig,
    quad: QuadratureSpec | None = None,
    null_tol: float = 1e-12,
) -> float:
    """Prior-averaged CRB over the prior's effective support.

    If the per-angle information vanishes anywhere in the support (relative
    to its maximum, below ``null_tol``) the integrand has a non-integrable
    ``1/(theta - theta0)^2`` pole and the result is ``inf``. Rank-one beams
    with conjugate-symmetric weights have such exact nulls. Otherwise each
    support piece is integrated adaptively with breakpoints at the minima.
    """
    quad = quad or QuadratureSpec()
    r_x = check_covariance(r_x, run.power_w)
    angles, values, peak = information_minima(prior, r_x, cfg, quad)
    if peak <= 0 or values.min(initial=np.inf) <= null_tol * peak:
        return np.inf
    c = _noise_scale(scene, run)

    def integrand(t):
        return c * pdf(t, prior) / _angle_information(t, r_x, cfg)

    total, err = 0.0, 0.0
    for lo, hi in prior.support_intervals(quad.support_sigmas):
        pts = [t for t in angles if lo < t < hi]
        val, e = quad_integrate(integrand, lo, hi, points=pts or None, limit=1000,
                                epsabs=0.0, epsrel=1e-11)
        total += val
        err += e
    if err > quad.rel_tol * total:
        raise QuadratureError(f"average CRB quadrature did not converge (error {err:.3e})")
    return total


def moment_inequality_gap(m: SpectralMoments, r_x) -> float:
    """``tr(A2 R) tr(A4 R) - |tr(A3 R)|^2``, nonnegative for any PSD ``R``."""
    r_x = check_covariance(r_x)
    t2 = np.real(_tr(m.a2, r_x))
    t4 = np.real(_tr(m.a4, r_x))
    return float(t2 * t4 - abs(_tr(m.a3, r_x)) ** 2)
