"""Closed-form transmit design and the two reference designs.

Minimising the PCRB upper bound under ``tr(R_X) <= P`` reduces to maximising
``tr(A1 R_X)``, solved by beamforming all power along the principal
eigenvector of ``A1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .array import ArrayConfig, SceneConfig, steering_tx
from .fim import RunConfig, SpectralMoments
from .prior import GaussianMixturePrior, pdf


@dataclass(frozen=True)
class TransmitDesign:
    """A sample covariance and a waveform ``X`` (``n_tx x L``) that realises it."""

    covariance: np.ndarray
    waveform: np.ndarray
    label: str
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def constant(cls, w, num_samples: int, label: str, **info) -> "TransmitDesign":
        """Rank-one design sending the same vector ``w`` in every sample."""
        w = np.asarray(w, dtype=complex)
        return cls(np.outer(w, w.conj()), np.tile(w[:, None], (1, num_samples)), label, info)

    @property
    def power(self) -> float:
        return float(np.real(np.trace(self.covariance)))


@dataclass(frozen=True)
class EvdResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _fix_phase(q: np.ndarray) -> np.ndarray:
    q = q.copy()
    for j in range(q.shape[1]):
        big = np.flatnonzero(np.abs(q[:, j]) > 1e-8)
        if big.size:
            lead = q[big[0], j]
            q[:, j] *= np.conj(lead) / abs(lead)
    return q


def hermitian_evd(a) -> EvdResult:
    """Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.

    Each eigenvector is rotated so its first entry of modulus above 1e-8 is
    real and nonnegative. Slightly negative eigenvalues (within 1e-9 of the
    trace) are clamped to zero.
    """
    a = np.asarray(a, dtype=complex)
    scale = max(np.abs(a).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(a - a.conj().T).max(initial=0.0) > 1e-8 * scale:
        raise ValueError("matrix is not Hermitian")
    lam, q = np.linalg.eigh(0.5 * (a + a.conj().T))
    # stable reverse keeps LAPACK's column order inside degenerate groups
    order = np.argsort(-lam, kind="stable")
    lam, q = lam[order], q[:, order]
    floor = 1e-9 * abs(np.real(np.trace(a)))
    lam = np.where((lam < 0) & (lam >= -floor), 0.0, lam)
    return EvdResult(lam, _fix_phase(q))


def optimal_design(m: SpectralMoments, run: RunConfig) -> TransmitDesign:
    """``R_X = P q1 q1^H`` with ``q1`` the principal eigenvector of ``A1``."""
    evd = hermitian_evd(m.a1)
    q1 = evd.eigenvectors[:, 0]
    return TransmitDesign.constant(
        np.sqrt(run.power_w) * q1, run.num_samples, "proposed", lambda_max=float(evd.eigenvalues[0])
    )


def benchmark_heuristic(cfg: ArrayConfig, run: RunConfig) -> TransmitDesign:
    """All power on the first transmit antenna (omnidirectional pattern)."""
    w = np.zeros(cfg.n_tx, dtype=complex)
    w[0] = np.sqrt(run.power_w)
    return TransmitDesign.constant(w, run.num_samples, "heuristic")


def peak_angle(prior: GaussianMixturePrior, grid_divisor: float = 50.0) -> float:
    """Mode of the prior: grid search over the effective support, then local refinement.

    Ties on the grid go to the smallest angle.
    """
    step = float(np.min(prior.stds)) / grid_divisor
    grid = np.concatenate(
        [np.arange(lo, hi + step, step) for lo, hi in prior.support_intervals()]
    )
    dens = pdf(grid, prior)
    i = int(np.argmax(dens))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if hi <= lo:
        return float(grid[i])
    res = minimize_scalar(lambda t: -pdf(t, prior), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x) if -res.fun >= dens[i] else float(grid[i])


def benchmark_peak_angle(prior: GaussianMixturePrior, cfg: ArrayConfig, run: RunConfig) -> TransmitDesign:
    """Beam steered at the most probable angle: ``R_X = (P/N_t) a(t) a(t)^H``."""
    theta_max = peak_angle(prior)
    w = np.sqrt(run.power_w / cfg.n_tx) * steering_tx(theta_max, cfg)
    return TransmitDesign.constant(w, run.num_samples, "peak-angle", theta_max=theta_max)


def optimal_pcrb_upper_value(m: SpectralMoments, scene: SceneConfig, run: RunConfig, fp11: float) -> float:
    q1 = hermitian_evd(m.a1).eigenvectors[:, 0]
    gain = float(np.real(q1.conj() @ m.a1 @ q1))
    k = 2.0 * run.power_w * scene.alpha_sq * run.num_samples / scene.noise_power_w
    return 1.0 / (fp11 + k * gain)


def random_feasible_covariance(n: int, power_w: float, rng: np.random.Generator, kind: str = "mixed"):
    """Random Hermitian PSD matrix with trace in ``(0, power_w]``.

    ``kind`` is ``"full"`` (Wishart-like), ``"rank1"``, ``"lowrank"`` or
    ``"mixed"`` (one of the others at random).
    """
    if kind == "mixed":
        kind = rng.choice(["full", "rank1", "lowrank"])
    rank = {"full": n, "rank1": 1, "lowrank": int(rng.integers(1, n + 1))}[kind]
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    r = g @ g.conj().T
    r = 0.5 * (r + r.conj().T)
    budget = power_w * rng.uniform(0.05, 1.0)
    return r * (budget / np.real(np.trace(r)))
