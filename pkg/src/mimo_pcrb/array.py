"""Uniform linear array responses and the rank-one target channel.

Element ``i`` (0-based) of an ``N``-antenna array carries the phase factor
``(N - 2(i+1) + 1) = N - 2i - 1``, so the array is centred on the origin and
entries ``i`` and ``N-1-i`` are complex conjugates of each other. Angles are
radians throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayConfig:
    """Co-located MIMO radar geometry.

    Only the spacing-to-wavelength ratio ``d / lambda`` enters any formula.
    """

    n_tx: int = 10
    n_rx: int = 12
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if int(self.n_tx) != self.n_tx or self.n_tx < 1:
            raise ValueError(f"n_tx must be a positive integer, got {self.n_tx!r}")
        if int(self.n_rx) != self.n_rx or self.n_rx < 1:
            raise ValueError(f"n_rx must be a positive integer, got {self.n_rx!r}")
        if not np.isfinite(self.spacing_ratio) or self.spacing_ratio <= 0:
            raise ValueError(f"spacing_ratio must be positive, got {self.spacing_ratio!r}")


@dataclass(frozen=True)
class SceneConfig:
    """Physical scalars of the target echo.

    ``reflection_gain`` is the overall two-way gain ``alpha = beta0 / r^2 * psi``.
    Build it from its physical parts with :meth:`from_path_loss`.
    """

    reflection_gain: complex
    noise_power_w: float
    range_m: float | None = None
    ref_power: float | None = None
    rcs: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "reflection_gain", complex(self.reflection_gain))
        if not np.isfinite(self.reflection_gain) or abs(self.reflection_gain) == 0:
            raise ValueError("reflection gain must be finite and nonzero")
        if not np.isfinite(self.noise_power_w) or self.noise_power_w < 0:
            raise ValueError(f"noise power must be nonnegative, got {self.noise_power_w!r}")
        if None not in (self.range_m, self.ref_power, self.rcs):
            expected = self.ref_power / self.range_m**2 * complex(self.rcs)
            if not np.isclose(expected, self.reflection_gain, rtol=1e-12, atol=0):
                raise ValueError("reflection_gain is inconsistent with ref_power, range_m and rcs")

    @classmethod
    def from_path_loss(cls, ref_power, range_m, rcs, noise_power_w):
        if range_m <= 0 or ref_power <= 0:
            raise ValueError("range_m and ref_power must be positive")
        alpha = ref_power / range_m**2 * complex(rcs)
        return cls(alpha, noise_power_w, range_m=range_m, ref_power=ref_power, rcs=complex(rcs))

    @property
    def alpha_sq(self) -> float:
        return abs(self.reflection_gain) ** 2

    def with_gain(self, alpha: complex) -> "SceneConfig":
        """Copy with a new reflection gain (drops the path-loss breakdown)."""
        return SceneConfig(alpha, self.noise_power_w)


def _phase_factors(n: int) -> np.ndarray:
    # 0-based index i -> N - 2(i+1) + 1
    return n - 2.0 * np.arange(n) - 1.0


def _steering(theta, n: int, spacing_ratio: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phase = -np.pi * spacing_ratio * np.multiply.outer(np.sin(theta), _phase_factors(n))
    return np.exp(1j * phase)


def _steering_deriv(theta, n: int, spacing_ratio: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    factor = -1j * np.pi * spacing_ratio * np.multiply.outer(np.cos(theta), _phase_factors(n))
    return factor * _steering(theta, n, spacing_ratio)


def steering_tx(theta, cfg: ArrayConfig) -> np.ndarray:
    """Transmit steering vector ``a(theta)``.

    ``theta`` may be a scalar (returns shape ``(n_tx,)``) or an array of
    angles (returns shape ``theta.shape + (n_tx,)``).
    """
    return _steering(theta, cfg.n_tx, cfg.spacing_ratio)


def steering_rx(theta, cfg: ArrayConfig) -> np.ndarray:
    """Receive steering vector ``b(theta)``; same shape rules as :func:`steering_tx`."""
    return _steering(theta, cfg.n_rx, cfg.spacing_ratio)


def steering_tx_deriv(theta, cfg: ArrayConfig) -> np.ndarray:
    """Angle derivative of ``a(theta)``. Orthogonal to ``a(theta)`` for every angle."""
    return _steering_deriv(theta, cfg.n_tx, cfg.spacing_ratio)


def steering_rx_deriv(theta, cfg: ArrayConfig) -> np.ndarray:
    return _steering_deriv(theta, cfg.n_rx, cfg.spacing_ratio)


def rx_deriv_norm_sq(theta, cfg: ArrayConfig):
    """Closed form of ``||b'(theta)||^2`` (avoids building the vector)."""
    weights = np.sum(_phase_factors(cfg.n_rx) ** 2)
    return (np.pi * cfg.spacing_ratio) ** 2 * np.cos(theta) ** 2 * weights


def channel(theta: float, scene: SceneConfig, cfg: ArrayConfig) -> np.ndarray:
    """Two-way channel ``G(theta) = alpha b(theta) a(theta)^H``, shape ``(n_rx, n_tx)``."""
    a = steering_tx(theta, cfg)
    b = steering_rx(theta, cfg)
    return scene.reflection_gain * np.outer(b, a.conj())
