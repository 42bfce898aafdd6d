"""Posterior Cramer-Rao bounds and prior-aware transmit design for MIMO radar angle estimation."""

__version__ = "0.1.0"

from .array import (
    ArrayConfig,
    SceneConfig,
    channel,
    steering_rx,
    steering_rx_deriv,
    steering_tx,
    steering_tx_deriv,
)
from .fim import (
    FimBlocks,
    RunConfig,
    SpectralMoments,
    compute_moments,
    crb_at,
    crb_average,
    fim_observation,
    moment_inequality_gap,
    pcrb_exact,
    pcrb_upper,
)
from .optimizer import (
    EvdResult,
    TransmitDesign,
    benchmark_heuristic,
    benchmark_peak_angle,
    hermitian_evd,
    optimal_design,
    optimal_pcrb_upper_value,
)
from .prior import (
    GaussianMixturePrior,
    PriorFisherResult,
    QuadratureError,
    QuadratureSpec,
    default_prior,
    pdf,
    prior_fisher,
    sample,
    score,
)
