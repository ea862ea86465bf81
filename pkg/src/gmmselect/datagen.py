"""Seeded samplers for the synthetic clustering benchmark.

The benchmark is a two-dimensional hierarchical draw: component means sit
on a circle of fixed radius, covariances come from a Wishart with
identity scale, weights from a symmetric Dirichlet, and observations from
the resulting mixture.  Everything is bit-reproducible per seed.
"""

from dataclasses import dataclass

import numpy as np

from .densities import as_matrix, spd_factor_logdet, spd_inverse
from .em import GmmParams
from .errors import (
    DofTooSmall,
    NonPositiveAlpha,
    OutOfRange,
    RejectionBudgetExceeded,
)

SYNTH_DIM = 2

WEIGHT_REDRAW_BUDGET = 10_000


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings: k_hat components, n points, seeded.

    ``dirichlet_alpha`` defaults to 1/k_hat.  ``min_weight`` > 0 redraws
    weight vectors until every component clears it; the faithful default
    is no filtering.  ``wishart_is_precision`` reads the Wishart draw as a
    precision instead of a covariance.
    """

    k_hat: int
    n: int
    seed: int = 0
    radius: float = 20.0
    wishart_dof: float = 5.0
    dirichlet_alpha: float | None = None
    min_weight: float = 0.0
    wishart_is_precision: bool = False

    def __post_init__(self):
        if self.k_hat < 1 or self.n < 1:
            raise OutOfRange("k_hat and n must be at least 1")
        if self.radius <= 0:
            raise OutOfRange("radius must be positive")
        if self.wishart_dof <= SYNTH_DIM - 1:
            raise DofTooSmall(f"wishart_dof must exceed {SYNTH_DIM - 1}")
        if self.dirichlet_alpha is not None and self.dirichlet_alpha <= 0:
            raise NonPositiveAlpha("dirichlet_alpha must be positive")
        if self.min_weight < 0 or self.min_weight * self.k_hat >= 1.0:
            raise OutOfRange("min_weight must be in [0, 1/k_hat)")

    @property
    def alpha(self) -> float:
        return self.dirichlet_alpha if self.dirichlet_alpha is not None else 1.0 / self.k_hat


@dataclass
class LabeledDataset:
    """Synthetic draw with ground truth: data, 1-based labels, parameters."""

    data: np.ndarray
    labels: np.ndarray
    true_params: GmmParams
    weight_redraws: int = 0


def _dirichlet(rng, alpha: np.ndarray) -> np.ndarray:
    if alpha.shape[0] == 1:
        return np.ones(1)
    draws = rng.gamma(alpha)
    total = draws.sum()
    while total <= 0.0:  # all-zero draws at tiny alpha
        draws = rng.gamma(alpha)
        total = draws.sum()
    return draws / total


def sample_dirichlet(alpha, seed: int) -> np.ndarray:
    """One Dirichlet draw via normalized Gamma variates."""
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if np.any(a <= 0.0):
        raise NonPositiveAlpha("alpha entries must be strictly positive")
    return _dirichlet(np.random.default_rng(seed), a)


def _wishart(rng, scale_factor: np.ndarray, dof: float) -> np.ndarray:
    """Bartlett construction: chi-distributed diagonal, normal subdiagonal."""
    d = scale_factor.shape[0]
    bartlett = np.zeros((d, d))
    bartlett[np.diag_indices(d)] = np.sqrt(rng.chisquare(dof - np.arange(d)))
    if d > 1:
        lower = np.tril_indices(d, k=-1)
        bartlett[lower] = rng.standard_normal(len(lower[0]))
    root = scale_factor @ bartlett
    draw = root @ root.T
    return 0.5 * (draw + draw.T)


def sample_wishart(scale, dof: float, seed: int) -> np.ndarray:
    """One Wishart draw with the given SPD scale and degrees of freedom."""
    scale = as_matrix(scale, "scale")
    factor, _ = spd_factor_logdet(scale)
    if dof <= scale.shape[0] - 1:
        raise DofTooSmall(f"dof must exceed d - 1 = {scale.shape[0] - 1}")
    return _wishart(np.random.default_rng(seed), factor, float(dof))


def sample_synthetic(cfg: SynthConfig) -> LabeledDataset:
    """Draw one benchmark dataset from the hierarchical model.

    Means lie at angles 2*pi*j/k_hat (j = 1..k_hat) on the radius circle;
    covariances are Wishart(I, dof) draws; weights a symmetric Dirichlet.
    Raises RejectionBudgetExceeded after 10^4 weight redraws under
    ``min_weight``.
    """
    rng = np.random.default_rng(cfg.seed)
    k = cfg.k_hat

    angles = 2.0 * np.pi * np.arange(1, k + 1) / k
    means = cfg.radius * np.column_stack([np.cos(angles), np.sin(angles)])

    covs = np.empty((k, SYNTH_DIM, SYNTH_DIM))
    precs = np.empty_like(covs)
    eye_factor = np.eye(SYNTH_DIM)
    for j in range(k):
        draw = _wishart(rng, eye_factor, cfg.wishart_dof)
        if cfg.wishart_is_precision:
            precs[j] = draw
            covs[j] = spd_inverse(draw)
        else:
            covs[j] = draw
            precs[j] = spd_inverse(draw)

    alpha = np.full(k, cfg.alpha)
    weights = _dirichlet(rng, alpha)
    redraws = 0
    while cfg.min_weight > 0.0 and weights.min() < cfg.min_weight:
        redraws += 1
        if redraws > WEIGHT_REDRAW_BUDGET:
            raise RejectionBudgetExceeded(
                f"no weight vector cleared min_weight={cfg.min_weight} "
                f"in {WEIGHT_REDRAW_BUDGET} redraws"
            )
        weights = _dirichlet(rng, alpha)

    labels0 = rng.choice(k, size=cfg.n, p=weights)
    noise = rng.standard_normal((cfg.n, SYNTH_DIM))
    data = np.empty((cfg.n, SYNTH_DIM))
    for j in range(k):
        rows = labels0 == j
        if not rows.any():
            continue
        factor, _ = spd_factor_logdet(covs[j])
        data[rows] = means[j] + noise[rows] @ factor.T

    true_params = GmmParams(weights=weights, means=means, precisions=precs)
    return LabeledDataset(data=data, labels=labels0 + 1,
                          true_params=true_params, weight_redraws=redraws)
