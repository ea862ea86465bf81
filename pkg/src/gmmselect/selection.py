"""Model-order selection: the Laplace-ratio posterior over K plus AIC/BIC.

The score for a candidate order K is the log joint density of data,
assignments and parameters at the mode of the variational posterior,
minus the log of that posterior at its own mode, plus a geometric prior
exp(-K) normalized over 1..k_max.  Exponentiating and normalizing the
scores over K gives an approximate posterior over the number of
components.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .em import em_fit, log_likelihood
from .errors import OutOfRange
from .vb import Hyperparams, extract_mode, log_joint_at_mode, log_q_at_mode, vb_fit


@dataclass(frozen=True)
class FitConfig:
    """Knobs for a single VB fit; defaults bound sweep runtime."""

    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 500
    restarts: int = 3


@dataclass(frozen=True)
class EmConfig:
    """Knobs for a single EM fit."""

    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 500
    restarts: int = 3
    var_floor: float = 1e-6


@dataclass
class OrderDiagnostics:
    """Per-K bookkeeping from the winning variational fit."""

    k: int
    elbo: float
    restart: int
    strategy: str
    iterations: int
    fallbacks: list


@dataclass
class ModelOrderPosterior:
    """Normalized posterior over the number of components.

    ``probs`` sums to one; ``k_star`` is the argmax (ties to the smallest
    K).  ``capped_from`` records a requested k_max that exceeded N.
    """

    k_values: list
    log_scores: np.ndarray
    probs: np.ndarray
    k_star: int
    diagnostics: list = field(default_factory=list)
    capped_from: int | None = None

    def prob(self, k: int) -> float:
        return float(self.probs[self.k_values.index(k)])


@dataclass
class CriterionCurve:
    """Per-K log likelihoods with AIC/BIC values and their argmins."""

    k_values: list
    logliks: np.ndarray
    aic: np.ndarray
    bic: np.ndarray
    k_aic: int
    k_bic: int
    n_obs: int


def log_prior_k(k: int, k_max: int) -> float:
    """Log of the geometric model-order prior exp(-K) on 1..k_max."""
    if not 1 <= k <= k_max:
        raise OutOfRange(f"k={k} outside 1..{k_max}")
    return float(-k - logsumexp(-np.arange(1, k_max + 1)))


def korea_log_score(data, k: int, hyper: Hyperparams | None = None,
                    fit_cfg: FitConfig | None = None, k_max: int = 10) -> float:
    """Unnormalized log posterior score for a K-component model."""
    score, _ = _score_detail(data, k, hyper, fit_cfg, k_max)
    return score


def _score_detail(data, k, hyper, fit_cfg, k_max):
    y = np.asarray(data, dtype=float)
    if hyper is None:
        hyper = Hyperparams.from_data(y)
    cfg = fit_cfg or FitConfig()
    state = vb_fit(y, k, hyper, seed=cfg.seed, tol=cfg.tol,
                   max_iter=cfg.max_iter, restarts=cfg.restarts)
    mode = extract_mode(state, hyper)
    score = (
        log_joint_at_mode(y, mode, hyper)
        + log_prior_k(k, k_max)
        - log_q_at_mode(state, mode)
    )
    diag = OrderDiagnostics(
        k=k, elbo=state.elbo_final, restart=state.restart,
        strategy=state.strategy, iterations=len(state.elbo_trace) - 1,
        fallbacks=list(mode.fallbacks),
    )
    return float(score), diag


def _score_task(args):
    data, k, hyper, fit_cfg, k_max = args
    return _score_detail(data, k, hyper, fit_cfg, k_max)


def model_order_posterior(data, k_max: int = 10, hyper: Hyperparams | None = None,
                          fit_cfg: FitConfig | None = None,
                          jobs: int = 1) -> ModelOrderPosterior:
    """Posterior over K = 1..k_max by enumeration of independent fits.

    Per-K evaluations share nothing and may run in parallel (``jobs``);
    the result is identical for any degree of parallelism.  A k_max above
    the number of observations is capped at N and recorded.
    """
    y = np.asarray(data, dtype=float)
    n = y.shape[0]
    if k_max < 1:
        raise OutOfRange("k_max must be at least 1")
    capped_from = None
    if k_max > n:
        capped_from, k_max = k_max, n
    if hyper is None:
        hyper = Hyperparams.from_data(y)

    k_values = list(range(1, k_max + 1))
    tasks = [(y, k, hyper, fit_cfg, k_max) for k in k_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_score_task, tasks))
    else:
        results = [_score_task(t) for t in tasks]

    log_scores = np.array([r[0] for r in results])
    diagnostics = [r[1] for r in results]
    probs = np.exp(log_scores - logsumexp(log_scores))
    probs /= probs.sum()
    k_star = k_values[int(np.argmax(probs))]  # first max: smallest K wins ties
    return ModelOrderPosterior(k_values=k_values, log_scores=log_scores,
                               probs=probs, k_star=k_star,
                               diagnostics=diagnostics, capped_from=capped_from)


def hill_climb_order(data, k_max: int, k_init: int,
                     hyper: Hyperparams | None = None,
                     fit_cfg: FitConfig | None = None) -> tuple[int, list]:
    """Greedy integer ascent on the order score for large k_max.

    Evaluates K +/- 1 neighbors and moves while the score improves; each
    K is scored once.  Returns the local optimum and the sorted list of
    visited orders.
    """
    if not 1 <= k_init <= k_max:
        raise OutOfRange(f"k_init={k_init} outside 1..{k_max}")
    y = np.asarray(data, dtype=float)
    if hyper is None:
        hyper = Hyperparams.from_data(y)
    cache = {}

    def score(k):
        if k not in cache:
            cache[k] = korea_log_score(y, k, hyper, fit_cfg, k_max)
        return cache[k]

    current = k_init
    while True:
        neighbors = [k for k in (current - 1, current + 1) if 1 <= k <= k_max]
        if not neighbors:
            score(current)
            break
        best = min(neighbors, key=lambda k: (-score(k), k))
        if score(best) > score(current):
            current = best
        else:
            break
    return current, sorted(cache)


def count_free_params(k: int, d: int) -> int:
    """Free parameters of a K-component full-covariance mixture in R^d."""
    if k < 1 or d < 1:
        raise OutOfRange("k and d must be at least 1")
    return (k - 1) + k * d + k * d * (d + 1) // 2


def aic_bic_curve(data, k_max: int = 10, em_cfg: EmConfig | None = None) -> CriterionCurve:
    """Per-K maximum likelihood fits with AIC and BIC values.

    AIC = 2p - 2 loglik and BIC = p log N - 2 loglik with p the free
    parameter count; argmin ties resolve to the smallest K.
    """
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, d = y.shape
    if k_max < 1:
        raise OutOfRange("k_max must be at least 1")
    cfg = em_cfg or EmConfig()

    k_values = list(range(1, k_max + 1))
    logliks = np.empty(len(k_values))
    for i, k in enumerate(k_values):
        _, logliks[i] = em_fit(y, k, seed=cfg.seed, tol=cfg.tol,
                               max_iter=cfg.max_iter, restarts=cfg.restarts,
                               var_floor=cfg.var_floor)
    p = np.array([count_free_params(k, d) for k in k_values])
    aic = 2.0 * p - 2.0 * logliks
    bic = p * np.log(n) - 2.0 * logliks
    return CriterionCurve(
        k_values=k_values, logliks=logliks, aic=aic, bic=bic,
        k_aic=k_values[int(np.argmin(aic))], k_bic=k_values[int(np.argmin(bic))],
        n_obs=n,
    )
