"""Maximum-likelihood Gaussian mixture fitting by EM.

Supplies the log likelihoods consumed by the AIC/BIC baselines.  The
M-step floors covariance eigenvalues to keep likelihoods finite under the
usual covariance-collapse pathology.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._kmeans import kmeans_pp_centers
from .densities import as_simplex, mvn_logpdf_rows, spd_factor_logdet
from .errors import AllRestartsFailed, OutOfRange, TooFewPoints


@dataclass
class GmmParams:
    """Mixture parameters: weights on the simplex, means, SPD precisions."""

    weights: np.ndarray
    means: np.ndarray
    precisions: np.ndarray

    def __post_init__(self):
        self.weights = as_simplex(self.weights, "weights")
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.precisions = np.asarray(self.precisions, dtype=float)
        k = self.weights.shape[0]
        if k < 1 or self.means.shape[0] != k or self.precisions.shape[0] != k:
            raise OutOfRange("weights, means and precisions must share K >= 1")
        for q in self.precisions:
            spd_factor_logdet(q)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _as_data(data) -> np.ndarray:
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    return y


def _component_logpdfs(y, params: GmmParams) -> np.ndarray:
    """(N, K) matrix of log pi_k + log N(y_n; mu_k, Q_k)."""
    n = y.shape[0]
    k = params.n_components
    out = np.empty((n, k))
    with np.errstate(divide="ignore"):
        log_w = np.log(params.weights)
    for j in range(k):
        factor, logdet = spd_factor_logdet(params.precisions[j])
        out[:, j] = log_w[j] + mvn_logpdf_rows(y, params.means[j], factor, logdet)
    return out


def log_likelihood(data, params: GmmParams) -> float:
    """Mixture log likelihood, accumulated with log-sum-exp per row."""
    y = _as_data(data)
    if y.shape[1] != params.dim:
        raise OutOfRange(f"data dimension {y.shape[1]} != model dimension {params.dim}")
    return float(logsumexp(_component_logpdfs(y, params), axis=1).sum())


def em_fit(data, k: int, seed: int = 0, tol: float = 1e-8, max_iter: int = 500,
           restarts: int = 3, var_floor: float = 1e-6, return_trace: bool = False):
    """Best-of-restarts EM fit; returns (params, log likelihood).

    Initialization is seeded k-means++ means with uniform weights and the
    shared data covariance.  Covariance eigenvalues are floored at
    ``var_floor * trace(data covariance) / d`` after every M-step, which
    keeps the likelihood finite and the iteration monotone.  With
    ``return_trace`` the winning restart's per-iteration log likelihoods
    are appended to the returned tuple.
    """
    y = _as_data(data)
    n, d = y.shape
    if k < 1:
        raise OutOfRange("k must be at least 1")
    if n <= k:
        raise TooFewPoints(f"need more than {k} points, got {n}")
    if var_floor <= 0:
        raise OutOfRange("var_floor must be positive")
    if tol <= 0 or max_iter < 1 or restarts < 1:
        raise OutOfRange("tol must be positive, max_iter and restarts at least 1")

    data_cov = np.cov(y, rowvar=False, bias=True).reshape(d, d)
    floor = var_floor * max(float(np.trace(data_cov)) / d, np.finfo(float).tiny)

    best = None
    for r in range(restarts):
        fit = _em_single(y, k, seed + r, tol, max_iter, floor)
        if fit is None:
            continue
        if best is None or fit[1] > best[1]:
            best = fit
    if best is None:
        raise AllRestartsFailed(f"all {restarts} EM restarts failed for k={k}")
    return best if return_trace else best[:2]


def _floored_eigh(covs, floor):
    """Batched eigendecomposition with eigenvalues clipped from below.

    Returns (precisions, precision_roots, precision_logdets) for a stack
    of covariances; each root R satisfies R @ R.T == precision.
    """
    sym = 0.5 * (covs + np.swapaxes(covs, -1, -2))
    vals, vecs = np.linalg.eigh(sym)
    vals = np.maximum(vals, floor)
    precs = (vecs / vals[..., None, :]) @ np.swapaxes(vecs, -1, -2)
    precs = 0.5 * (precs + np.swapaxes(precs, -1, -2))
    roots = vecs / np.sqrt(vals)[..., None, :]
    logdets = -np.log(vals).sum(axis=-1)
    return precs, roots, logdets


def _em_single(y, k, seed, tol, max_iter, floor):
    n, d = y.shape
    means = kmeans_pp_centers(y, k, seed)
    weights = np.full(k, 1.0 / k)
    data_cov = np.cov(y, rowvar=False, bias=True).reshape(d, d)
    precs, roots, logdets = _floored_eigh(np.tile(data_cov, (k, 1, 1)), floor)

    half_const = 0.5 * d * np.log(2.0 * np.pi)
    trace = []
    for _ in range(max_iter):
        with np.errstate(divide="ignore"):
            log_w = np.log(weights)
        diff = y[None, :, :] - means[:, None, :]
        proj = diff @ roots
        quad = np.square(proj).sum(axis=2)
        log_joint = (log_w + 0.5 * logdets - half_const)[None, :] - 0.5 * quad.T
        shift = log_joint.max(axis=1)
        row_norm = shift + np.log(np.exp(log_joint - shift[:, None]).sum(axis=1))
        new_loglik = float(row_norm.sum())
        if not np.isfinite(new_loglik):
            return None
        resp = np.exp(log_joint - row_norm[:, None])

        nk = resp.sum(axis=0)
        weights = nk / n
        if np.all(nk > 0.0):
            means = (resp.T @ y) / nk[:, None]
            diff = y[None, :, :] - means[:, None, :]
            weighted = np.swapaxes(resp.T[:, :, None] * diff, 1, 2)
            covs = (weighted @ diff) / nk[:, None, None]
            precs, roots, logdets = _floored_eigh(covs, floor)
        else:
            live = np.flatnonzero(nk > 0.0)  # empty components keep their parameters
            means[live] = (resp.T @ y)[live] / nk[live, None]
            diff = y[None, :, :] - means[live][:, None, :]
            weighted = np.swapaxes(resp[:, live].T[:, :, None] * diff, 1, 2)
            covs = (weighted @ diff) / nk[live, None, None]
            precs[live], roots[live], logdets[live] = _floored_eigh(covs, floor)

        if trace and new_loglik - trace[-1] < tol * max(abs(trace[-1]), 1.0):
            trace.append(new_loglik)
            break
        trace.append(new_loglik)

    params = GmmParams(weights=weights, means=means, precisions=precs)
    final = log_likelihood(y, params)
    trace.append(final)
    return params, final, trace
