"""Variational-Bayes fitting of a Gaussian mixture with conjugate priors.

The variational posterior factorizes as q(z) q(pi) prod_k q(mu_k, Q_k)
with q(pi) Dirichlet and each q(mu_k, Q_k) Gaussian-Wishart.  Coordinate
ascent alternates a responsibility refresh (from expected log weights and
expected Gaussian log densities) with closed-form refreshes of the
Dirichlet and Gaussian-Wishart parameters from responsibility-weighted
sufficient statistics.  The evidence lower bound (ELBO) is monotone under
these updates and is the convergence monitor.

Component indices exposed in ``ModePoint.z_star`` are 1-based.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import digamma, gammaln, xlogy

from ._kmeans import assign_to_centers, kmeans_pp_centers
from .densities import (
    LOG_2PI,
    as_matrix,
    as_vector,
    log_dirichlet_pdf,
    log_mvn_pdf,
    log_wishart_pdf,
    mvn_logpdf_rows,
    spd_factor_logdet,
    spd_inverse,
)
from .errors import AllRestartsFailed, NotSpd, OutOfRange, TooFewPoints

INIT_STRATEGIES = ("kmeans", "random")

# Smoothed one-hot responsibilities used by both init strategies.
_ASSIGNED_RESP = 0.9


@dataclass(frozen=True)
class Hyperparams:
    """Conjugate prior: Dirichlet(alpha0) weights, Gaussian-Wishart components.

    ``w0`` is the Wishart scale over precisions and ``nu0`` its degrees of
    freedom; ``beta0`` scales the precision of the Gaussian prior over means.
    """

    alpha0: float
    beta0: float
    m0: np.ndarray
    w0: np.ndarray
    nu0: float

    def __post_init__(self):
        object.__setattr__(self, "m0", as_vector(self.m0, "m0"))
        object.__setattr__(self, "w0", as_matrix(self.w0, "w0"))
        d = self.m0.shape[0]
        if self.w0.shape[0] != d:
            raise OutOfRange("m0 and w0 dimensions disagree")
        if self.alpha0 <= 0 or self.beta0 <= 0:
            raise OutOfRange("alpha0 and beta0 must be positive")
        if self.nu0 <= d - 1:
            raise OutOfRange(f"nu0 must exceed d - 1 = {d - 1}")
        spd_factor_logdet(self.w0)

    @property
    def dim(self) -> int:
        return self.m0.shape[0]

    @classmethod
    def from_data(cls, data, alpha0: float = 1.0, beta0: float = 1.0,
                  nu0: float | None = None) -> "Hyperparams":
        """Data-driven defaults: m0 is the sample mean and w0 is scaled so
        the prior mean of each precision matches the inverse sample
        covariance.  Keeps results equivariant under affine shifts of the
        data."""
        y = np.asarray(data, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        d = y.shape[1]
        if nu0 is None:
            nu0 = d + 2.0
        m0 = y.mean(axis=0)
        cov = np.cov(y, rowvar=False, bias=True).reshape(d, d)
        cov = _regularize_cov(cov)
        w0 = spd_inverse(cov) / nu0
        return cls(alpha0=alpha0, beta0=beta0, m0=m0, w0=w0, nu0=float(nu0))


def _regularize_cov(cov: np.ndarray) -> np.ndarray:
    """Add the smallest ridge that makes a sample covariance factorizable."""
    d = cov.shape[0]
    scale = float(np.trace(cov)) / d
    if scale <= 0.0:
        return np.eye(d)
    jitter = 0.0
    while True:
        try:
            spd_factor_logdet(cov + jitter * np.eye(d))
            return cov + jitter * np.eye(d)
        except NotSpd:
            jitter = max(jitter * 10.0, 1e-12 * scale)


@dataclass
class VbState:
    """Variational posterior factors plus the ELBO trace of the run.

    ``alpha`` are Dirichlet concentrations; ``beta``, ``m``, ``w``, ``nu``
    the per-component Gaussian-Wishart parameters; ``resp`` the (N, K)
    responsibilities.  ``w_root``/``w_logdet`` cache a matrix root and log
    determinant of each ``w[k]``; they are rebuilt whenever the parameter
    block is refreshed.
    """

    alpha: np.ndarray
    beta: np.ndarray
    m: np.ndarray
    w: np.ndarray
    nu: np.ndarray
    resp: np.ndarray
    elbo_trace: list = field(default_factory=list)
    seed: int = 0
    strategy: str = "kmeans"
    restart: int | None = None
    converged: bool = False
    w_root: np.ndarray | None = field(default=None, repr=False)
    w_logdet: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_components(self) -> int:
        return self.alpha.shape[0]

    @property
    def dim(self) -> int:
        return self.m.shape[1]

    @property
    def elbo_final(self) -> float:
        return self.elbo_trace[-1]


@dataclass
class ModePoint:
    """Coordinate-wise modes of the factorized variational posterior.

    ``z_star`` holds 1-based component indices.  ``fallbacks`` records the
    places where a degenerate mode forced the factor mean instead.
    """

    z_star: np.ndarray
    pi_star: np.ndarray
    mu_star: np.ndarray
    q_star: np.ndarray
    fallbacks: list

    @property
    def n_components(self) -> int:
        return self.pi_star.shape[0]


def _as_data(data) -> np.ndarray:
    y = np.asarray(data, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    return y


def init_state(data, k: int, seed: int, strategy: str = "kmeans",
               hyper: Hyperparams | None = None) -> VbState:
    """Deterministic initial state for a K-component fit.

    Both strategies produce smoothed one-hot responsibilities (0.9 on the
    assigned component, the rest uniform); ``kmeans`` assigns via seeded
    k-means++, ``random`` via uniform labels.  The parameter block is then
    populated by one responsibility-weighted refresh under ``hyper``
    (data-driven defaults when omitted).
    """
    y = _as_data(data)
    n = y.shape[0]
    if k < 1:
        raise OutOfRange("k must be at least 1")
    if n < k:
        raise TooFewPoints(f"{n} points cannot support {k} components")
    if strategy not in INIT_STRATEGIES:
        raise OutOfRange(f"unknown init strategy {strategy!r}")
    if hyper is None:
        hyper = Hyperparams.from_data(y)

    if k == 1:
        resp = np.ones((n, 1))
    else:
        if strategy == "kmeans":
            centers = kmeans_pp_centers(y, k, seed)
            assign = assign_to_centers(y, centers)
        else:
            assign = np.random.default_rng(seed).integers(0, k, size=n)
        resp = np.full((n, k), (1.0 - _ASSIGNED_RESP) / (k - 1))
        resp[np.arange(n), assign] = _ASSIGNED_RESP

    state = VbState(
        alpha=np.empty(k), beta=np.empty(k), m=np.empty((k, y.shape[1])),
        w=np.empty((k, y.shape[1], y.shape[1])), nu=np.empty(k),
        resp=resp, seed=seed, strategy=strategy,
    )
    _refresh_params(y, hyper, state)
    state.elbo_trace = [elbo(y, hyper, state)]
    return state


def _fast_cholesky(m) -> np.ndarray:
    """Cholesky without the symmetry audit, for matrices built in-house."""
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotSpd("matrix is not positive definite") from exc


def _suff_stats(y, resp, fallback_means):
    """Responsibility-weighted counts, means, and unnormalized scatters.

    Empty components (zero total responsibility) take ``fallback_means``
    rows and a zero scatter.
    """
    k = resp.shape[1]
    d = y.shape[1]
    nk = resp.sum(axis=0)
    ybar = np.empty((k, d))
    scatter = np.empty((k, d, d))
    for j in range(k):
        if nk[j] > 0.0:
            ybar[j] = resp[:, j] @ y / nk[j]
            diff = y - ybar[j]
            scatter[j] = (resp[:, j][:, None] * diff).T @ diff
        else:
            ybar[j] = fallback_means[j]
            scatter[j] = 0.0
    return nk, ybar, scatter


def _refresh_params(y, hyper, state, stats=None):
    """Closed-form Dirichlet / Gaussian-Wishart refresh from ``state.resp``."""
    k = state.resp.shape[1]
    d = y.shape[1]
    if stats is None:
        stats = _suff_stats(y, state.resp, np.tile(hyper.m0, (k, 1)))
    nk, ybar, scatter = stats
    w0_inv = spd_inverse(hyper.w0)

    state.alpha = hyper.alpha0 + nk
    state.beta = hyper.beta0 + nk
    state.nu = hyper.nu0 + nk
    state.w_root = np.empty((k, d, d))
    state.w_logdet = np.empty(k)
    eye = np.eye(d)
    for j in range(k):
        state.m[j] = (hyper.beta0 * hyper.m0 + nk[j] * ybar[j]) / state.beta[j]
        dm = ybar[j] - hyper.m0
        w_inv = w0_inv + scatter[j] + (hyper.beta0 * nk[j] / state.beta[j]) * np.outer(dm, dm)
        factor = _fast_cholesky(w_inv)  # degenerate updates raise NotSpd here
        inv_factor = solve_triangular(factor, eye, lower=True)
        w = inv_factor.T @ inv_factor
        state.w[j] = 0.5 * (w + w.T)
        state.w_root[j] = inv_factor.T
        state.w_logdet[j] = -2.0 * float(np.sum(np.log(np.diag(factor))))
    return stats


def _roots_logdets(state):
    """Cached matrix roots/log dets of the precisions' Wishart scales."""
    if state.w_root is not None:
        return state.w_root, state.w_logdet
    k, d = state.n_components, state.dim
    roots = np.empty((k, d, d))
    logdets = np.empty(k)
    for j in range(k):
        roots[j], logdets[j] = spd_factor_logdet(state.w[j])
    return roots, logdets


def _expected_log_det_precision(state, w_logdets) -> np.ndarray:
    d = state.dim
    return (
        digamma(0.5 * (state.nu[:, None] - np.arange(d))).sum(axis=1)
        + d * np.log(2.0)
        + w_logdets
    )


def _log_resp(y, state) -> np.ndarray:
    """Unnormalized log responsibilities from the current parameter block."""
    n, d = y.shape
    k = state.n_components
    roots, logdets = _roots_logdets(state)
    e_log_pi = digamma(state.alpha) - digamma(state.alpha.sum())
    e_log_det = _expected_log_det_precision(state, logdets)
    log_rho = np.empty((n, k))
    for j in range(k):
        diff = y - state.m[j]
        proj = diff @ roots[j]
        quad = state.nu[j] * np.einsum("ij,ij->i", proj, proj) + d / state.beta[j]
        log_rho[:, j] = e_log_pi[j] + 0.5 * e_log_det[j] - 0.5 * d * LOG_2PI - 0.5 * quad
    return log_rho


def vb_step(data, hyper: Hyperparams, state: VbState) -> VbState:
    """One coordinate-ascent sweep: responsibility refresh, then parameters.

    Returns a new state; the ELBO of the result never drops below the
    input's by more than rounding noise.
    """
    y = _as_data(data)
    log_rho = _log_resp(y, state)
    shift = log_rho.max(axis=1, keepdims=True)
    resp = np.exp(log_rho - shift)
    resp /= resp.sum(axis=1, keepdims=True)

    new = replace(state, resp=resp, m=state.m.copy(), w=state.w.copy(),
                  elbo_trace=list(state.elbo_trace))
    stats = _refresh_params(y, hyper, new)
    new.elbo_trace.append(elbo(y, hyper, new, _stats=stats))
    return new


def _log_wishart_norm_vec(logdet_w, nu, d):
    """log B(W, nu) of the Wishart normalizer, vectorized over components."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    logdet_w = np.atleast_1d(np.asarray(logdet_w, dtype=float))
    return (
        -0.5 * nu * logdet_w
        - 0.5 * nu * d * np.log(2.0)
        - 0.25 * d * (d - 1) * np.log(np.pi)
        - gammaln(0.5 * (nu[:, None] - np.arange(d))).sum(axis=1)
    )


def elbo(data, hyper: Hyperparams, state: VbState, _stats=None) -> float:
    """Evidence lower bound E_q[log p(y, z, x)] - E_q[log q(z, x)]."""
    y = _as_data(data)
    n, d = y.shape
    k = state.n_components
    resp = state.resp

    if _stats is None:
        _stats = _suff_stats(y, resp, state.m)
    nk, ybar, scatter = _stats
    _, logdets = _roots_logdets(state)
    e_log_pi = digamma(state.alpha) - digamma(state.alpha.sum())
    e_log_det = _expected_log_det_precision(state, logdets)
    w0_inv = spd_inverse(hyper.w0)
    _, logdet_w0 = spd_factor_logdet(hyper.w0)

    log_b0 = float(_log_wishart_norm_vec(logdet_w0, hyper.nu0, d)[0])
    log_bk = _log_wishart_norm_vec(logdets, state.nu, d)

    e_loglik = 0.0
    e_log_prior_mu_lam = 0.0
    e_log_q_mu_lam = 0.0
    for j in range(k):
        # the per-point scatter is unnormalized, so its 1/N_k cancels the
        # leading N_k factor of the expected log likelihood
        dmy = ybar[j] - state.m[j]
        e_loglik += 0.5 * (
            nk[j] * (
                e_log_det[j]
                - d / state.beta[j]
                - state.nu[j] * float(dmy @ state.w[j] @ dmy)
                - d * LOG_2PI
            )
            - state.nu[j] * float(np.trace(scatter[j] @ state.w[j]))
        )
        dm0 = state.m[j] - hyper.m0
        e_log_prior_mu_lam += (
            0.5 * (d * np.log(hyper.beta0 / (2.0 * np.pi))
                   + e_log_det[j]
                   - d * hyper.beta0 / state.beta[j]
                   - hyper.beta0 * state.nu[j] * float(dm0 @ state.w[j] @ dm0))
            + log_b0
            + 0.5 * (hyper.nu0 - d - 1) * e_log_det[j]
            - 0.5 * state.nu[j] * float(np.trace(w0_inv @ state.w[j]))
        )
        wishart_entropy = (
            -log_bk[j]
            - 0.5 * (state.nu[j] - d - 1) * e_log_det[j]
            + 0.5 * state.nu[j] * d
        )
        e_log_q_mu_lam += (
            0.5 * e_log_det[j]
            + 0.5 * d * np.log(state.beta[j] / (2.0 * np.pi))
            - 0.5 * d
            - wishart_entropy
        )

    e_log_p_z = float(nk @ e_log_pi)
    e_log_prior_pi = (
        gammaln(k * hyper.alpha0) - k * gammaln(hyper.alpha0)
        + (hyper.alpha0 - 1.0) * e_log_pi.sum()
    )
    e_log_q_z = float(xlogy(resp, resp).sum())
    e_log_q_pi = (
        float((state.alpha - 1.0) @ e_log_pi)
        + gammaln(state.alpha.sum()) - gammaln(state.alpha).sum()
    )

    return float(
        e_loglik + e_log_p_z + e_log_prior_pi + e_log_prior_mu_lam
        - e_log_q_z - e_log_q_pi - e_log_q_mu_lam
    )


def vb_fit(data, k: int, hyper: Hyperparams | None = None, seed: int = 0,
           tol: float = 1e-8, max_iter: int = 500, restarts: int = 3) -> VbState:
    """Best-ELBO fit over independent restarts.

    Restart r uses seed ``seed + r`` and alternates the init strategies.
    A run stops when the relative ELBO improvement falls below ``tol`` or
    after ``max_iter`` sweeps.  Raises AllRestartsFailed when every
    restart hits a degenerate factorization.
    """
    if tol <= 0 or max_iter < 1 or restarts < 1:
        raise OutOfRange("tol must be positive, max_iter and restarts at least 1")
    y = _as_data(data)
    if hyper is None:
        hyper = Hyperparams.from_data(y)

    best = None
    for r in range(restarts):
        strategy = INIT_STRATEGIES[r % len(INIT_STRATEGIES)]
        try:
            state = init_state(y, k, seed + r, strategy, hyper)
            for _ in range(max_iter):
                prev = state.elbo_final
                state = vb_step(y, hyper, state)
                if state.elbo_final - prev < tol * max(abs(prev), 1.0):
                    state.converged = True
                    break
        except NotSpd:
            continue
        state.restart = r
        if best is None or state.elbo_final > best.elbo_final:
            best = state
    if best is None:
        raise AllRestartsFailed(f"all {restarts} restarts failed for k={k}")
    return best


def extract_mode(state: VbState, hyper: Hyperparams | None = None) -> ModePoint:
    """Coordinate-wise modes of the factorized posterior.

    Degenerate factor modes fall back to the factor mean: the Dirichlet
    mean when any concentration is at or below 1, the Wishart mean when
    the degrees of freedom give a non-positive-definite mode.  ``hyper``
    is accepted for call-site symmetry and not consulted.
    """
    k = state.n_components
    d = state.dim
    fallbacks = []

    z_star = np.argmax(state.resp, axis=1) + 1  # ties: lowest index, 1-based

    if np.all(state.alpha > 1.0):
        pi_star = (state.alpha - 1.0) / (state.alpha.sum() - k)
    else:
        pi_star = state.alpha / state.alpha.sum()
        fallbacks.append("dirichlet_mean")

    q_star = np.empty_like(state.w)
    for j in range(k):
        if state.nu[j] > d + 1:
            q_star[j] = (state.nu[j] - d - 1) * state.w[j]
        else:
            q_star[j] = state.nu[j] * state.w[j]
            fallbacks.append(f"wishart_mean[{j}]")

    return ModePoint(z_star=z_star, pi_star=pi_star, mu_star=state.m.copy(),
                     q_star=q_star, fallbacks=fallbacks)


def log_q_at_mode(state: VbState, mode: ModePoint) -> float:
    """Log of the variational density q at the extracted mode point."""
    total = float(np.sum(np.log(state.resp[np.arange(state.resp.shape[0]),
                                           mode.z_star - 1])))
    total += log_dirichlet_pdf(mode.pi_star, state.alpha)
    for j in range(state.n_components):
        total += log_mvn_pdf(mode.mu_star[j], state.m[j], state.beta[j] * mode.q_star[j])
        total += log_wishart_pdf(mode.q_star[j], state.w[j], state.nu[j])
    return total


def log_joint_at_mode(data, mode: ModePoint, hyper: Hyperparams) -> float:
    """Log joint density p(y, z*, x*) excluding the model-order prior.

    Points assigned to a zero-weight component yield -inf rather than an
    error.
    """
    y = _as_data(data)
    k = mode.n_components
    assigned = mode.z_star - 1

    total = 0.0
    for j in range(k):
        rows = y[assigned == j]
        if rows.shape[0]:
            factor, logdet = spd_factor_logdet(mode.q_star[j])
            total += float(mvn_logpdf_rows(rows, mode.mu_star[j], factor, logdet).sum())
    with np.errstate(divide="ignore"):
        total += float(np.sum(np.log(mode.pi_star[assigned])))
    total += log_dirichlet_pdf(mode.pi_star, np.full(k, hyper.alpha0))
    for j in range(k):
        total += log_mvn_pdf(mode.mu_star[j], hyper.m0, hyper.beta0 * mode.q_star[j])
        total += log_wishart_pdf(mode.q_star[j], hyper.w0, hyper.nu0)
    return total
