"""Independent reference implementations used only by the tests.

Everything here is deliberately written from the textbook formulas with
plain ``math`` calls and explicit loops, sharing no helpers with the
package, so agreement is a genuine cross-check.
"""

import itertools
import math

import numpy as np


def brute_log_mvn(x, mean, precision):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    precision = np.atleast_2d(np.asarray(precision, dtype=float))
    d = len(x)
    sign, logdet = np.linalg.slogdet(precision)
    assert sign > 0
    quad = 0.0
    for i in range(d):
        for j in range(d):
            quad += (x[i] - mean[i]) * precision[i, j] * (x[j] - mean[j])
    return 0.5 * logdet - 0.5 * d * math.log(2.0 * math.pi) - 0.5 * quad


def brute_log_multigamma(a, d):
    out = 0.25 * d * (d - 1) * math.log(math.pi)
    for j in range(1, d + 1):
        out += math.lgamma(a + 0.5 * (1 - j))
    return out


def brute_log_wishart(x, scale, dof):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    d = x.shape[0]
    _, logdet_x = np.linalg.slogdet(x)
    _, logdet_s = np.linalg.slogdet(scale)
    trace = float(np.trace(np.linalg.inv(scale) @ x))
    return (
        0.5 * (dof - d - 1) * logdet_x
        - 0.5 * trace
        - 0.5 * dof * d * math.log(2.0)
        - 0.5 * dof * logdet_s
        - brute_log_multigamma(0.5 * dof, d)
    )


def brute_log_dirichlet(p, alpha):
    p = np.asarray(p, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    out = math.lgamma(float(alpha.sum()))
    for a in alpha:
        out -= math.lgamma(float(a))
    for pk, a in zip(p, alpha):
        if pk == 0.0:
            if a == 1.0:
                continue
            return -math.inf if a > 1.0 else math.inf
        out += (a - 1.0) * math.log(pk)
    return out


def nw_log_evidence(y, beta0, m0, w0, nu0):
    """Closed-form log marginal likelihood of the conjugate single-Gaussian
    model with a Gaussian-Wishart prior over (mean, precision)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[0] == 1 and y.shape[1] > 1:
        y = y.T
    n, d = y.shape
    m0 = np.atleast_1d(np.asarray(m0, dtype=float))
    w0 = np.atleast_2d(np.asarray(w0, dtype=float))
    if n == 0:
        return 0.0
    ybar = y.mean(axis=0)
    centered = y - ybar
    scatter = centered.T @ centered
    beta_n = beta0 + n
    nu_n = nu0 + n
    w0_inv = np.linalg.inv(w0)
    dm = ybar - m0
    wn_inv = w0_inv + scatter + (beta0 * n / beta_n) * np.outer(dm, dm)
    return (
        -0.5 * n * d * math.log(math.pi)
        + brute_log_multigamma(0.5 * nu_n, d)
        - brute_log_multigamma(0.5 * nu0, d)
        + 0.5 * nu0 * np.linalg.slogdet(w0_inv)[1]
        - 0.5 * nu_n * np.linalg.slogdet(wn_inv)[1]
        + 0.5 * d * (math.log(beta0) - math.log(beta_n))
    )


def log_dirichlet_multinomial(counts, alpha0):
    """log p(z) for fixed assignment counts under a symmetric Dirichlet."""
    counts = np.asarray(counts, dtype=float)
    k = len(counts)
    n = float(counts.sum())
    out = math.lgamma(k * alpha0) - math.lgamma(n + k * alpha0)
    for c in counts:
        out += math.lgamma(c + alpha0) - math.lgamma(alpha0)
    return out


def exact_log_evidence_for_k(y, k, alpha0, beta0, m0, w0, nu0):
    """log p(y | K) by enumerating every one of the K^N assignments.

    Each assignment contributes p(z) (Dirichlet-multinomial) times the
    product of per-cluster conjugate marginals.  Feasible only for tiny N.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[0] == 1 and y.shape[1] > 1:
        y = y.T
    n = y.shape[0]
    terms = []
    for assignment in itertools.product(range(k), repeat=n):
        z = np.asarray(assignment)
        counts = np.bincount(z, minlength=k)
        log_term = log_dirichlet_multinomial(counts, alpha0)
        for j in range(k):
            rows = y[z == j]
            if rows.shape[0]:
                log_term += nw_log_evidence(rows, beta0, m0, w0, nu0)
        terms.append(log_term)
    peak = max(terms)
    return peak + math.log(sum(math.exp(t - peak) for t in terms))


def exact_order_posterior(y, k_max, alpha0, beta0, m0, w0, nu0, log_prior):
    """Exact normalized posterior over K = 1..k_max for tiny datasets."""
    log_scores = []
    for k in range(1, k_max + 1):
        log_scores.append(
            exact_log_evidence_for_k(y, k, alpha0, beta0, m0, w0, nu0)
            + log_prior(k, k_max)
        )
    peak = max(log_scores)
    total = sum(math.exp(s - peak) for s in log_scores)
    return [math.exp(s - peak) / total for s in log_scores]
