"""Exact log densities for the distributions in the mixture joint.

Everything is computed in log space on top of a single symmetric
positive definite (SPD) factorization primitive; probabilities are
exponentiated only at final normalization elsewhere.
"""

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import gammaln, multigammaln, xlogy

from .errors import (
    DimensionMismatch,
    DofTooSmall,
    NonPositiveAlpha,
    NotSimplex,
    NotSpd,
    NotSymmetric,
)

LOG_2PI = np.log(2.0 * np.pi)

# Relative asymmetry beyond this is an input error, below it is rounding
# noise and gets symmetrized away.
SYMMETRY_RTOL = 1e-10

SIMPLEX_TOL = 1e-10


def as_vector(x, name="x") -> np.ndarray:
    """Coerce a scalar or 1-d array-like to a float vector."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {v.shape}")
    return v


def as_matrix(m, name="matrix") -> np.ndarray:
    """Coerce a scalar or 2-d array-like to a square float matrix."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def as_simplex(weights, name="weights") -> np.ndarray:
    """Validate a non-negative vector summing to one (within 1e-10)."""
    w = as_vector(weights, name)
    if np.any(w < 0.0):
        raise NotSimplex(f"{name} has negative entries")
    if abs(float(w.sum()) - 1.0) > SIMPLEX_TOL:
        raise NotSimplex(f"{name} sums to {w.sum():.17g}, not 1")
    return w


def spd_factor_logdet(m) -> tuple[np.ndarray, float]:
    """Cholesky factor and log determinant of an SPD matrix.

    Returns ``(factor, logdet)`` where ``factor`` is lower triangular with
    ``factor @ factor.T == m`` and ``logdet == 2 * sum(log(diag(factor)))``.

    Raises NotSymmetric if the relative asymmetry exceeds 1e-10 and NotSpd
    if any factorization pivot is non-positive.
    """
    a = as_matrix(m)
    scale = max(float(np.abs(a).max()), 1.0)
    if float(np.abs(a - a.T).max()) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("matrix asymmetry exceeds 1e-10 relative")
    sym = 0.5 * (a + a.T)
    try:
        factor = np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as exc:
        raise NotSpd("matrix is not positive definite") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor))))
    return factor, logdet


def log_mvn_pdf(x, mean, precision) -> float:
    """Multivariate Gaussian log density parameterized by precision.

    ``0.5*logdet(precision) - (d/2)*log(2*pi) - 0.5*(x-mean)' P (x-mean)``
    """
    xv = as_vector(x, "x")
    mv = as_vector(mean, "mean")
    factor, logdet = spd_factor_logdet(precision)
    d = factor.shape[0]
    if xv.shape[0] != d or mv.shape[0] != d:
        raise DimensionMismatch(
            f"x ({xv.shape[0]}), mean ({mv.shape[0]}) and precision ({d}) disagree"
        )
    # (x-m)' L L' (x-m) = ||L'(x-m)||^2
    w = factor.T @ (xv - mv)
    return 0.5 * logdet - 0.5 * d * LOG_2PI - 0.5 * float(w @ w)


def log_wishart_pdf(x, scale, dof) -> float:
    """Wishart log density W(x; scale, dof) for SPD ``x``.

    Requires ``dof > d - 1`` so the density is normalizable.
    """
    x_factor, x_logdet = spd_factor_logdet(x)
    s_factor, s_logdet = spd_factor_logdet(scale)
    d = x_factor.shape[0]
    if s_factor.shape[0] != d:
        raise DimensionMismatch("x and scale dimensions disagree")
    dof = float(dof)
    if dof <= d - 1:
        raise DofTooSmall(f"dof {dof} must exceed d - 1 = {d - 1}")
    trace_term = float(np.trace(cho_solve((s_factor, True), 0.5 * (as_matrix(x) + as_matrix(x).T))))
    return (
        0.5 * (dof - d - 1) * x_logdet
        - 0.5 * trace_term
        - 0.5 * dof * d * np.log(2.0)
        - 0.5 * dof * s_logdet
        - multigammaln(0.5 * dof, d)
    )


def log_dirichlet_pdf(p, alpha) -> float:
    """Dirichlet log density at a point on the simplex.

    Zero weights are admissible: a zero entry contributes 0 when its
    concentration is exactly 1 and -inf when the concentration exceeds 1.
    """
    a = as_vector(alpha, "alpha")
    if np.any(a <= 0.0):
        raise NonPositiveAlpha("alpha entries must be strictly positive")
    pv = as_simplex(p, "p")
    if pv.shape[0] != a.shape[0]:
        raise DimensionMismatch("p and alpha lengths disagree")
    with np.errstate(divide="ignore", invalid="ignore"):
        weight_term = float(np.sum(xlogy(a - 1.0, pv)))
    return float(gammaln(a.sum()) - np.sum(gammaln(a))) + weight_term


def mvn_logpdf_rows(data, mean, precision_factor, precision_logdet) -> np.ndarray:
    """Gaussian log density of every row of ``data`` for one component.

    ``precision_factor`` is the lower Cholesky factor of the precision;
    this is the vectorized inner loop shared by the EM and VB fits.
    """
    d = precision_factor.shape[0]
    diff = data - mean
    w = diff @ precision_factor
    quad = np.einsum("ij,ij->i", w, w)
    return 0.5 * precision_logdet - 0.5 * d * LOG_2PI - 0.5 * quad


def spd_inverse(m) -> np.ndarray:
    """Inverse of an SPD matrix via its Cholesky factor, symmetrized."""
    factor, _ = spd_factor_logdet(m)
    inv_factor = solve_triangular(factor, np.eye(factor.shape[0]), lower=True)
    inv = inv_factor.T @ inv_factor
    return 0.5 * (inv + inv.T)
