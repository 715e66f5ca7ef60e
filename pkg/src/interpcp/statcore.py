"""Special functions and exact tests used throughout the package.

Everything here is a pure function of its arguments. Scalar inputs give
Python floats; array inputs are broadcast and give numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

__all__ = [
    "UndefinedCorrelationError",
    "normal_cdf",
    "normal_quantile",
    "regularized_incomplete_beta",
    "student_t_sf",
    "student_t_tails",
    "beta_tail",
    "binom_pmf",
    "hypergeom_pmf",
    "fisher_exact_one_sided_greater",
    "pearson_correlation",
    "spearman_correlation",
]


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation is requested for a constant vector."""


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


_lgamma = np.frompyfunc(math.lgamma, 1, 1)


def _lgammav(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return math.lgamma(float(x))
    return _lgamma(x).astype(float)


# ---------------------------------------------------------------------------
# Normal distribution
# ---------------------------------------------------------------------------


def normal_cdf(z):
    """Standard normal CDF."""
    return _out(ndtr(np.asarray(z, dtype=float)))


# Acklam's rational approximation coefficients (relative error ~1.2e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p):
    q = np.where(p < 0.5, p, 1.0 - p)
    z = np.empty_like(p)

    central = q >= _P_LOW
    if np.any(central):
        r = p[central] - 0.5
        s = r * r
        num = (((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r
        den = ((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0
        z[central] = num / den

    tail = ~central
    if np.any(tail):
        t = np.sqrt(-2.0 * np.log(q[tail]))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        zt = num / den
        z[tail] = np.where(p[tail] < 0.5, zt, -zt)
    return z


def normal_quantile(p):
    """Inverse of :func:`normal_cdf` on the open interval (0, 1).

    A rational approximation is polished with one Halley step against
    ``normal_cdf``; the refinement works on the smaller tail so that
    quantiles far in either tail keep full relative accuracy.

    Raises
    ------
    ValueError
        If any ``p`` lies outside (0, 1).
    """
    p_arr = np.asarray(p, dtype=float)
    scalar = p_arr.ndim == 0
    p_arr = np.atleast_1d(p_arr)
    if not np.all((p_arr > 0.0) & (p_arr < 1.0)):
        raise ValueError("normal_quantile requires 0 < p < 1")
    z = _acklam(p_arr)
    # refine on the lower tail: z_low = -|z| with target min(p, 1-p)
    lower = p_arr < 0.5
    q = np.where(lower, p_arr, 1.0 - p_arr)
    zl = -np.abs(z)
    err = ndtr(zl) - q
    dens = np.exp(-0.5 * zl * zl) / math.sqrt(2.0 * math.pi)
    u = err / dens
    zl = zl - u / (1.0 + 0.5 * zl * u)
    z = np.where(lower, zl, -zl)
    z = np.where(p_arr == 0.5, 0.0, z)
    return float(z[0]) if scalar else z


def upper_normal_quantile(p):
    """``normal_quantile(1 - p)`` evaluated without forming ``1 - p``."""
    return _out(-np.asarray(normal_quantile(p)))


# ---------------------------------------------------------------------------
# Incomplete beta and friends
# ---------------------------------------------------------------------------

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAXITER = 20000


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) via modified Lentz; vectorized."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAXITER + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        aa_, bb_, xx = a[idx], b[idx], x[idx]
        qab_, qap_, qam_ = qab[idx], qap[idx], qam[idx]
        cc, dd, hh = c[idx], d[idx], h[idx]
        m2 = 2.0 * m
        num = m * (bb_ - m) * xx / ((qam_ + m2) * (aa_ + m2))
        dd = 1.0 + num * dd
        dd = np.where(np.abs(dd) < _CF_TINY, _CF_TINY, dd)
        cc = 1.0 + num / cc
        cc = np.where(np.abs(cc) < _CF_TINY, _CF_TINY, cc)
        dd = 1.0 / dd
        hh = hh * dd * cc
        num = -(aa_ + m) * (qab_ + m) * xx / ((aa_ + m2) * (qap_ + m2))
        dd = 1.0 + num * dd
        dd = np.where(np.abs(dd) < _CF_TINY, _CF_TINY, dd)
        cc = 1.0 + num / cc
        cc = np.where(np.abs(cc) < _CF_TINY, _CF_TINY, cc)
        dd = 1.0 / dd
        delta = dd * cc
        hh = hh * delta
        c[idx], d[idx], h[idx] = cc, dd, hh
        done = np.abs(delta - 1.0) < _CF_EPS
        active[idx[done]] = False
    else:
        raise ArithmeticError("incomplete beta continued fraction did not converge")
    return h


def _betainc_pair(a, b, x, y):
    """Return (I_x(a, b), 1 - I_x(a, b)) with y = 1 - x supplied exactly."""
    a, b, x, y = np.broadcast_arrays(
        np.asarray(a, float), np.asarray(b, float), np.asarray(x, float), np.asarray(y, float)
    )
    shape = x.shape
    a, b, x, y = (np.ravel(v).copy() for v in (a, b, x, y))
    lower = np.zeros_like(x)
    upper = np.zeros_like(x)

    at0 = x <= 0.0
    at1 = y <= 0.0
    lower[at0], upper[at0] = 0.0, 1.0
    lower[at1], upper[at1] = 1.0, 0.0
    inner = ~(at0 | at1)
    if np.any(inner):
        ai, bi, xi, yi = a[inner], b[inner], x[inner], y[inner]
        lbeta = _lgammav(ai) + _lgammav(bi) - _lgammav(ai + bi)
        front = np.exp(ai * np.log(xi) + bi * np.log(yi) - lbeta)
        direct = xi < (ai + 1.0) / (ai + bi + 2.0)
        lo = np.empty_like(xi)
        hi = np.empty_like(xi)
        if np.any(direct):
            v = front[direct] * _betacf(ai[direct], bi[direct], xi[direct]) / ai[direct]
            lo[direct] = v
            hi[direct] = 1.0 - v
        sw = ~direct
        if np.any(sw):
            v = front[sw] * _betacf(bi[sw], ai[sw], yi[sw]) / bi[sw]
            hi[sw] = v
            lo[sw] = 1.0 - v
        lower[inner], upper[inner] = lo, hi
    return lower.reshape(shape), upper.reshape(shape)


def _check_shape_params(a, b):
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise ValueError("beta shape parameters must be positive")


def regularized_incomplete_beta(x, a, b):
    """I_x(a, b), the Beta(a, b) CDF at ``x``."""
    _check_shape_params(a, b)
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in [0, 1]")
    lo, _ = _betainc_pair(a, b, x, 1.0 - x)
    return _out(lo)


def beta_tail(threshold, a, b):
    """P(q >= threshold) for q ~ Beta(a, b)."""
    _check_shape_params(a, b)
    t = np.asarray(threshold, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("threshold must lie in [0, 1]")
    _, hi = _betainc_pair(a, b, t, 1.0 - t)
    return _out(hi)


def student_t_tails(t, df):
    """Return ``(P(T >= t), P(T <= t))`` for Student-t with ``df`` degrees of freedom.

    Both tails are computed directly, so neither loses precision through
    a ``1 - p`` cancellation.
    """
    df = np.asarray(df, dtype=float)
    if np.any(df <= 0):
        raise ValueError("degrees of freedom must be positive")
    t = np.asarray(t, dtype=float)
    t2 = t * t
    x = df / (df + t2)
    y = t2 / (df + t2)
    ib, ib_c = _betainc_pair(0.5 * df, 0.5, x, y)
    half = 0.5 * ib  # P(T >= |t|)
    other = 0.5 + 0.5 * ib_c  # P(T <= |t|)
    pos = t >= 0
    sf = np.where(pos, half, other)
    cdf = np.where(pos, other, half)
    return _out(sf), _out(cdf)


def student_t_sf(t, df):
    """Upper-tail probability P(T >= t) of Student's t distribution."""
    return student_t_tails(t, df)[0]


# ---------------------------------------------------------------------------
# Discrete distributions
# ---------------------------------------------------------------------------


_EXACT_N = 1000


def binom_pmf(k, n, p):
    """Binomial probability mass ``C(n, k) p^k (1-p)^(n-k)`` via log-gamma."""
    k_arr = np.asarray(k)
    n_arr = np.asarray(n)
    p_arr = np.asarray(p, dtype=float)
    if np.any(n_arr < 0) or np.any(k_arr < 0) or np.any(k_arr > n_arr):
        raise ValueError("binom_pmf requires 0 <= k <= n")
    if np.any((p_arr < 0) | (p_arr > 1)):
        raise ValueError("p must lie in [0, 1]")
    k_f, n_f, p_f = np.broadcast_arrays(k_arr.astype(float), n_arr.astype(float), p_arr)
    log_c = _lgammav(n_f + 1) - _lgammav(k_f + 1) - _lgammav(n_f - k_f + 1)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        log_terms = np.where(k_f > 0, k_f * np.log(p_f), 0.0) + np.where(
            n_f - k_f > 0, (n_f - k_f) * np.log1p(-p_f), 0.0
        )
        out = np.exp(log_c + log_terms)
        # moderate n: exact coefficient times direct powers, a few ulp instead of ~n ulp
        if np.all(k_f == np.round(k_f)) and np.all(n_f == np.round(n_f)) and n_f.size and n_f.max() <= _EXACT_N:
            coef = np.array([float(math.comb(int(a), int(b))) for a, b in zip(n_f.ravel(), k_f.ravel())])
            direct = coef.reshape(n_f.shape) * p_f ** k_f * (1.0 - p_f) ** (n_f - k_f)
            out = np.where(direct > 1e-280, direct, out)
    return _out(out)


def hypergeom_pmf(x, total, successes, draws):
    """P(X = x) when drawing ``draws`` items from ``total`` containing ``successes``."""
    x = np.asarray(x, dtype=float)
    failures = total - successes
    log_p = (
        _lgammav(successes + 1) - _lgammav(x + 1) - _lgammav(successes - x + 1)
        + _lgammav(failures + 1) - _lgammav(draws - x + 1) - _lgammav(failures - draws + x + 1)
        - _lgammav(total + 1) + _lgammav(draws + 1) + _lgammav(total - draws + 1)
    )
    return _out(np.exp(log_p))


def fisher_exact_one_sided_greater(q1, q2, n):
    """One-sided Fisher exact p-value that group 2's odds exceed group 1's.

    Two groups of equal size ``n`` have ``q1`` and ``q2`` responders. With
    the margins fixed, the group-2 responder count is hypergeometric; the
    p-value is its upper tail at the observed ``q2``.
    """
    q1, q2, n = int(q1), int(q2), int(n)
    if n < 1 or not (0 <= q1 <= n and 0 <= q2 <= n):
        raise ValueError("counts must satisfy 0 <= q1, q2 <= n with n >= 1")
    k = q1 + q2
    # exact integer tail, one rounding: p-values equal to alpha stay equal
    num = sum(math.comb(k, x) * math.comb(2 * n - k, n - x) for x in range(q2, min(k, n) + 1))
    return num / math.comb(2 * n, n)


# ---------------------------------------------------------------------------
# Correlation
# ---------------------------------------------------------------------------


def pearson_correlation(a, b):
    """Pearson product-moment correlation of two equal-length vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two 1-D vectors of equal length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(np.dot(da, da)))
    sb = math.sqrt(float(np.dot(db, db)))
    if sa == 0.0 or sb == 0.0 or not (math.isfinite(sa) and math.isfinite(sb)):
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    r = float(np.dot(da, db)) / (sa * sb)
    return max(-1.0, min(1.0, r))


def _average_ranks(v):
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v), dtype=float)
    sv = v[order]
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_correlation(a, b):
    """Spearman rank correlation (Pearson on average ranks)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return pearson_correlation(_average_ranks(a), _average_ranks(b))
