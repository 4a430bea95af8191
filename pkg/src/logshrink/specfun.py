"""Scalar special functions: Lambert W, generalized exponential integral,
and incomplete gamma functions.

These are the numerical kernels behind the closed-form marginal density and
the mode of the log-local-scale conditional. All routines are pure functions
of their arguments and accept scalars; ``lambert_w0`` and ``lambert_w0_of_exp``
also accept numpy arrays (they sit on the hot path of the Gibbs sweep).
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError

_EULER = 0.57721566490153286060
_EPS = 2.2204460492503131e-16

W_STEP_TOL = 1e-14
W_MAX_ITER = 100
_CF_MAX_TERMS = 10_000


@dataclass
class SpecFunResult:
    """Value of a special-function evaluation plus convergence metadata."""

    value: float
    converged: bool
    iterations: int


def _validate_w_arg(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("lambert_w0 requires finite input")
    if np.any(x < 0):
        raise ValueError("lambert_w0 is only defined here for x >= 0")


def lambert_w0(x):
    """Principal branch W(x) for x >= 0, solving w * exp(w) = x.

    Halley iteration from w0 = 1 (x < 3) or w0 = log x - log log x
    (x >= 3), stopped when the relative step falls below ``W_STEP_TOL``.
    Accepts scalars or arrays. Residual satisfies
    ``|w exp(w) - x| <= 1e-12 * max(x, 1)``.
    """
    arr = np.asarray(x, dtype=float)
    _validate_w_arg(arr)
    scalar = arr.ndim == 0
    out = _w0_array(np.atleast_1d(arr))
    return float(out[0]) if scalar else out


def lambert_w0_details(x):
    """Scalar W(x) together with convergence flag and iteration count."""
    x = float(x)
    _validate_w_arg(np.asarray(x))
    if x == 0.0:
        return SpecFunResult(0.0, True, 0)
    w = 1.0 if x < 3.0 else math.log(x) - math.log(math.log(x))
    for it in range(1, W_MAX_ITER + 1):
        ew = math.exp(w)
        v = w * ew - x
        denom = ew * (w + 1.0) - v * (w + 2.0) / (2.0 * w + 2.0)
        w_new = w - v / denom
        if abs(w - w_new) <= W_STEP_TOL * abs(w_new):
            return SpecFunResult(w_new, True, it)
        w = w_new
    return SpecFunResult(w, abs(w * math.exp(w) - x) <= 1e-12 * max(x, 1.0), W_MAX_ITER)


def _w0_array(x):
    # x > 1e100 would overflow w*exp(w) inside the iteration; route through
    # the log-space solver instead.
    big = x > 1e100
    out = np.empty_like(x)
    if np.any(big):
        out[big] = _w0_from_log(np.log(x[big]))
    small = ~big
    if np.any(small):
        xs = x[small]
        w = np.ones_like(xs)
        hi = xs >= 3.0
        if np.any(hi):
            lx = np.log(xs[hi])
            w[hi] = lx - np.log(lx)
        active = xs > 0.0
        w[~active] = 0.0
        for _ in range(W_MAX_ITER):
            if not np.any(active):
                break
            wa = w[active]
            xa = xs[active]
            ew = np.exp(wa)
            v = wa * ew - xa
            denom = ew * (wa + 1.0) - v * (wa + 2.0) / (2.0 * wa + 2.0)
            w_new = wa - v / denom
            done = np.abs(wa - w_new) <= W_STEP_TOL * np.abs(w_new)
            w[active] = w_new
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        if np.any(active):
            bad = w[active]
            resid = np.abs(bad * np.exp(bad) - xs[active])
            if np.any(resid > 1e-12 * np.maximum(xs[active], 1.0)):
                raise ConvergenceError(
                    "lambert_w0 did not converge within %d iterations" % W_MAX_ITER,
                    estimate=float(np.max(resid)),
                )
        out[small] = w
    return out


def _w0_from_log(t):
    # Solve w + log w = t by Newton; valid for t >= 2 or so, used for t
    # large enough that exp(t) overflows. w0 = t - log t.
    w = t - np.log(t)
    for _ in range(W_MAX_ITER):
        f = w + np.log(w) - t
        step = f / (1.0 + 1.0 / w)
        w = w - step
        if np.all(np.abs(step) <= W_STEP_TOL * np.abs(w)):
            break
    return w


def lambert_w0_of_exp(t):
    """W(exp(t)) for real t, stable for arbitrarily large t.

    For t <= 700 this is ``lambert_w0(exp(t))``; beyond that the identity
    W + log W = t is solved directly, which is the asymptotic
    log x - log log x branch refined by Newton steps.
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("lambert_w0_of_exp requires finite input")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).astype(float)
    out = np.empty_like(arr)
    big = arr > 700.0
    if np.any(big):
        out[big] = _w0_from_log(arr[big])
    if np.any(~big):
        out[~big] = _w0_array(np.exp(arr[~big]))
    return float(out[0]) if scalar else out


def _is_nonneg_int(s):
    m = round(s)
    return abs(s - m) <= 4 * _EPS * max(1.0, abs(s)) and m >= 0


def gen_exp_integral(s, x):
    """Generalized exponential integral E_s(x) = int_1^inf exp(-x t) t^-s dt.

    Requires s > 0 and x > 0. Continued fraction for x > 1, power series
    otherwise (with the usual logarithmic branch at integer s). Relative
    accuracy ~1e-12 away from non-integer s very close to an integer.
    """
    s = float(s)
    x = float(x)
    if not (math.isfinite(s) and s > 0.0):
        raise ValueError("gen_exp_integral requires s > 0")
    if not (math.isfinite(x) and x > 0.0):
        raise ValueError("gen_exp_integral requires x > 0; the x -> 0 limit "
                         "must be taken analytically by the caller")
    if x > 1.0:
        return _expint_cf(s, x)
    return _expint_series(s, x)


def _expint_cf(s, x):
    # Lentz continued fraction, Numerical-Recipes layout generalized to
    # real order.
    b = x + s
    c = 1.0 / 1e-308
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_TERMS + 1):
        a = -i * (s - 1.0 + i)
        b += 2.0
        d = a * d + b
        if abs(d) < 1e-308:
            d = 1e-308
        c = b + a / c
        if abs(c) < 1e-308:
            c = 1e-308
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h * math.exp(-x)
    raise ConvergenceError("E_s continued fraction stalled", estimate=abs(delta - 1.0))


def _expint_series(s, x):
    if _is_nonneg_int(s):
        return _expint_series_int(int(round(s)), x)
    # E_s(x) = Gamma(1-s) x^(s-1) - sum_k (-x)^k / (k! (1-s+k))
    lead = math.gamma(1.0 - s) * math.pow(x, s - 1.0) if s < 171 else math.inf
    total = 1.0 / (1.0 - s)
    term = 1.0
    for k in range(1, _CF_MAX_TERMS + 1):
        term *= -x / k
        delta = term / (1.0 - s + k)
        total += delta
        if abs(delta) <= 1e-16 * max(abs(total), 1e-300):
            return lead - total
    raise ConvergenceError("E_s series stalled", estimate=abs(delta))


def _expint_series_int(m, x):
    # Logarithmic case at integer order (m >= 1 here; m = 0 never reaches
    # the series because E_0(x) = exp(-x)/x is handled by the CF for x > 1
    # and equals the k = 0 limit otherwise).
    if m == 0:
        return math.exp(-x) / x
    nm1 = m - 1
    ans = -math.log(x) - _EULER if nm1 == 0 else 1.0 / nm1
    fact = 1.0
    for i in range(1, _CF_MAX_TERMS + 1):
        fact *= -x / i
        if i != nm1:
            delta = -fact / (i - nm1)
        else:
            psi = -_EULER + sum(1.0 / ii for ii in range(1, nm1 + 1))
            delta = fact * (-math.log(x) + psi)
        ans += delta
        if abs(delta) < abs(ans) * 1e-16:
            return ans
    raise ConvergenceError("E_m series stalled", estimate=abs(delta))


def lower_inc_gamma(s, x):
    """Lower incomplete gamma gamma(s, x) = int_0^x v^(s-1) exp(-v) dv.

    Requires s > 0, x >= 0 (only the upper function supports negative order).
    Series below the x = s + 1 crossover, complement of the continued
    fraction above it.
    """
    s = float(s)
    x = float(x)
    if not (math.isfinite(s) and s > 0.0):
        raise ValueError("lower_inc_gamma requires s > 0")
    if not (math.isfinite(x) and x >= 0.0):
        raise ValueError("lower_inc_gamma requires x >= 0")
    if x == 0.0:
        return 0.0
    return math.exp(log_lower_inc_gamma(s, x))


def log_lower_inc_gamma(s, x):
    """log gamma(s, x) for s > 0, x > 0, safe against overflow in Gamma(s)."""
    s = float(s)
    x = float(x)
    if not (s > 0.0 and x > 0.0):
        raise ValueError("log_lower_inc_gamma requires s > 0 and x > 0")
    if x < s + 1.0:
        # gamma(s,x) = x^s e^-x sum_k x^k / (s (s+1) ... (s+k))
        term = 1.0 / s
        total = term
        for k in range(1, _CF_MAX_TERMS + 1):
            term *= x / (s + k)
            total += term
            if term <= total * 1e-17:
                return s * math.log(x) - x + math.log(total)
        raise ConvergenceError("lower incomplete gamma series stalled")
    # gamma = Gamma(s) (1 - Q(s,x)) with Q from the continued fraction
    log_q = _log_upper_cf(s, x) - math.lgamma(s)
    q = math.exp(log_q)
    return math.lgamma(s) + math.log1p(-q)


def _log_upper_cf(s, x):
    # log Gamma(s, x) by modified Lentz; converges for x > 0 and any real s,
    # fastest for x > ~1.
    b = x + 1.0 - s
    c = 1.0 / 1e-308
    d = 1.0 / b if b != 0.0 else 1e308
    h = d
    for i in range(1, _CF_MAX_TERMS + 1):
        a = -i * (i - s)
        b += 2.0
        d = a * d + b
        if abs(d) < 1e-308:
            d = 1e-308
        c = b + a / c
        if abs(c) < 1e-308:
            c = 1e-308
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return s * math.log(x) - x + math.log(h)
    raise ConvergenceError("upper incomplete gamma continued fraction stalled",
                           estimate=abs(delta - 1.0))


def upper_inc_gamma(s, x):
    """Upper incomplete gamma Gamma(s, x) for x > 0; s may be negative.

    For s > 0 agrees with Gamma(s) - gamma(s, x); for s < 0 the continued
    fraction is used directly (x >= 1) or the order is lifted through the
    recurrence Gamma(s, x) = (Gamma(s+1, x) - x^s exp(-x)) / s (x < 1).
    """
    s = float(s)
    x = float(x)
    if s == 0.0 or not math.isfinite(s):
        raise ValueError("upper_inc_gamma requires nonzero finite s")
    if not (math.isfinite(x) and x > 0.0):
        raise ValueError("upper_inc_gamma requires x > 0")
    if s > 0.0:
        if x < s + 1.0:
            return math.gamma(s) - lower_inc_gamma(s, x)
        return math.exp(_log_upper_cf(s, x))
    if x >= 1.0:
        return math.exp(_log_upper_cf(s, x))
    # Lift negative order to positive through the recurrence; the x^s term
    # dominates at small x so the subtraction is benign.
    k = int(math.ceil(-s))
    s0 = s + k
    if s0 == 0.0:
        val = gen_exp_integral(1.0, x)  # Gamma(0, x) = E_1(x)
    else:
        val = upper_inc_gamma(s0, x)
    for j in range(1, k + 1):
        sj = s0 - j
        val = (val - math.pow(x, sj) * math.exp(-x)) / sj
    return val
