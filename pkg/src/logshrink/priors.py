"""Shrinkage-prior families on the log local scale xi = log(lambda).

Every family evaluates its density in three parameterizations: xi-space
(normalized location-scale form), lambda-space (with the 1/lambda Jacobian),
and kappa-space where kappa = 1 / (1 + lambda^2) is the shrinkage factor.
The closed-form marginal over a coefficient beta is available for the
asymmetric log-Laplace family; an adaptive-quadrature marginal serves as the
universal oracle for every other family.

All densities carry a common location offset ``eta`` (semantically the log
of the global scale), default 0.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .exceptions import ConvergenceError
from .specfun import gen_exp_integral, log_lower_inc_gamma

_LOG2PI = math.log(2.0 * math.pi)
_XI_BOUND = 40.0  # quadrature truncation; integrands underflow beyond


def _logcosh(u):
    u = np.abs(u)
    return u + np.log1p(np.exp(-2.0 * u)) - math.log(2.0)


def _softplus(u):
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def _check_positive(value, name):
    if not (np.isscalar(value) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite scalar")
    return float(value)


class UnsupportedFamilyError(ValueError):
    """Raised for density queries on the degenerate ridge point mass."""


class PriorFamily:
    """Base class; subclasses implement the standardized xi log-density.

    Subclasses are frozen dataclasses whose last field is the location
    offset ``eta`` so that scale/shape parameters bind positionally.
    """

    eta = 0.0

    def xi_log_density(self, xi):
        return self._std_xi_log_density(np.asarray(xi, dtype=float) - self.eta)

    def lambda_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda_density requires lambda > 0")
        # generic change of variables; subclasses override with closed forms
        return np.exp(self.xi_log_density(np.log(lam)) - np.log(lam))

    def _std_xi_log_density(self, u):
        raise NotImplementedError


@dataclass(frozen=True)
class BayesLasso(PriorFamily):
    """Double-exponential prior on beta; xi-density 2 exp(2 xi - exp(2 xi))."""

    eta: float = 0.0

    def _std_xi_log_density(self, u):
        t = 2.0 * u
        return math.log(2.0) + t - np.exp(np.minimum(t, 700.0))

    def lambda_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda_density requires lambda > 0")
        z = lam * math.exp(-self.eta)
        return 2.0 * z * np.exp(-z * z) * math.exp(-self.eta)


@dataclass(frozen=True)
class Horseshoe(PriorFamily):
    """Half-Cauchy local scale; xi-density sech(xi) / pi."""

    eta: float = 0.0

    def _std_xi_log_density(self, u):
        return -math.log(math.pi) - _logcosh(u)

    def lambda_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda_density requires lambda > 0")
        z = lam * math.exp(-self.eta)
        return (2.0 / math.pi) / (1.0 + z * z) * math.exp(-self.eta)


@dataclass(frozen=True)
class HorseshoePlus(PriorFamily):
    """Product of two half-Cauchy scales; xi-density (2 xi / pi^2) csch(xi),
    with the removable singularity at xi = 0 equal to 2 / pi^2."""

    eta: float = 0.0

    def _std_xi_log_density(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        small = u < 1e-4
        u_small = np.where(small, u, 0.0)
        u_safe = np.where(small, 1.0, u)
        # xi * csch(xi) = 1 - xi^2/6 + O(xi^4) near zero
        ratio = np.where(
            small,
            np.log1p(-np.square(u_small) / 6.0),
            np.log(2.0 * u_safe) - u_safe - np.log1p(-np.exp(-2.0 * u_safe)),
        )
        return math.log(2.0 / math.pi**2) + ratio

    def lambda_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda_density requires lambda > 0")
        z = lam * math.exp(-self.eta)
        d = z * z - 1.0
        near_one = np.abs(d) < 1e-8
        d_safe = np.where(near_one, 1.0, d)
        z_safe = np.where(near_one, 1.0, z)
        g = np.where(near_one, 0.5 - d / 4.0, np.log(z_safe) / d_safe)
        return (4.0 / math.pi**2) * g * math.exp(-self.eta)


@dataclass(frozen=True)
class LogHypSech(PriorFamily):
    """Hyperbolic-secant prior on xi with scale psi; psi = 1 is the horseshoe."""

    psi: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        _check_positive(self.psi, "psi")

    def _std_xi_log_density(self, u):
        return -math.log(math.pi * self.psi) - _logcosh(u / self.psi)

    def lambda_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda_density requires lambda > 0")
        x = np.log(lam) - self.eta
        lp = (math.log(2.0 / (math.pi * self.psi))
              + (1.0 / self.psi - 1.0) * x
              - _softplus(2.0 * x / self.psi) - self.eta)
        return np.exp(lp)


@dataclass(frozen=True)
class LogLaplace(PriorFamily):
    """Asymmetric Laplace prior on xi: left scale psi1, right scale psi2.

    The induced lambda-density is a Be(1/psi1, 1)-shaped power on (0, 1]
    glued to a Pareto(1/psi2) tail on (1, inf).
    """

    psi1: float = 1.0
    psi2: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        _check_positive(self.psi1, "psi1")
        _check_positive(self.psi2, "psi2")

    def _std_xi_log_density(self, u):
        scale = np.where(u < 0, self.psi1, self.psi2)
        return -np.log(2.0 * scale) - np.abs(u) / scale

    def lambda_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda_density requires lambda > 0")
        x = np.log(lam) - self.eta
        lp = np.where(
            x <= 0,
            -math.log(2.0 * self.psi1) + (-1.0 + 1.0 / self.psi1) * x,
            -math.log(2.0 * self.psi2) + (-1.0 - 1.0 / self.psi2) * x,
        )
        return np.exp(lp - self.eta)


@dataclass(frozen=True)
class LogT(PriorFamily):
    """Student-t prior on xi with degrees of freedom alpha and scale psi."""

    alpha: float = 7.0
    psi: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        _check_positive(self.alpha, "alpha")
        _check_positive(self.psi, "psi")

    def _log_norm(self):
        a = self.alpha
        return (math.lgamma((a + 1.0) / 2.0) - math.lgamma(a / 2.0)
                - 0.5 * math.log(math.pi * a) - math.log(self.psi))

    def _std_xi_log_density(self, u):
        a = self.alpha
        return self._log_norm() - 0.5 * (a + 1.0) * np.log1p(
            np.square(u) / (a * self.psi**2))

    def lambda_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambda_density requires lambda > 0")
        x = np.log(lam) - self.eta
        lp = (self._log_norm() - x
              - 0.5 * (self.alpha + 1.0) * np.log1p(np.square(x) / (self.alpha * self.psi**2)))
        return np.exp(lp - self.eta)


@dataclass(frozen=True)
class ZDist(PriorFamily):
    """z-distribution on xi (shape a, b; scale s); the Be(a, b) shrinkage
    family. a = b = 1/2, s = 1 recovers the horseshoe."""

    a: float = 0.5
    b: float = 0.5
    s: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        _check_positive(self.a, "a")
        _check_positive(self.b, "b")
        _check_positive(self.s, "s")

    def _std_xi_log_density(self, u):
        a, b, s = self.a, self.b, self.s
        lognorm = (math.log(2.0) + math.lgamma(a + b) - math.lgamma(a)
                   - math.lgamma(b) - math.log(s))
        return lognorm + 2.0 * a * u / s - (a + b) * _softplus(2.0 * u / s)


@dataclass(frozen=True)
class Ridge(PriorFamily):
    """Degenerate point mass at xi = eta; density queries are rejected."""

    eta: float = 0.0

    def _std_xi_log_density(self, u):
        raise UnsupportedFamilyError(
            "ridge is a point mass on xi; it has no density to evaluate")

    def lambda_density(self, lam):
        raise UnsupportedFamilyError(
            "ridge is a point mass on xi; it has no density to evaluate")


def _reject_ridge(family):
    if isinstance(family, Ridge):
        raise UnsupportedFamilyError(
            "ridge is a point mass on xi; it has no density to evaluate")


# -- operations -------------------------------------------------------------


def xi_log_density(family, xi):
    """Log of the normalized xi-space density of ``family`` at ``xi``."""
    _reject_ridge(family)
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)):
        raise ValueError("xi must be finite")
    out = family.xi_log_density(xi)
    return float(out) if out.ndim == 0 else out


def xi_density(family, xi):
    """Normalized xi-space density of ``family`` at ``xi``."""
    return np.exp(xi_log_density(family, xi))


def lambda_density(family, lam):
    """Density of the local scale lambda = exp(xi) under ``family``."""
    _reject_ridge(family)
    out = family.lambda_density(lam)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def kappa_density(family, kappa):
    """Density of the shrinkage factor kappa = 1 / (1 + lambda^2)."""
    _reject_ridge(family)
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa <= 0) or np.any(kappa >= 1):
        raise ValueError("kappa_density requires 0 < kappa < 1")
    xi = 0.5 * (np.log1p(-kappa) - np.log(kappa))
    out = np.exp(family.xi_log_density(xi)) / (2.0 * kappa * (1.0 - kappa))
    return float(out) if out.ndim == 0 else out


def marginal_beta_log_laplace(beta, psi1, psi2):
    """Closed-form marginal density of beta under the log-Laplace prior.

    Equals (1/sqrt(32 pi)) [ E_{s1}(x) / psi1 + x^{-s2} g(s2, x) / psi2 ]
    with x = beta^2 / 2, s1 = (1 + psi1) / (2 psi1), s2 = (1 + psi2) / (2 psi2)
    and g the lower incomplete gamma function. At beta = 0 the value is the
    analytic limit when psi1 < 1 and diverges otherwise.

    Parameters
    ----------
    beta : float
        Coefficient value; the density is symmetric in beta.
    psi1, psi2 : float
        Left and right scales of the Laplace prior on xi.
    """
    psi1 = _check_positive(psi1, "psi1")
    psi2 = _check_positive(psi2, "psi2")
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    const = 1.0 / math.sqrt(32.0 * math.pi)
    s1 = (1.0 + psi1) / (2.0 * psi1)
    s2 = (1.0 + psi2) / (2.0 * psi2)
    x = 0.5 * beta * beta
    if x == 0.0:
        if psi1 >= 1.0:
            raise ValueError(
                "marginal diverges at beta = 0 when psi1 >= 1 (pole)")
        # E_{s1}(0) = 2 psi1 / (1 - psi1); the gamma term tends to 2 / (1 + psi2)
        return const * (2.0 / (1.0 - psi1) + 2.0 / (1.0 + psi2))
    a1 = gen_exp_integral(s1, x) / psi1
    a2 = math.exp(log_lower_inc_gamma(s2, x) - s2 * math.log(x)) / psi2
    return const * (a1 + a2)


def marginal_beta_quadrature(family, beta, epsabs=1e-12, epsrel=1e-9):
    """Marginal density of beta by adaptive quadrature over xi in [-40, 40].

    This is the universal oracle: it integrates
    N(beta; 0, exp(2 xi)) p(xi) d xi for any non-ridge family.

    Raises
    ------
    ConvergenceError
        If the accumulated quadrature error estimate exceeds the requested
        tolerance; the achieved estimate is attached.
    """
    _reject_ridge(family)
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    log_half_b2 = math.log(0.5 * beta * beta) if beta != 0.0 else -math.inf

    def integrand(xi):
        g = -xi - 0.5 * _LOG2PI + float(family.xi_log_density(xi))
        t = log_half_b2 - 2.0 * xi
        if t > 700.0:
            return 0.0
        if t > -745.0:
            g -= math.exp(t)
        return math.exp(g) if g > -745.0 else 0.0

    pts = {-_XI_BOUND, _XI_BOUND, 0.0}
    if -_XI_BOUND < family.eta < _XI_BOUND:
        pts.add(float(family.eta))
    if beta != 0.0:
        peak = math.log(abs(beta))
        pts.update(p for p in (peak - 1.5, peak, peak + 1.5)
                   if -_XI_BOUND < p < _XI_BOUND)
    pts = sorted(pts)
    total = 0.0
    err_total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, err = quad(integrand, lo, hi, epsabs=epsabs, epsrel=epsrel,
                        limit=200)
        total += val
        err_total += err
    if err_total > 10.0 * max(epsabs, epsrel * abs(total)):
        raise ConvergenceError(
            "marginal quadrature did not reach tolerance", estimate=err_total)
    return total


def _xi_cdf(family, q, epsrel=1e-11):
    val, _ = quad(lambda t: math.exp(float(family.xi_log_density(t))),
                  -_XI_BOUND, q, epsabs=1e-14, epsrel=epsrel, limit=200)
    return val


def iqr_xi(family, tol=1e-6):
    """Quartiles (q25, q75) of the xi-space density via quadrature CDF
    and bisection root finding."""
    _reject_ridge(family)
    q25 = brentq(lambda q: _xi_cdf(family, q) - 0.25,
                 -_XI_BOUND + 1.0, _XI_BOUND - 1.0, xtol=tol)
    q75 = brentq(lambda q: _xi_cdf(family, q) - 0.75,
                 -_XI_BOUND + 1.0, _XI_BOUND - 1.0, xtol=tol)
    return float(q25), float(q75)


def iqr_one_minus_kappa(family, tol=1e-6):
    """Quartile interval of 1 - kappa implied by the xi quartiles
    (monotone transform 1 - kappa = 1 / (1 + exp(-2 xi)))."""
    q25, q75 = iqr_xi(family, tol=tol)
    return (1.0 / (1.0 + math.exp(-2.0 * q25)),
            1.0 / (1.0 + math.exp(-2.0 * q75)))


NEAR_ZERO_WINDOW = (1e-6, 1e-4)
FAR_TAIL_WINDOW = (1e3, 1e5)


def tail_exponent(family, side, n_points=25):
    """Least-squares slope of log p(beta) against log beta.

    ``side`` selects the window: ``"near-zero"`` fits on [1e-6, 1e-4] and
    ``"far-tail"`` on [1e3, 1e5], 25 log-spaced points. The log-Laplace
    family uses its closed form; every other family goes through the
    quadrature oracle.
    """
    _reject_ridge(family)
    if side == "near-zero":
        lo, hi = NEAR_ZERO_WINDOW
    elif side == "far-tail":
        lo, hi = FAR_TAIL_WINDOW
    else:
        raise ValueError("side must be 'near-zero' or 'far-tail'")
    betas = np.logspace(math.log10(lo), math.log10(hi), n_points)
    if isinstance(family, LogLaplace) and family.eta == 0.0:
        dens = np.array([marginal_beta_log_laplace(b, family.psi1, family.psi2)
                         for b in betas])
    else:
        dens = np.array([marginal_beta_quadrature(family, b,
                                                  epsabs=1e-320, epsrel=1e-9)
                         for b in betas])
    if np.any(dens < 1e-300):
        raise ValueError(
            "marginal density underflows on the fit window; shrink the grid")
    slope = np.polyfit(np.log(betas), np.log(dens), 1)[0]
    return float(slope)


# -- CLI plumbing ------------------------------------------------------------


_FAMILY_PARAMS = {
    "log-laplace": (LogLaplace, ("psi1", "psi2", "eta")),
    "log-t": (LogT, ("alpha", "psi", "eta")),
    "sech": (LogHypSech, ("psi", "eta")),
    "horseshoe": (Horseshoe, ("eta",)),
    "hs-plus": (HorseshoePlus, ("eta",)),
    "lasso": (BayesLasso, ("eta",)),
    "z": (ZDist, ("a", "b", "s", "eta")),
    "ridge": (Ridge, ("eta",)),
}


def make_prior(name, **params):
    """Construct a prior family from its CLI name and keyword parameters."""
    if name not in _FAMILY_PARAMS:
        raise ValueError(f"unknown prior family {name!r}; choose from "
                         f"{sorted(_FAMILY_PARAMS)}")
    cls, allowed = _FAMILY_PARAMS[name]
    unknown = set(params) - set(allowed)
    if unknown:
        raise ValueError(f"{name} does not accept parameters {sorted(unknown)}")
    return cls(**params)
