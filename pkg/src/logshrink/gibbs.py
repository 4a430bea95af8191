"""Gibbs sampler for the normal multiple-means model with log-scale priors.

Hierarchy (known noise variance sigma^2):

    y_j | beta_j           ~ N(beta_j, sigma^2)
    beta_j | lambda_j, tau ~ N(0, lambda_j^2 tau^2 sigma^2)
    xi_j = log lambda_j    ~ N(0, omega_j^2 psi^2)
    omega_j^2              ~ Exp(1)                  (log-Laplace mixing)
                           ~ IG(alpha/2, alpha/2)    (log-t mixing)
    psi                    ~ C+(0, 1)      (inverse-gamma pair representation)
    tau                    ~ C+(0, 1) truncated to (tau_lo, tau_hi)

Comparator priors reuse the same beta and tau updates: the horseshoe and
horseshoe+ draw lambda_j^2 through the standard inverse-gamma auxiliary
construction of the half-Cauchy, and ridge fixes lambda_j = 1.

The sweep order is fixed: beta -> xi -> omega^2 -> (psi^2, phi) -> tau.
Everything is deterministic given (seed, chain_id).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .exceptions import SamplerFailure
from .rng import RngStream
from .xi_sampler import sample_xi_batch
from ._validation import as_float_vector

MIXINGS = ("log-laplace", "log-t", "horseshoe", "hs-plus", "ridge")

_BIG = 1e300


@dataclass
class ModelConfig:
    """Configuration of one MCMC chain.

    Parameters
    ----------
    mixing : str
        One of ``log-laplace``, ``log-t``, ``horseshoe``, ``hs-plus``,
        ``ridge``.
    alpha : float
        Degrees of freedom of the log-t mixing density.
    psi : "adapt" or float
        Sample the scale psi under its half-Cauchy prior, or hold it fixed
        at the given positive value. Ignored by the comparator priors.
    sigma2 : float
        Known noise variance.
    tau_bounds : (float, float) or None
        Truncation interval for the global scale; None resolves to (1/n, 1).
    iterations, burnin, thin : int
        MCMC budget; ``burnin < iterations``.
    seed, chain_id : int
        Key of the chain's random stream.
    """

    mixing: str = "log-t"
    alpha: float = 7.0
    psi: object = "adapt"
    sigma2: float = 1.0
    tau_bounds: Optional[tuple] = None
    iterations: int = 10_000
    burnin: int = 5_000
    thin: int = 1
    seed: int = 0
    chain_id: int = 0

    def validate(self):
        if self.mixing not in MIXINGS:
            raise ValueError(f"mixing must be one of {MIXINGS}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be positive and finite")
        if self.psi != "adapt":
            p = float(self.psi)
            if not (p > 0 and math.isfinite(p)):
                raise ValueError("psi must be 'adapt' or a positive value")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError("sigma2 must be positive and finite")
        if self.tau_bounds is not None:
            lo, hi = self.tau_bounds
            if not (0 < lo < hi and math.isfinite(hi)):
                raise ValueError("tau_bounds must satisfy 0 < lo < hi < inf")
        if not (0 <= self.burnin < self.iterations):
            raise ValueError("burnin must satisfy 0 <= burnin < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        return self

    def resolved_tau_bounds(self, n):
        if self.tau_bounds is not None:
            return float(self.tau_bounds[0]), float(self.tau_bounds[1])
        return 1.0 / n, 1.0


@dataclass
class GibbsState:
    """Mutable latent state of one chain plus its fixed inputs."""

    y: np.ndarray
    beta: np.ndarray
    xi: np.ndarray
    omega_sq: np.ndarray
    psi_sq: float
    phi: float
    tau: float
    tau_lo: float
    tau_hi: float
    # auxiliaries of the half-Cauchy constructions (comparators only)
    lambda_sq: Optional[np.ndarray] = None
    nu: Optional[np.ndarray] = None
    eta_sq: Optional[np.ndarray] = None
    zeta: Optional[np.ndarray] = None

    @property
    def n(self):
        return self.y.shape[0]


@dataclass
class ChainOutput:
    """Posterior summaries accumulated over the kept draws."""

    posterior_mean_beta: np.ndarray
    posterior_mean_kappa: np.ndarray
    selected: np.ndarray
    posterior_mean_psi: float
    posterior_mean_tau: float
    acceptance_stats: float
    kept_draws: int


def init_state(y, config):
    """Deterministic starting point; forgotten within the burn-in."""
    y = as_float_vector(y, "y")
    n = y.shape[0]
    lo, hi = config.resolved_tau_bounds(n)
    psi0 = 1.0 if config.psi == "adapt" else float(config.psi)
    state = GibbsState(
        y=y,
        beta=0.5 * y.copy(),
        xi=np.zeros(n),
        omega_sq=np.ones(n),
        psi_sq=psi0 * psi0,
        phi=1.0,
        tau=min(max(math.sqrt(lo * hi), lo * 1.0000001), hi * 0.9999999),
        tau_lo=lo,
        tau_hi=hi,
    )
    if config.mixing in ("horseshoe", "hs-plus"):
        state.lambda_sq = np.ones(n)
        state.nu = np.ones(n)
    if config.mixing == "hs-plus":
        state.eta_sq = np.ones(n)
        state.zeta = np.ones(n)
    return state


def one_minus_kappa(state):
    """Per-coordinate signal fraction 1 - kappa_j = lam^2 tau^2/(1 + lam^2 tau^2)."""
    return expit(2.0 * (state.xi + math.log(state.tau)))


def update_beta(state, config, rng):
    """beta_j | y_j, lambda_j, tau ~ N((1 - kappa_j) y_j, sigma^2 (1 - kappa_j))."""
    omk = one_minus_kappa(state)
    sd = np.sqrt(config.sigma2 * omk)
    state.beta = omk * state.y + sd * rng.standard_normal(state.n)


def update_xi(state, config, rng):
    """Draw each xi_j exactly from its log-concave conditional.

    Returns the mean number of envelope proposals per coordinate.
    """
    with np.errstate(over="ignore"):
        m = state.beta * state.beta / (2.0 * state.tau**2 * config.sigma2)
        v = state.omega_sq * state.psi_sq
    m = np.minimum(m, _BIG)
    v = np.minimum(np.maximum(v, 1e-300), _BIG)
    xi, proposals = sample_xi_batch(m, v, rng)
    state.xi = xi
    return float(proposals.mean())


def update_omega(state, config, rng):
    """Mixing-variance update for the scale mixture on xi."""
    if config.mixing == "log-t":
        rate = state.xi * state.xi / (2.0 * state.psi_sq) + 0.5 * config.alpha
        state.omega_sq = rng.inverse_gamma(0.5 * (config.alpha + 1.0), rate)
        return
    # log-Laplace: 1/omega^2 is inverse-Gaussian; the conditional kernel
    # x^(-3/2) exp(-x xi^2/(2 psi^2) - 1/x) fixes the shape at 2 for the
    # Exp(1) mixing density.
    small = np.abs(state.xi) < 1e-12
    omega_sq = np.empty(state.n)
    if np.any(small):
        omega_sq[small] = rng.exponential(1.0, size=int(small.sum()))
    if np.any(~small):
        xi = state.xi[~small]
        mean = np.sqrt(2.0 * state.psi_sq / (xi * xi))
        omega_sq[~small] = 1.0 / rng.inverse_gaussian(mean, 2.0)
    state.omega_sq = omega_sq


def update_psi(state, config, rng):
    """Joint (psi^2, phi) update preserving the C+(0,1) prior on psi."""
    if config.psi != "adapt":
        return
    rate = 1.0 / state.phi + 0.5 * float(np.sum(state.xi * state.xi / state.omega_sq))
    state.psi_sq = float(rng.inverse_gamma(0.5 * (state.n + 1.0), rate))
    state.phi = float(rng.inverse_gamma(1.0, 1.0 + 1.0 / state.psi_sq))


def sample_tau(n_terms, s_sum, lo, hi, tau0, rng, max_shrink=3000):
    """Slice-sample tau from p(tau) ~ tau^-n exp(-S/(2 tau^2)) / (1 + tau^2)
    truncated to (lo, hi), working on u = log tau.

    The bounded support makes interval shrinkage from the full range a
    valid, tuning-free slice update; the iteration cap allows the bracket
    to contract to machine width.
    """
    ulo = math.log(lo)
    uhi = math.log(hi)
    s_sum = min(s_sum, _BIG)

    def logp(u):
        t = -2.0 * u + (math.log(s_sum) if s_sum > 0 else -math.inf)
        if t > 700.0:
            return -math.inf
        decay = math.exp(t) if t > -700.0 else 0.0
        sp = max(2.0 * u, 0.0) + math.log1p(math.exp(-abs(2.0 * u)))
        return (1.0 - n_terms) * u - 0.5 * decay - sp

    u = min(max(math.log(tau0), ulo), uhi)
    lp0 = logp(u)
    if not math.isfinite(lp0):
        u = uhi
        lp0 = logp(u)
        if not math.isfinite(lp0):
            # mass concentrated at the upper bound beyond double precision
            return hi
    level = lp0 - rng.exponential(1.0)
    left, right = ulo, uhi
    for _ in range(max_shrink):
        u_new = rng.uniform(left, right)
        if logp(u_new) > level:
            return math.exp(u_new)
        if u_new < u:
            left = u_new
        else:
            right = u_new
    raise SamplerFailure("tau slice sampler failed to find the slice",
                         m=s_sum, v=n_terms)


def update_tau(state, config, rng):
    """Global-scale update from its truncated conditional."""
    with np.errstate(over="ignore"):
        lam_sq = np.exp(np.minimum(2.0 * state.xi, 700.0))
        s_sum = float(np.sum(state.beta * state.beta / (lam_sq * config.sigma2)))
    state.tau = sample_tau(state.n, s_sum, state.tau_lo, state.tau_hi,
                           state.tau, rng)


def _update_lambda_horseshoe(state, config, rng):
    like = state.beta * state.beta / (2.0 * state.tau**2 * config.sigma2)
    state.lambda_sq = rng.inverse_gamma(1.0, 1.0 / state.nu + like)
    state.nu = rng.inverse_gamma(1.0, 1.0 + 1.0 / state.lambda_sq)
    state.xi = 0.5 * np.log(state.lambda_sq)


def _update_lambda_horseshoe_plus(state, config, rng):
    like = state.beta * state.beta / (2.0 * state.tau**2 * config.sigma2)
    state.lambda_sq = rng.inverse_gamma(1.0, 1.0 / state.nu + like)
    state.nu = rng.inverse_gamma(1.0, 1.0 / state.lambda_sq + 1.0 / state.eta_sq)
    state.eta_sq = rng.inverse_gamma(1.0, 1.0 / state.nu + 1.0 / state.zeta)
    state.zeta = rng.inverse_gamma(1.0, 1.0 + 1.0 / state.eta_sq)
    state.xi = 0.5 * np.log(state.lambda_sq)


def sweep(state, config, rng):
    """One systematic scan in the fixed update order.

    Returns the mean xi proposals used, or nan when the mixing has no
    rejection step.
    """
    update_beta(state, config, rng)
    if config.mixing in ("log-laplace", "log-t"):
        stat = update_xi(state, config, rng)
        update_omega(state, config, rng)
        update_psi(state, config, rng)
    elif config.mixing == "horseshoe":
        _update_lambda_horseshoe(state, config, rng)
        stat = math.nan
    elif config.mixing == "hs-plus":
        _update_lambda_horseshoe_plus(state, config, rng)
        stat = math.nan
    else:  # ridge: lambda_j = 1 throughout
        stat = math.nan
    update_tau(state, config, rng)
    return stat


def draw_prior_state(n, config, rng):
    """Independent draw of the full latent state from the prior, plus data.

    Only the log-scale mixings have the scale-mixture hierarchy; used by
    joint-distribution (prior fixed-point) testing.
    """
    if config.mixing not in ("log-laplace", "log-t"):
        raise ValueError("prior draws are defined for the log-scale mixings")
    lo, hi = config.resolved_tau_bounds(n)
    if config.psi == "adapt":
        phi = float(rng.inverse_gamma(0.5, 1.0))
        psi_sq = float(rng.inverse_gamma(0.5, 1.0 / phi))
    else:
        phi = 1.0
        psi_sq = float(config.psi) ** 2
    if config.mixing == "log-laplace":
        omega_sq = rng.exponential(1.0, size=n)
    else:
        omega_sq = rng.inverse_gamma(0.5 * config.alpha, 0.5 * config.alpha,
                                     size=n)
    xi = rng.standard_normal(n) * np.sqrt(omega_sq * psi_sq)
    u = rng.uniform(math.atan(lo), math.atan(hi))
    tau = math.tan(u)
    log_sd = xi + math.log(tau) + 0.5 * math.log(config.sigma2)
    beta = rng.standard_normal(n) * np.exp(np.minimum(log_sd, 700.0))
    y = beta + math.sqrt(config.sigma2) * rng.standard_normal(n)
    state = GibbsState(y=y, beta=beta, xi=xi, omega_sq=omega_sq,
                       psi_sq=psi_sq, phi=phi, tau=tau, tau_lo=lo, tau_hi=hi)
    return state


def run_chain(y, config):
    """Run one chain and return its posterior summaries.

    Fully deterministic given ``(config.seed, config.chain_id)``. Sampler
    failures propagate with the sweep index attached.
    """
    config.validate()
    state = init_state(y, config)
    rng = RngStream(config.seed, config.chain_id)
    n = state.n
    sum_beta = np.zeros(n)
    sum_kappa = np.zeros(n)
    sum_psi = 0.0
    sum_tau = 0.0
    prop_sum = 0.0
    prop_count = 0
    kept = 0
    for it in range(config.iterations):
        try:
            stat = sweep(state, config, rng)
        except SamplerFailure as exc:
            raise SamplerFailure(f"sweep {it}: {exc}", m=exc.m, v=exc.v) from exc
        if not math.isnan(stat):
            prop_sum += stat
            prop_count += 1
        if it >= config.burnin and (it - config.burnin) % config.thin == 0:
            kept += 1
            sum_beta += state.beta
            sum_kappa += expit(-2.0 * (state.xi + math.log(state.tau)))
            sum_psi += math.sqrt(state.psi_sq)
            sum_tau += state.tau
    mean_kappa = sum_kappa / kept
    has_psi = config.mixing in ("log-laplace", "log-t")
    return ChainOutput(
        posterior_mean_beta=sum_beta / kept,
        posterior_mean_kappa=mean_kappa,
        selected=(1.0 - mean_kappa) > 0.5,
        posterior_mean_psi=sum_psi / kept if has_psi else math.nan,
        posterior_mean_tau=sum_tau / kept,
        acceptance_stats=prop_sum / prop_count if prop_count else math.nan,
        kept_draws=kept,
    )
