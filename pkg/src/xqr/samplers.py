"""Adaptive random-walk Metropolis and the trans-dimensional dependence move.

Marginal blocks use a Gaussian random walk whose covariance is adapted from
the full chain history and whose global scaling follows a Robbins-Monro
recursion targeting an acceptance rate of 0.234.  The dependence block
proposes a new polynomial degree (+/-1, forced 3->4) and redraws the
coefficient vector from its conditional prior, so only the degree prior,
the Hastings correction for the asymmetric degree proposal and the
likelihood ratio enter the acceptance probability.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .dependence import (
    EtaCoefficients,
    eta_to_beta,
    prior_logdensity_kappa,
    sample_eta_prior,
    sample_p0_p1_prior,
)
from .likelihoods import BivariateSample, DependenceParams, bivariate_censored_loglik, univariate_censored_loglik
from .margins import CensoredSample, GevParams, MarginalModel

logger = logging.getLogger(__name__)

__all__ = [
    "RwmhState",
    "ChainConfig",
    "PosteriorChain",
    "robbins_monro_steplength",
    "rwmh_step",
    "transdim_step",
    "make_marginal_logprior",
    "run_univariate_chain",
    "run_bivariate_chain",
]


def robbins_monro_steplength(pi_star: float) -> float:
    """Steplength c = sqrt(2 pi) exp(z0^2/2) / (2 z0) with z0 = -Phi^{-1}(pi*/2)."""
    z0 = -norm.ppf(pi_star / 2.0)
    return float(np.sqrt(2.0 * np.pi) * np.exp(z0**2 / 2.0) / (2.0 * z0))


@dataclass
class RwmhState:
    """State of one adaptive Gaussian random-walk block."""

    theta: np.ndarray
    logpost: float
    tau: float
    j: int = 0
    accept_count: int = 0
    last_accept_prob: float = 0.0
    mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    scatter: np.ndarray = field(default=None)  # type: ignore[assignment]
    Sigma: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        d = self.theta.size
        if self.mean is None:
            self.mean = np.zeros(d)
        if self.scatter is None:
            self.scatter = np.zeros((d, d))
        if self.Sigma is None:
            self.Sigma = np.eye(d)

    @classmethod
    def initial(cls, theta, logpost: float, tau0: float = 1.0) -> "RwmhState":
        return cls(theta=np.asarray(theta, dtype=float), logpost=float(logpost), tau=float(tau0))


@dataclass(frozen=True)
class ChainConfig:
    """Run-length, adaptation and prior settings for one chain."""

    iterations: int = 50_000
    burn_in: int = 30_000
    seed: int = 0
    pi_star: float = 0.234
    tau0: float = 1.0
    prior: str = "A"
    m_nb: float = 3.2
    sigma_nb: float = 4.48
    p0_max: float = 0.1
    p1_max: float | None = 0.1
    kappa_max: int = 40
    paper_exact_c: bool = False

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")


@dataclass
class PosteriorChain:
    """Iteration-indexed draws plus adaptation traces.

    Marginal parameter draws are stored in sampling coordinates
    (locations..., log sigma, gamma); `theta2`, `kappa` and `eta` are None for
    univariate chains.  `eta` is a ragged list because the polynomial degree
    changes along the chain.
    """

    theta1: np.ndarray
    tau1: np.ndarray
    accept1: np.ndarray
    burn_in: int
    k: tuple[int, ...]
    n: int
    theta2: np.ndarray | None = None
    tau2: np.ndarray | None = None
    accept2: np.ndarray | None = None
    kappa: np.ndarray | None = None
    eta: list[np.ndarray] | None = None
    accept3: np.ndarray | None = None

    @property
    def is_bivariate(self) -> bool:
        return self.theta2 is not None

    def retained(self) -> np.ndarray:
        return np.arange(self.burn_in, self.theta1.shape[0])

    def marginal_gev(self, draw: int, margin: int = 1, covariate=None) -> GevParams:
        x = (self.theta1 if margin == 1 else self.theta2)[draw]
        if x.size == 3:
            return GevParams(x[0], float(np.exp(x[1])), x[2])
        model = MarginalModel(x[0], x[1], x[2], float(np.exp(x[3])), x[4])
        if covariate is None:
            raise ValueError("regression draw requires a covariate value")
        return model.at(covariate)


def rwmh_step(state: RwmhState, loglik, logprior, rng) -> RwmhState:
    """One adaptive Gaussian RWMH update.

    The proposal covariance is tau * Sigma; Sigma then follows the
    two-regime history update and log tau the Robbins-Monro recursion,
    on every iteration including rejections.
    """
    if not np.isfinite(state.logpost):
        raise ValueError("current state has non-finite log posterior")
    d = state.theta.size
    chol = np.linalg.cholesky(state.tau * state.Sigma)
    proposal = state.theta + chol @ rng.standard_normal(d)

    lp_prior = logprior(proposal)
    if np.isfinite(lp_prior):
        lp_prop = loglik(proposal) + lp_prior
    else:
        lp_prop = -np.inf
    with np.errstate(over="ignore"):
        accept_prob = min(1.0, np.exp(lp_prop - state.logpost)) if np.isfinite(lp_prop) else 0.0

    if rng.uniform() < accept_prob:
        state.theta = proposal
        state.logpost = float(lp_prop)
        state.accept_count += 1
    state.last_accept_prob = accept_prob

    # history update over theta^(1..j) (Welford), then the scaling update
    state.j += 1
    j = state.j
    delta = state.theta - state.mean
    state.mean = state.mean + delta / j
    state.scatter = state.scatter + np.outer(delta, state.theta - state.mean)
    if j <= 100:
        state.Sigma = (1.0 + state.tau**2 / j) * np.eye(d)
    else:
        state.Sigma = state.scatter / (j - 1) + (state.tau**2 / j) * np.eye(d)
    # diminishing steplength c/sqrt(j): vanishing adaptation (no stationary
    # bias from a perpetually moving scale) that still tracks the evolving
    # covariance estimate fast enough to hold the acceptance target
    c = robbins_monro_steplength_cached(d, state) / np.sqrt(j)
    state.tau = float(np.exp(np.log(state.tau) + c * (accept_prob - state.pi_star_)))
    return state


# pi_star and steplength ride along on the state so rwmh_step stays a
# two-argument-function-friendly kernel
def _attach_target(state: RwmhState, pi_star: float) -> RwmhState:
    state.pi_star_ = pi_star  # type: ignore[attr-defined]
    state.c_ = robbins_monro_steplength(pi_star)  # type: ignore[attr-defined]
    return state


def robbins_monro_steplength_cached(d: int, state: RwmhState) -> float:
    return state.c_  # type: ignore[attr-defined]


@dataclass
class DependenceState:
    kappa: int
    eta: EtaCoefficients
    loglik: float


def transdim_step(
    state: DependenceState,
    loglik,
    rng,
    *,
    m_nb: float,
    sigma_nb: float,
    p0_max: float = 0.1,
    p1_max: float | None = 0.1,
    kappa_max: int = 40,
    paper_exact_c: bool = False,
) -> tuple[DependenceState, bool]:
    """One trans-dimensional update of (kappa, eta).

    Proposes kappa' (always 4 from 3, otherwise +/-1 with equal probability)
    and redraws eta' from the conditional prior at kappa', so the
    eta-proposal terms cancel.  Returns (new state, accepted flag).
    """
    kappa = state.kappa
    if kappa == 3:
        kappa_new = 4
    else:
        kappa_new = kappa + (1 if rng.uniform() < 0.5 else -1)
    if kappa_new > kappa_max:
        logger.warning("rejecting proposed kappa=%d above cap %d", kappa_new, kappa_max)
        return state, False

    try:
        p0, p1 = sample_p0_p1_prior(kappa_new, rng, p0_max=p0_max, p1_max=p1_max)
        eta_new = sample_eta_prior(kappa_new, p0, p1, rng)
    except ValueError:
        return state, False

    if paper_exact_c:
        log_c = np.log(0.5) if kappa == 3 else 0.0
    else:
        # full Hastings correction q(kappa|kappa') / q(kappa'|kappa)
        if kappa == 3 and kappa_new == 4:
            log_c = np.log(0.5)
        elif kappa == 4 and kappa_new == 3:
            log_c = np.log(2.0)
        else:
            log_c = 0.0

    ll_new = loglik(eta_new)
    log_ratio = (
        log_c
        + prior_logdensity_kappa(kappa_new, m_nb, sigma_nb)
        - prior_logdensity_kappa(kappa, m_nb, sigma_nb)
        + ll_new
        - state.loglik
    )
    if np.log(rng.uniform()) < log_ratio:
        return DependenceState(kappa_new, eta_new, float(ll_new)), True
    return state, False


def make_marginal_logprior(kind: str, n_loc: int = 1):
    """Log prior over sampling coordinates (locations..., log sigma, gamma).

    A: flat on every coordinate (improper, Pi(theta) ~ 1/sigma on the sigma
       scale); B: strongly informative normals; C: weakly informative normals.
    All are truncated to gamma > 0.
    """
    kind = kind.upper()
    if kind == "A":

        def logprior(x):
            return 0.0 if x[-1] > 0.0 else -np.inf

    elif kind in ("B", "C"):
        loc_sd, s_sd, g_sd = (2.0, 1.0 / 3.0, 1.5) if kind == "B" else (5.0, 5.0, 6.0)

        def logprior(x):
            if x[-1] <= 0.0:
                return -np.inf
            return float(
                -0.5 * np.sum(x[:n_loc] ** 2) / loc_sd**2
                - 0.5 * x[-2] ** 2 / s_sd**2
                - 0.5 * x[-1] ** 2 / g_sd**2
            )

    else:
        raise ValueError(f"unknown marginal prior {kind!r} (expected A, B or C)")
    return logprior


def _initial_marginal_theta(values, threshold, covariates=None):
    if covariates is not None:
        # least-squares quadratic location fit; scale from its residuals
        coef = np.polynomial.polynomial.polyfit(covariates, values, 2)
        resid = values - np.polynomial.polynomial.polyval(covariates, coef)
        sigma0 = max(float(np.std(resid)), 1e-8)
        return np.array([coef[0], coef[1], coef[2], np.log(sigma0), 0.5])
    exc = values[values > threshold]
    sigma0 = float(np.std(exc)) if exc.size > 1 else 1.0
    return np.array([threshold, np.log(max(sigma0, 1e-8)), 0.5])


def _finite_start(theta0, loglik, logprior, max_doublings: int = 12):
    """Widen the initial scale until the posterior is finite at the start."""
    for _ in range(max_doublings):
        lp = loglik(theta0) + logprior(theta0)
        if np.isfinite(lp):
            return theta0, float(lp)
        theta0 = theta0.copy()
        theta0[-2] += np.log(2.0)
    raise ValueError("non-finite log posterior at the initial state")


def _theta_from_coords(x) -> GevParams | MarginalModel | None:
    """Parameters at sampling coordinates; None when exp(log sigma) underflows."""
    sigma = float(np.exp(x[-2]))
    if not sigma > 0.0:
        return None
    if x.size == 3:
        return GevParams(x[0], sigma, x[2])
    return MarginalModel(x[0], x[1], x[2], sigma, x[4])


def run_univariate_chain(
    sample: CensoredSample,
    config: ChainConfig,
    rng=None,
    loglik=None,
) -> PosteriorChain:
    """Adaptive RWMH over (mu | regression coefficients, log sigma, gamma).

    `loglik` may be overridden (e.g. with a flat target) for sampler
    diagnostics; by default it is the univariate censored likelihood.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    regression = sample.covariates is not None
    if loglik is None:

        def loglik(x):
            theta = _theta_from_coords(x)
            if theta is None:
                return -np.inf
            return univariate_censored_loglik(sample, theta)

    logprior = make_marginal_logprior(config.prior, n_loc=3 if regression else 1)
    theta0 = _initial_marginal_theta(sample.values, sample.threshold, sample.covariates)
    theta0, lp0 = _finite_start(theta0, loglik, logprior)
    state = _attach_target(RwmhState.initial(theta0, lp0, config.tau0), config.pi_star)

    M = config.iterations
    draws = np.empty((M, theta0.size))
    tau = np.empty(M)
    accept = np.zeros(M, dtype=bool)
    for j in range(M):
        before = state.accept_count
        state = rwmh_step(state, loglik, logprior, rng)
        draws[j] = state.theta
        tau[j] = state.tau
        accept[j] = state.accept_count > before
    return PosteriorChain(
        theta1=draws,
        tau1=tau,
        accept1=accept,
        burn_in=config.burn_in,
        k=(sample.k,),
        n=sample.n,
    )


def run_bivariate_chain(sample: BivariateSample, config: ChainConfig, rng=None) -> PosteriorChain:
    """Trans-dimensional MCMC: two marginal RWMH blocks, then the dependence move."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    regression = sample.covariates is not None
    n_loc = 3 if regression else 1
    logprior = make_marginal_logprior(config.prior, n_loc=n_loc)

    def full_loglik(x1, x2, eta):
        th1, th2 = _theta_from_coords(x1), _theta_from_coords(x2)
        if th1 is None or th2 is None:
            return -np.inf
        params = DependenceParams(th1, th2, eta)
        return bivariate_censored_loglik(sample, params)

    kappa0 = 3 + int(round(config.m_nb))
    p0, p1 = sample_p0_p1_prior(kappa0, rng, p0_max=config.p0_max, p1_max=config.p1_max)
    eta0 = sample_eta_prior(kappa0, p0, p1, rng)
    x1 = _initial_marginal_theta(sample.pairs[:, 0], sample.thresholds[0], sample.covariates)
    x2 = _initial_marginal_theta(sample.pairs[:, 1], sample.thresholds[1], sample.covariates)

    ll0 = full_loglik(x1, x2, eta0)
    for _ in range(12):
        if np.isfinite(ll0):
            break
        x1[-2] += np.log(2.0)
        x2[-2] += np.log(2.0)
        ll0 = full_loglik(x1, x2, eta0)
    if not np.isfinite(ll0):
        raise ValueError("non-finite likelihood at the initial state")
    s1 = _attach_target(RwmhState.initial(x1, ll0 + logprior(x1), config.tau0), config.pi_star)
    s2 = _attach_target(RwmhState.initial(x2, ll0 + logprior(x2), config.tau0), config.pi_star)
    dep = DependenceState(kappa0, eta0, ll0)

    M = config.iterations
    d = x1.size
    draws1 = np.empty((M, d))
    draws2 = np.empty((M, d))
    tau1 = np.empty(M)
    tau2 = np.empty(M)
    acc1 = np.zeros(M, dtype=bool)
    acc2 = np.zeros(M, dtype=bool)
    acc3 = np.zeros(M, dtype=bool)
    kappas = np.empty(M, dtype=int)
    etas: list[np.ndarray] = []

    for j in range(M):
        # Step 1: margin 1, dependence and margin 2 held fixed
        def ll1(x):
            return full_loglik(x, s2.theta, dep.eta)

        before = s1.accept_count
        s1 = rwmh_step(s1, ll1, logprior, rng)
        acc1[j] = s1.accept_count > before

        # Step 2: margin 2
        def ll2(x):
            return full_loglik(s1.theta, x, dep.eta)

        before = s2.accept_count
        s2 = rwmh_step(s2, ll2, logprior, rng)
        acc2[j] = s2.accept_count > before

        # Step 3: dependence structure; refresh its cached likelihood first
        dep.loglik = s2.logpost - logprior(s2.theta)

        def lldep(eta):
            return full_loglik(s1.theta, s2.theta, eta)

        dep, accepted = transdim_step(
            dep,
            lldep,
            rng,
            m_nb=config.m_nb,
            sigma_nb=config.sigma_nb,
            p0_max=config.p0_max,
            p1_max=config.p1_max,
            kappa_max=config.kappa_max,
            paper_exact_c=config.paper_exact_c,
        )
        acc3[j] = accepted
        if accepted:
            # marginal states cache loglik + logprior; the likelihood moved under them
            s1.logpost = dep.loglik + logprior(s1.theta)
            s2.logpost = dep.loglik + logprior(s2.theta)

        draws1[j] = s1.theta
        draws2[j] = s2.theta
        tau1[j] = s1.tau
        tau2[j] = s2.tau
        kappas[j] = dep.kappa
        etas.append(dep.eta.eta.copy())

    return PosteriorChain(
        theta1=draws1,
        tau1=tau1,
        accept1=acc1,
        burn_in=config.burn_in,
        k=sample.k,
        n=sample.n,
        theta2=draws2,
        tau2=tau2,
        accept2=acc2,
        kappa=kappas,
        eta=etas,
        accept3=acc3,
    )
