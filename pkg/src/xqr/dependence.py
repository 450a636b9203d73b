"""Bernstein-polynomial dependence structure.

The Pickands dependence function is a degree-kappa polynomial in Bernstein
form with coefficients beta (length kappa+1, beta_0 = beta_kappa = 1).  The
equivalent distribution-scale parameterization is a nondecreasing vector
eta (length kappa) in [0,1] summing to kappa/2, with endpoint masses
p0 = eta_0 and p1 = 1 - eta_{kappa-1}.  The two are linked by

    beta_{j+1} = beta_j + (2*eta_j - 1)/kappa,

which makes (1/2) A'' equal the Bernstein angular density h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import nbinom

__all__ = [
    "EtaCoefficients",
    "BetaCoefficients",
    "pickands_eval",
    "pickands_d1",
    "pickands_d2",
    "angular_density_eval",
    "eta_to_beta",
    "beta_to_eta",
    "validate_eta",
    "prior_logdensity_kappa",
    "negbin_size_prob",
    "p1_bounds",
    "sample_p0_p1_prior",
    "sample_eta_prior",
]

_SUM_TOL = 1e-10


@dataclass(frozen=True)
class EtaCoefficients:
    """Distribution-scale coefficients (eta_0, ..., eta_{kappa-1})."""

    kappa: int
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float))
        if self.kappa < 3:
            raise ValueError("kappa must be >= 3")
        if self.eta.size != self.kappa:
            raise ValueError(f"eta must have length kappa={self.kappa}")

    @property
    def p0(self) -> float:
        return float(self.eta[0])

    @property
    def p1(self) -> float:
        return float(1.0 - self.eta[-1])


@dataclass(frozen=True)
class BetaCoefficients:
    """Pickands Bernstein coefficients (beta_0, ..., beta_kappa)."""

    kappa: int
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if self.kappa < 3:
            raise ValueError("kappa must be >= 3")
        if self.beta.size != self.kappa + 1:
            raise ValueError(f"beta must have length kappa+1={self.kappa + 1}")


def _log_binom(n, j):
    return gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)


_BINOM_CACHE: dict[int, np.ndarray] = {}


def _binom_row(n: int) -> np.ndarray:
    row = _BINOM_CACHE.get(n)
    if row is None:
        row = np.exp(_log_binom(float(n), np.arange(n + 1, dtype=float)))
        _BINOM_CACHE[n] = row
    return row


def _bernstein_basis(v, n: int) -> np.ndarray:
    """Matrix of C(n,j) v^j (1-v)^(n-j), shape (len(v), n+1).

    Uses the 0*log(0)=0 convention so grid endpoints evaluate cleanly.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    j = np.arange(n + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = np.where(v > 0.0, np.log(np.where(v > 0.0, v, 1.0)), -np.inf)
        log1mv = np.where(v < 1.0, np.log(np.where(v < 1.0, 1.0 - v, 1.0)), -np.inf)
        logterm = j * logv[:, None] + (n - j) * log1mv[:, None]
        logterm = np.where((j == 0) & (v[:, None] == 0.0), (n - j) * log1mv[:, None], logterm)
        logterm = np.where((j == n) & (v[:, None] == 1.0), j * logv[:, None], logterm)
    return _binom_row(n) * np.where(np.isfinite(logterm), np.exp(logterm), 0.0)


def beta_density(v, a: float, b: float):
    """Beta(a, b) density with the endpoint 0*log(0)=0 convention."""
    v = np.asarray(v, dtype=float)
    lognorm = gammaln(a + b) - gammaln(a) - gammaln(b)
    with np.errstate(divide="ignore"):
        la = np.where((a == 1.0) & (v == 0.0), 0.0, (a - 1.0) * np.log(v))
        lb = np.where((b == 1.0) & (v == 1.0), 0.0, (b - 1.0) * np.log(1.0 - v))
    out = np.exp(lognorm + la + lb)
    return out if out.ndim else float(out)


def _check_v(v):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise ValueError("v must lie in [0,1]")
    return v


def pickands_eval(v, beta: BetaCoefficients):
    """Pickands dependence function A_kappa(v) in Bernstein form."""
    v = _check_v(v)
    out = _bernstein_basis(v, beta.kappa) @ beta.beta
    return out if np.ndim(v) else float(out[0])


def pickands_d1(v, beta: BetaCoefficients):
    """First derivative of A_kappa (degree kappa-1 Bernstein form)."""
    v = _check_v(v)
    d1 = beta.kappa * np.diff(beta.beta)
    out = _bernstein_basis(v, beta.kappa - 1) @ d1
    return out if np.ndim(v) else float(out[0])


def pickands_d2(v, beta: BetaCoefficients):
    """Second derivative of A_kappa (degree kappa-2 Bernstein form)."""
    v = _check_v(v)
    d2 = beta.kappa * (beta.kappa - 1) * np.diff(beta.beta, n=2)
    out = _bernstein_basis(v, beta.kappa - 2) @ d2
    return out if np.ndim(v) else float(out[0])


def angular_density_eval(w, eta: EtaCoefficients):
    """Angular density h_{kappa-1}(w) = sum_j (eta_{j+1}-eta_j) Be(w; j+1, kappa-j-1)."""
    report = validate_eta(eta)
    if report is not None:
        raise ValueError(f"invalid eta: {report}")
    w = _check_v(w)
    # Be(w; j+1, kappa-j-1) = (kappa-1) * C(kappa-2, j) w^j (1-w)^(kappa-2-j)
    diffs = np.diff(eta.eta)
    out = (eta.kappa - 1) * (_bernstein_basis(w, eta.kappa - 2) @ diffs)
    return out if np.ndim(w) else float(out[0])


def eta_to_beta(eta: EtaCoefficients) -> BetaCoefficients:
    """Map distribution-scale coefficients to Pickands Bernstein coefficients."""
    beta = np.empty(eta.kappa + 1)
    beta[0] = 1.0
    np.cumsum((2.0 * eta.eta - 1.0) / eta.kappa, out=beta[1:])
    beta[1:] += 1.0
    return BetaCoefficients(eta.kappa, beta)


def beta_to_eta(beta: BetaCoefficients) -> EtaCoefficients:
    """Inverse coefficient map eta_j = (1 + kappa*(beta_{j+1} - beta_j))/2."""
    eta = (1.0 + beta.kappa * np.diff(beta.beta)) / 2.0
    return EtaCoefficients(beta.kappa, eta)


def validate_eta(eta: EtaCoefficients, tol: float = _SUM_TOL) -> str | None:
    """Return None if eta is a valid coefficient vector, else the first violation."""
    e = eta.eta
    if np.any(e < 0.0) or np.any(e > 1.0):
        return "range: coefficients must lie in [0,1]"
    if np.any(np.diff(e) < 0.0):
        return "monotonicity: coefficients must be nondecreasing"
    s = float(e.sum())
    if abs(s - eta.kappa / 2.0) > max(tol, 1e-9 * eta.kappa):
        return f"sum: coefficients sum to {s}, expected kappa/2 = {eta.kappa / 2.0}"
    return None


def negbin_size_prob(m_nb: float, sigma_nb: float) -> tuple[float, float]:
    """Convert mean/variance to the (size, prob) negative-binomial parameters."""
    if not sigma_nb > m_nb > 0.0:
        raise ValueError("need variance > mean > 0")
    size = m_nb**2 / (sigma_nb - m_nb)
    prob = size / (size + m_nb)
    return size, prob


def prior_logdensity_kappa(kappa, m_nb: float, sigma_nb: float):
    """Log prior mass NegBin(kappa - 3 | mean m_nb, variance sigma_nb)."""
    kappa = np.asarray(kappa)
    if np.any(kappa < 3):
        raise ValueError("kappa must be >= 3")
    size, prob = negbin_size_prob(m_nb, sigma_nb)
    out = nbinom.logpmf(kappa - 3, size, prob)
    return out if out.ndim else float(out)


def p1_bounds(kappa: int, p0: float) -> tuple[float, float]:
    """Feasible (a, b) interval for p1 given kappa and p0."""
    a = max(0.0, (kappa - 1) * p0 - kappa / 2.0 + 1.0)
    b = (p0 + kappa / 2.0 - 1.0) / (kappa - 1)
    return a, b


def sample_p0_p1_prior(kappa: int, rng, p0_max: float = 0.5, p1_max: float | None = None):
    """Draw (p0, p1) from the endpoint-mass prior.

    Default: p0 ~ Unif(0, 1/2) and p1 | kappa, p0 ~ Unif(a, b) on the feasible
    interval.  The simulation experiments override both to Unif(0, 0.1) via
    p0_max = p1_max = 0.1 (independent draws, feasible for every kappa >= 3).
    """
    if kappa < 3:
        raise ValueError("kappa must be >= 3")
    p0 = rng.uniform(0.0, p0_max)
    a, b = p1_bounds(kappa, p0)
    if p1_max is not None:
        lo, hi = max(a, 0.0), min(b, p1_max)
        if hi <= lo:
            raise ValueError(f"infeasible endpoint-mass configuration (kappa={kappa}, p0={p0})")
        p1 = rng.uniform(lo, hi)
    else:
        p1 = rng.uniform(a, b)
    return p0, p1


def sample_eta_prior(kappa: int, p0: float, p1: float, rng, max_tries: int = 1000) -> EtaCoefficients:
    """Uniform draw of eta from the constrained polytope given (p0, p1, kappa).

    The kappa-2 interior coefficients lie in [p0, 1-p1] and must sum to
    kappa/2 - p0 - (1-p1).  The first kappa-3 of them are drawn as sorted
    uniforms on [p0, 1-p1]; the last is set by the sum constraint and the draw
    is accepted iff the full ordering holds, which yields an exactly uniform
    draw on the polytope.
    """
    if kappa < 3:
        raise ValueError("kappa must be >= 3")
    lo, hi = p0, 1.0 - p1
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError(f"infeasible endpoint masses p0={p0}, p1={p1}")
    target = kappa / 2.0 - p0 - (1.0 - p1)
    n_free = kappa - 3
    for _ in range(max_tries):
        interior = np.empty(kappa - 2)
        if n_free:
            interior[:-1] = np.sort(rng.uniform(lo, hi, size=n_free))
        interior[-1] = target - interior[:-1].sum()
        eta = np.concatenate(([p0], interior, [1.0 - p1]))
        cand = EtaCoefficients(kappa, eta)
        if validate_eta(cand) is None:
            return cand
    raise ValueError(f"no valid eta found for (kappa={kappa}, p0={p0}, p1={p1}) after {max_tries} tries")
