"""Censored log-likelihoods for the univariate and bivariate tail models.

Everything is evaluated in log space: the marginal transforms z_i shrink like
p ~ 1e-4 in the extrapolation regime and their products underflow otherwise.
Out-of-support exceedances (bracket <= 0 under a proposed parameter point)
yield -inf, which the samplers treat as an automatic rejection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dependence import (
    BetaCoefficients,
    EtaCoefficients,
    eta_to_beta,
    pickands_d1,
    pickands_d2,
    pickands_eval,
)
from .margins import CensoredSample, GevParams, MarginalModel

__all__ = [
    "BivariateSample",
    "DependenceParams",
    "univariate_censored_loglik",
    "bivariate_censored_loglik",
]

_Z_FLOOR = 1e-300  # guards 0/0 when both transforms underflow


@dataclass(frozen=True)
class BivariateSample:
    """Paired observations with per-margin thresholds and exceedance counts."""

    pairs: np.ndarray
    thresholds: tuple[float, float]
    k: tuple[int, int]
    n: int
    covariates: np.ndarray | None = None

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("pairs must be an (n, 2) array")
        object.__setattr__(self, "pairs", pairs)
        if self.n != pairs.shape[0]:
            raise ValueError("n must equal the number of pairs")
        if self.covariates is not None:
            cov = np.asarray(self.covariates, dtype=float)
            if cov.shape != (self.n,):
                raise ValueError("covariates must be a length-n vector")
            object.__setattr__(self, "covariates", cov)

    @classmethod
    def from_pairs(cls, pairs, level: float = 0.90, covariates=None) -> "BivariateSample":
        from .margins import select_threshold

        pairs = np.asarray(pairs, dtype=float)
        t1, k1 = select_threshold(pairs[:, 0], level)
        t2, k2 = select_threshold(pairs[:, 1], level)
        return cls(pairs=pairs, thresholds=(t1, t2), k=(k1, k2), n=pairs.shape[0], covariates=covariates)


@dataclass(frozen=True)
class DependenceParams:
    """Full bivariate parameter point: two margins plus the dependence structure."""

    theta1: GevParams | MarginalModel
    theta2: GevParams | MarginalModel
    eta: EtaCoefficients
    beta: BetaCoefficients = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", eta_to_beta(self.eta))


def _theta_fields(theta, covariates, n):
    """Per-observation (mu, sigma, gamma); mu is scalar without regression."""
    if isinstance(theta, MarginalModel):
        if covariates is None:
            raise ValueError("MarginalModel margin requires covariates")
        return theta.location_at(covariates), theta.sigma, theta.gamma
    return theta.mu, theta.sigma, theta.gamma


def univariate_censored_loglik(sample: CensoredSample, theta: GevParams | MarginalModel) -> float:
    """Censored log-likelihood: below-threshold mass plus exceedance densities."""
    mu, sigma, gamma = _theta_fields(theta, sample.covariates, sample.n)
    if sigma <= 0.0 or gamma <= 0.0:
        return -np.inf
    kn = sample.k_over_n
    t = sample.threshold
    y = sample.values
    exceed = y > t

    if np.ndim(mu) == 0:
        b_t = 1.0 + gamma * (t - mu) / sigma
        if b_t <= 0.0:
            return -np.inf  # threshold outside support: censored mass is zero
        ll = int(np.count_nonzero(~exceed)) * float(-kn * b_t ** (-1.0 / gamma))
    else:
        b_t = 1.0 + gamma * (t - mu[~exceed]) / sigma
        if np.any(b_t <= 0.0):
            return -np.inf
        ll = float(np.sum(-kn * b_t ** (-1.0 / gamma)))

    mu_e = mu if np.ndim(mu) == 0 else mu[exceed]
    b = 1.0 + gamma * (y[exceed] - mu_e) / sigma
    if np.any(b <= 0.0):
        return -np.inf
    ll += float(
        np.sum(-kn * b ** (-1.0 / gamma) + (-1.0 / gamma - 1.0) * np.log(b)) + b.size * (np.log(kn) - np.log(sigma))
    )
    return ll


def _z_and_logjac(y, mu, sigma, gamma, kn):
    """Marginal transform z(y) and log|dz/dy|; (nan, nan) rows mark out-of-support."""
    b = 1.0 + gamma * (y - mu) / sigma
    ok = b > 0.0
    safe = np.where(ok, b, 1.0)
    z = kn * safe ** (-1.0 / gamma)
    with np.errstate(divide="ignore"):  # z may underflow to 0; -inf logjac rejects
        logjac = np.log(z) - np.log(sigma) - np.log(safe)
    return np.where(ok, z, np.nan), np.where(ok, logjac, np.nan)


def _pickands_terms(z1, z2, beta: BetaCoefficients):
    """(L, A - v A', A + (1-v) A', v(1-v) A'' / (z1+z2)) at v = z2/(z1+z2)."""
    z1 = np.maximum(z1, _Z_FLOOR)
    z2 = np.maximum(z2, _Z_FLOOR)
    s = z1 + z2
    v = z2 / s
    a = pickands_eval(v, beta)
    a1 = pickands_d1(v, beta)
    a2 = pickands_d2(v, beta)
    L = s * a
    return L, a - v * a1, a + (1.0 - v) * a1, v * (1.0 - v) * a2 / s


def bivariate_censored_loglik(sample: BivariateSample, params: DependenceParams) -> float:
    """Four-branch censored log-likelihood of the bivariate tail model."""
    n = sample.n
    mu1, sigma1, gamma1 = _theta_fields(params.theta1, sample.covariates, n)
    mu2, sigma2, gamma2 = _theta_fields(params.theta2, sample.covariates, n)
    if min(sigma1, sigma2) <= 0.0 or min(gamma1, gamma2) <= 0.0:
        return -np.inf
    kn1 = sample.k[0] / n
    kn2 = sample.k[1] / n
    t1, t2 = sample.thresholds
    beta = params.beta

    y1 = sample.pairs[:, 0]
    y2 = sample.pairs[:, 1]
    e1 = y1 > t1
    e2 = y2 > t2
    const_mu = np.ndim(mu1) == 0 and np.ndim(mu2) == 0

    def mu_at(mu, mask):
        return mu if np.ndim(mu) == 0 else mu[mask]

    ll = 0.0

    # both censored
    mask = ~e1 & ~e2
    if const_mu:
        zt1, _ = _z_and_logjac(np.float64(t1), mu1, sigma1, gamma1, kn1)
        zt2, _ = _z_and_logjac(np.float64(t2), mu2, sigma2, gamma2, kn2)
        if np.isnan(zt1) or np.isnan(zt2):
            return -np.inf  # threshold outside support: censored mass vanishes
        La, _, _, _ = _pickands_terms(np.float64(zt1), np.float64(zt2), beta)
        ll -= int(np.count_nonzero(mask)) * float(La)
    else:
        zt1, _ = _z_and_logjac(t1, mu_at(mu1, mask), sigma1, gamma1, kn1)
        zt2, _ = _z_and_logjac(t2, mu_at(mu2, mask), sigma2, gamma2, kn2)
        if np.any(np.isnan(zt1)) or np.any(np.isnan(zt2)):
            return -np.inf
        La, _, _, _ = _pickands_terms(zt1, zt2, beta)
        ll -= float(np.sum(La))

    # margin 1 exceeds only
    mask = e1 & ~e2
    if np.any(mask):
        z1, j1 = _z_and_logjac(y1[mask], mu_at(mu1, mask), sigma1, gamma1, kn1)
        z2, _ = _z_and_logjac(t2, mu_at(mu2, mask), sigma2, gamma2, kn2)
        if np.any(np.isnan(z1)) or np.any(np.isnan(z2)):
            return -np.inf
        z2 = np.broadcast_to(z2, z1.shape)
        L, L1, _, _ = _pickands_terms(z1, z2, beta)
        if np.any(L1 <= 0.0):
            return -np.inf
        ll += float(np.sum(j1 - L + np.log(L1)))

    # margin 2 exceeds only
    mask = ~e1 & e2
    if np.any(mask):
        z1, _ = _z_and_logjac(t1, mu_at(mu1, mask), sigma1, gamma1, kn1)
        z2, j2 = _z_and_logjac(y2[mask], mu_at(mu2, mask), sigma2, gamma2, kn2)
        if np.any(np.isnan(z1)) or np.any(np.isnan(z2)):
            return -np.inf
        z1 = np.broadcast_to(z1, z2.shape)
        L, _, L2, _ = _pickands_terms(z1, z2, beta)
        if np.any(L2 <= 0.0):
            return -np.inf
        ll += float(np.sum(j2 - L + np.log(L2)))

    # both exceed
    mask = e1 & e2
    if np.any(mask):
        z1, j1 = _z_and_logjac(y1[mask], mu_at(mu1, mask), sigma1, gamma1, kn1)
        z2, j2 = _z_and_logjac(y2[mask], mu_at(mu2, mask), sigma2, gamma2, kn2)
        if np.any(np.isnan(z1)) or np.any(np.isnan(z2)):
            return -np.inf
        L, L1, L2, L12 = _pickands_terms(z1, z2, beta)
        dens = L1 * L2 + L12  # L1*L2 - L^(z1,z2), with L^(z1,z2) = -v(1-v)A''/(z1+z2)
        if np.any(dens <= 0.0):
            return -np.inf
        ll += float(np.sum(j1 + j2 - L + np.log(dens)))

    return ll
