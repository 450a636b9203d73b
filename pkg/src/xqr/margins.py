"""GEV/GP marginal primitives for censored-tail inference.

All tail expressions are written through the bracket 1 + gamma*(y - mu)/sigma.
Heavy tails only (gamma > 0): at the lower support edge the bracket hits zero,
the censored CDF power degenerates to 0 and log-densities to -inf, which is the
"reject this proposal" signal used by the likelihoods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GevParams",
    "MarginalModel",
    "CensoredSample",
    "select_threshold",
    "gev_cdf_power",
    "gev_tail_logdensity",
    "marginal_transform",
    "extreme_quantile",
    "location_at",
]


@dataclass(frozen=True)
class GevParams:
    """Location, scale and tail index of one heavy-tailed margin."""

    mu: float
    sigma: float
    gamma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class MarginalModel:
    """Margin with quadratic covariate regression on the location parameter."""

    beta0: float
    beta1: float
    beta2: float
    sigma: float
    gamma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def location_at(self, z):
        return self.beta0 + self.beta1 * z + self.beta2 * z**2

    def at(self, z) -> GevParams:
        """Constant-location parameters at covariate value z."""
        return GevParams(float(self.location_at(z)), self.sigma, self.gamma)


@dataclass(frozen=True)
class CensoredSample:
    """Univariate sample with a global threshold and exceedance count."""

    values: np.ndarray
    threshold: float
    k: int
    n: int
    covariates: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.covariates is not None:
            cov = np.asarray(self.covariates, dtype=float)
            if cov.shape != self.values.shape:
                raise ValueError("covariates must align with values")
            object.__setattr__(self, "covariates", cov)
        if self.n != self.values.size:
            raise ValueError("n must equal the number of observations")
        if not 1 <= self.k < self.n:
            raise ValueError("need 1 <= k < n")

    @property
    def k_over_n(self) -> float:
        return self.k / self.n

    @classmethod
    def from_values(cls, values, level: float = 0.90, covariates=None) -> "CensoredSample":
        values = np.asarray(values, dtype=float)
        t, k = select_threshold(values, level)
        return cls(values=values, threshold=t, k=k, n=values.size, covariates=covariates)


def select_threshold(values, level):
    """Empirical threshold at `level`: the order statistic X_{n-k,n}.

    Returns (t, k) where k is the number of strict exceedances of t.  With
    tied data k counts strict exceedances only, so k can fall below
    n*(1-level).
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0,1), got {level}")
    n = values.size
    # nudge before flooring: n*(1-level) suffers from binary rounding (10*0.1 < 1)
    m = int(np.floor(n * (1.0 - level) + 1e-9))
    if m < 1:
        raise ValueError("level too high: no exceedances")
    t = float(np.sort(values)[n - m - 1])
    k = int(np.count_nonzero(values > t))
    if k < 1:
        raise ValueError("degenerate sample: no strict exceedances of the threshold")
    return t, k


def _bracket(y, theta: GevParams):
    return 1.0 + theta.gamma * (np.asarray(y, dtype=float) - theta.mu) / theta.sigma


def gev_cdf_power(y, theta: GevParams, k_over_n: float):
    """Censored-tail CDF power exp(-(k/n) * bracket_+^(-1/gamma)).

    Returns 0 at and below the lower support edge (the (.)_+ convention).
    """
    if not 0.0 < k_over_n < 1.0:
        raise ValueError("k_over_n must lie in (0,1)")
    b = _bracket(y, theta)
    out = np.where(b > 0.0, np.exp(-k_over_n * np.where(b > 0.0, b, 1.0) ** (-1.0 / theta.gamma)), 0.0)
    return out if out.ndim else float(out)


def gev_tail_logdensity(y, theta: GevParams, k_over_n: float):
    """log d/dy of gev_cdf_power; -inf outside the support."""
    if not 0.0 < k_over_n < 1.0:
        raise ValueError("k_over_n must lie in (0,1)")
    b = _bracket(y, theta)
    safe = np.where(b > 0.0, b, 1.0)
    out = np.where(
        b > 0.0,
        -k_over_n * safe ** (-1.0 / theta.gamma)
        + (-1.0 / theta.gamma - 1.0) * np.log(safe)
        - np.log(theta.sigma)
        + np.log(k_over_n),
        -np.inf,
    )
    return out if out.ndim else float(out)


def marginal_transform(y, theta: GevParams, k_over_n: float):
    """Exceedance-scale transform z = (k/n) * bracket_+^(-1/gamma).

    Strictly decreasing in y; +inf at and below the lower support edge.
    """
    if not 0.0 < k_over_n < 1.0:
        raise ValueError("k_over_n must lie in (0,1)")
    b = _bracket(y, theta)
    out = np.where(b > 0.0, k_over_n * np.where(b > 0.0, b, 1.0) ** (-1.0 / theta.gamma), np.inf)
    return out if out.ndim else float(out)


def extreme_quantile(p, theta: GevParams, k: int, n: int):
    """Extrapolated quantile mu + sigma*((k/(n p))^gamma - 1)/gamma."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("p must lie in (0,1)")
    if theta.gamma == 0.0:
        raise ValueError("gamma must be nonzero")
    out = theta.mu + theta.sigma * ((k / (n * p)) ** theta.gamma - 1.0) / theta.gamma
    return out if out.ndim else float(out)


def location_at(model: MarginalModel, z):
    """Quadratic location regression beta0 + beta1*z + beta2*z^2."""
    return model.location_at(np.asarray(z, dtype=float) if np.ndim(z) else z)
