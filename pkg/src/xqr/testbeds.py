"""Simulation testbeds with closed-form truths.

Univariate: Frechet, Half-t, inverse-Gamma (tail indices 3, 3, 2).
Bivariate (positive quadrant): Cauchy, truncated-t, asymmetric, clover,
each with its exact angular density h, angular basic density q* and marginal
quantile function, used as oracles for the estimation pipeline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad, trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, fsolve
from scipy.special import betaln
from scipy.stats import invgamma, multivariate_t
from scipy.stats import t as student_t

from .margins import GevParams

logger = logging.getLogger(__name__)

__all__ = [
    "Frechet",
    "HalfT",
    "InvGamma",
    "Cauchy2",
    "TruncT2",
    "Asymmetric",
    "Clover",
    "TESTBEDS",
    "make_testbed",
    "true_univariate_quantile",
    "tail_equivalent_margin",
    "extremal_t_exponent",
]


# ---------------------------------------------------------------------------
# univariate testbeds


@dataclass(frozen=True)
class Frechet:
    """Frechet(location psi, scale varsigma, shape xi); tail index 1/xi."""

    psi: float = 3.0
    varsigma: float = 1.0
    xi: float = 1.0 / 3.0
    name = "frechet"
    is_bivariate = False

    @property
    def gamma(self) -> float:
        return 1.0 / self.xi

    def sample(self, n: int, rng) -> np.ndarray:
        return self.psi + self.varsigma * (-np.log(rng.uniform(size=n))) ** (-1.0 / self.xi)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > self.psi, np.exp(-((y - self.psi) / self.varsigma) ** -self.xi), 0.0)

    def quantile(self, p: float) -> float:
        """Quantile with exceedance probability p, i.e. F^{-1}(1-p)."""
        return self.psi + self.varsigma * (-np.log1p(-p)) ** (-1.0 / self.xi)


@dataclass(frozen=True)
class HalfT:
    """|T| for T Student-t with the given scale and degrees of freedom."""

    sigma: float = 1.0
    nu: float = 1.0 / 3.0
    name = "half_t"
    is_bivariate = False

    @property
    def gamma(self) -> float:
        return 1.0 / self.nu

    def sample(self, n: int, rng) -> np.ndarray:
        return np.abs(student_t.rvs(self.nu, scale=self.sigma, size=n, random_state=rng))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0.0, 2.0 * student_t.cdf(y / self.sigma, self.nu) - 1.0, 0.0)

    def quantile(self, p: float) -> float:
        return float(self.sigma * student_t.ppf(1.0 - p / 2.0, self.nu))


@dataclass(frozen=True)
class InvGamma:
    """Inverse gamma with shape eta and scale lam; tail index 1/eta."""

    eta: float = 0.5
    lam: float = 1.0
    name = "inv_gamma"
    is_bivariate = False

    @property
    def gamma(self) -> float:
        return 1.0 / self.eta

    def sample(self, n: int, rng) -> np.ndarray:
        return invgamma.rvs(self.eta, scale=self.lam, size=n, random_state=rng)

    def cdf(self, y):
        return invgamma.cdf(y, self.eta, scale=self.lam)

    def quantile(self, p: float) -> float:
        return float(invgamma.isf(p, self.eta, scale=self.lam))


# ---------------------------------------------------------------------------
# bivariate testbeds


@dataclass(frozen=True)
class Cauchy2:
    """Componentwise |.| of a spherical bivariate t(1) draw."""

    name = "cauchy2"
    is_bivariate = True
    gammas = (1.0, 1.0)

    def sample(self, n: int, rng) -> np.ndarray:
        z = rng.standard_normal((n, 2))
        r = np.sqrt(rng.chisquare(1.0, size=n))
        return np.abs(z / r[:, None])

    def pdf(self, x1, x2):
        return 2.0 / (np.pi * (1.0 + np.asarray(x1) ** 2 + np.asarray(x2) ** 2) ** 1.5)

    def angular_density(self, w):
        w = np.asarray(w, dtype=float)
        return 0.5 * (w**2 + (1.0 - w) ** 2) ** -1.5

    def q_star(self, w):
        w = np.asarray(w, dtype=float)
        return np.sqrt(w**2 + (1.0 - w) ** 2)

    def margin_quantile(self, p: float, margin: int = 1) -> float:
        # each margin is half-Cauchy
        return float(np.tan(np.pi * (1.0 - p) / 2.0))


@dataclass(frozen=True)
class TruncT2:
    """Centred bivariate Student-t truncated to the positive quadrant."""

    nu: float = 2.0
    rho: float = 0.5
    name = "trunc_t2"
    is_bivariate = True

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError("need |rho| < 1")

    @property
    def gammas(self) -> tuple[float, float]:
        return (1.0 / self.nu, 1.0 / self.nu)

    @property
    def quadrant_prob(self) -> float:
        return 0.25 + np.arcsin(self.rho) / (2.0 * np.pi)

    @property
    def _slope(self) -> float:
        return float(np.sqrt((self.nu + 1.0) / (1.0 - self.rho**2)))

    @property
    def _denom(self) -> float:
        return float(1.0 - student_t.cdf(-self.rho * self._slope, self.nu + 1.0))

    def sample(self, n: int, rng, max_rounds: int = 200) -> np.ndarray:
        chol = np.linalg.cholesky(np.array([[1.0, self.rho], [self.rho, 1.0]]))
        out = np.empty((0, 2))
        # acceptance rate is the quadrant probability (>= 1/4)
        batch = int(np.ceil(1.25 * n / self.quadrant_prob))
        for _ in range(max_rounds):
            z = rng.standard_normal((batch, 2)) @ chol.T
            z /= np.sqrt(rng.chisquare(self.nu, size=batch) / self.nu)[:, None]
            keep = z[(z > 0.0).all(axis=1)]
            out = np.vstack([out, keep])
            if out.shape[0] >= n:
                return out[:n]
        raise RuntimeError("rejection sampler exhausted its retry budget")

    def pdf(self, x1, x2):
        pts = np.stack(np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float)), axis=-1)
        dens = multivariate_t.pdf(pts, loc=[0.0, 0.0], shape=[[1.0, self.rho], [self.rho, 1.0]], df=self.nu)
        inside = (pts[..., 0] > 0.0) & (pts[..., 1] > 0.0)
        return np.where(inside, dens, 0.0) / self.quadrant_prob

    def angular_density(self, w):
        w = np.asarray(w, dtype=float)
        nu, a = self.nu, self._slope
        ratio = (1.0 - w) / w
        t_arg = a * (ratio ** (1.0 / nu) - self.rho)
        return (
            a
            / (2.0 * nu * w**3)
            * ratio ** ((1.0 - nu) / nu)
            * student_t.pdf(t_arg, nu + 1.0)
            / self._denom
        )

    def q_star(self, w):
        w = np.asarray(w, dtype=float)
        nu, a = self.nu, self._slope
        t_arg = a * (((1.0 - w) / w) ** (1.0 / nu) - self.rho)
        base = nu * w ** -(1.0 + 2.0 / nu) * a * student_t.pdf(t_arg, nu + 1.0) / self._denom
        return base ** (-nu / (nu + 2.0))

    def margin_cdf(self, x: float) -> float:
        """P(X1 <= x): integrate the conditional positive-quadrant probability."""
        nu, rho = self.nu, self.rho

        def integrand(z):
            scale = np.sqrt((nu + z**2) * (1.0 - rho**2) / (nu + 1.0))
            return student_t.pdf(z, nu) * student_t.cdf(rho * z / scale, nu + 1.0)

        val, _ = quad(integrand, 0.0, x, limit=200)
        return val / self.quadrant_prob

    def margin_quantile(self, p: float, margin: int = 1) -> float:
        hi = 1.0
        while self.margin_cdf(hi) < 1.0 - p:
            hi *= 4.0
        return brentq(lambda x: self.margin_cdf(x) - (1.0 - p), 0.0, hi, xtol=1e-12, rtol=1e-12)


def _asymmetric_c() -> float:
    # int_0^infty dy/(A + y^4) = pi/(2 sqrt 2) A^{-3/4};
    # int_0^infty (1 + x^3)^{-3/4} dx = (1/3) B(1/3, 5/12)
    total = np.pi / (2.0 * np.sqrt(2.0)) * np.exp(betaln(1.0 / 3.0, 5.0 / 12.0)) / 3.0
    return 1.0 / total


@dataclass(frozen=True)
class Asymmetric:
    """Density c/(x1^3 + x2^4 + 1); tail indices (4/5, 3/5)."""

    name = "asymmetric"
    is_bivariate = True
    gammas = (4.0 / 5.0, 3.0 / 5.0)

    @cached_property
    def c(self) -> float:
        return _asymmetric_c()

    @cached_property
    def c12(self) -> tuple[float, float]:
        """Marginal scale constants solved from int h = 1 and int w h = 1/2."""

        def moments(c12):
            c1, c2 = c12
            m0, _ = quad(lambda w: self._h(w, c1, c2), 0.0, 1.0, limit=200)
            m1, _ = quad(lambda w: w * self._h(w, c1, c2), 0.0, 1.0, limit=200)
            return [m0 - 1.0, m1 - 0.5]

        sol = fsolve(moments, [0.589, 0.593], full_output=False, xtol=1e-13)
        c1, c2 = float(sol[0]), float(sol[1])
        resid = moments((c1, c2))
        if max(abs(resid[0]), abs(resid[1])) > 1e-9:
            raise RuntimeError(f"angular normalization did not converge: residuals {resid}")
        return c1, c2

    def _h(self, w, c1, c2):
        w = np.asarray(w, dtype=float)
        g1, g2 = self.gammas
        den = (c1 * w**g1) ** 3 + (c2 * (1.0 - w) ** g2) ** 4
        return 6.0 * self.c / 25.0 * c1 * c2 / (den * w ** (1.0 - g1) * (1.0 - w) ** (1.0 - g2))

    def pdf(self, x1, x2):
        return self.c / (np.asarray(x1, float) ** 3 + np.asarray(x2, float) ** 4 + 1.0)

    def angular_density(self, w):
        c1, c2 = self.c12
        return self._h(w, c1, c2)

    def q_star(self, w):
        w = np.asarray(w, dtype=float)
        c1, c2 = self.c12
        g1, g2 = self.gammas
        den = (c1 * w**g1) ** 3 + (c2 * (1.0 - w) ** g2) ** 4
        return (self.c * c1 * c2 / den) ** (-5.0 / 12.0)

    def sample(self, n: int, rng) -> np.ndarray:
        return _pp_sampler(self).sample(n, rng)

    def margin_quantile(self, p: float, margin: int = 1) -> float:
        # closed-form marginal densities:
        #   f1(x) = c pi/(2 sqrt 2) (1 + x^3)^{-3/4}
        #   f2(y) = c 2 pi/(3 sqrt 3) (1 + y^4)^{-2/3}
        if margin == 1:
            const = self.c * np.pi / (2.0 * np.sqrt(2.0))
            f = lambda x: const * (1.0 + x**3) ** -0.75
        else:
            const = self.c * 2.0 * np.pi / (3.0 * np.sqrt(3.0))
            f = lambda x: const * (1.0 + x**4) ** (-2.0 / 3.0)

        def cdf(x):
            val, _ = quad(f, 0.0, x, limit=200)
            return val

        hi = 1.0
        while cdf(hi) < 1.0 - p:
            hi *= 4.0
        return brentq(lambda x: cdf(x) - (1.0 - p), 0.0, hi, xtol=1e-12, rtol=1e-12)


@dataclass(frozen=True)
class Clover:
    """Four-petal heavy-tailed density; tail indices (1, 5/4)."""

    name = "clover"
    is_bivariate = True
    gammas = (1.0, 5.0 / 4.0)

    @cached_property
    def c(self) -> float:
        """Angular normalization constant from int h = 1 (h is symmetric)."""
        val, _ = quad(lambda w: self._h_shape(w), 0.0, 1.0, limit=200)
        return 1.0 / (4.0 * val)

    @staticmethod
    def _h_shape(w):
        w = np.asarray(w, dtype=float)
        num = w**4 - w**2 * (1.0 - w) ** 2 + (1.0 - w) ** 4
        return num / (w**2 + (1.0 - w) ** 2) ** 3.5

    def pdf(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        u = (x2 + 1.0) ** 0.8 - 1.0
        s = x1**2 + u**2
        num = s**2 - 3.0 * x1**2 * u**2
        return (
            64.0
            / (25.0 * np.pi)
            * num
            / ((x2 + 1.0) ** 0.2 * (1.0 + s) ** 1.5 * np.where(s > 0.0, s, 1.0) ** 2)
        )

    def angular_density(self, w):
        return 4.0 * self.c * self._h_shape(w)

    def q_star(self, w):
        w = np.asarray(w, dtype=float)
        base = 32.0 * self.c / 5.0 * self._h_shape(w) / (1.0 - w) ** 0.25
        return base ** (-4.0 / 13.0)

    def sample(self, n: int, rng) -> np.ndarray:
        return _pp_sampler(self).sample(n, rng)

    def sample_exact(self, n: int, rng) -> np.ndarray:
        """Transform sampler: polar draw of the pre-transform density.

        In (x1, u) coordinates with u = (x2+1)^{4/5} - 1 the density is
        (16/(5 pi)) (1 - 3 x1^2 u^2 / (x1^2+u^2)^2) (1 + x1^2 + u^2)^{-3/2},
        i.e. angle density prop. to 1 - (3/4) sin^2(2 phi) and radius with
        survival (1 + r^2)^{-1/2}.  Used as a cross-check oracle.
        """
        phi = np.empty(0)
        while phi.size < n:
            cand = rng.uniform(0.0, np.pi / 2.0, size=2 * (n - phi.size) + 16)
            keep = rng.uniform(size=cand.size) < 1.0 - 0.75 * np.sin(2.0 * cand) ** 2
            phi = np.concatenate([phi, cand[keep]])
        phi = phi[:n]
        r = np.sqrt(rng.uniform(size=n) ** -2.0 - 1.0)
        x1 = r * np.cos(phi)
        u = r * np.sin(phi)
        return np.column_stack([x1, (1.0 + u) ** 1.25 - 1.0])

    def margin_quantile(self, p: float, margin: int = 1) -> float:
        # x1 and u = (x2+1)^{4/5} - 1 share the same (symmetric) margin
        def f_base(x):
            def inner(u):
                s = x**2 + u**2
                return (1.0 - 3.0 * x**2 * u**2 / s**2) * (1.0 + s) ** -1.5

            val, _ = quad(inner, 0.0, np.inf, limit=200)
            return 16.0 / (5.0 * np.pi) * val

        def cdf(x):
            val, _ = quad(f_base, 0.0, x, limit=200)
            return val

        hi = 1.0
        while cdf(hi) < 1.0 - p:
            hi *= 4.0
        q = brentq(lambda x: cdf(x) - (1.0 - p), 0.0, hi, xtol=1e-11, rtol=1e-11)
        return q if margin == 1 else (1.0 + q) ** 1.25 - 1.0


# ---------------------------------------------------------------------------
# pseudo-polar grid-inversion sampler (densities without a direct sampler)


class _PseudoPolarGridSampler:
    """Inverse-CDF sampling in pseudo-polar coordinates (r, w).

    The angular marginal is tabulated once on a fine w-grid (monotone PCHIP
    inversion); the radial conditional CDF is built per draw on a log grid,
    with the mass beyond the grid added back through the local power-law
    exponent of the radial density.
    """

    def __init__(self, pdf, w_nodes: int = 10_001, r_grid=None):
        self.pdf = pdf
        self.r = np.logspace(-6.0, 12.0, 1201) if r_grid is None else np.asarray(r_grid)
        w = np.linspace(0.0, 1.0, w_nodes)
        w[0], w[-1] = 1e-9, 1.0 - 1e-9
        dens = np.array([trapezoid(self.r * pdf(self.r * wi, self.r * (1.0 - wi)), self.r) for wi in w])
        cdf = cumulative_trapezoid(dens, w, initial=0.0)
        cdf /= cdf[-1]
        keep = np.concatenate([[True], np.diff(cdf) > 0.0])
        self._w_inv = PchipInterpolator(cdf[keep], w[keep])

    def sample(self, n: int, rng, chunk: int = 8192) -> np.ndarray:
        w = np.asarray(self._w_inv(rng.uniform(size=n)))
        r_out = np.empty(n)
        for start in range(0, n, chunk):
            ws = w[start : start + chunk]
            g = self.r[None, :] * self.pdf(self.r[None, :] * ws[:, None], self.r[None, :] * (1.0 - ws[:, None]))
            G = cumulative_trapezoid(g, self.r, axis=1, initial=0.0)
            # tail mass past r_max from the local log-log slope of g
            slope = (np.log(g[:, -1]) - np.log(g[:, -3])) / (np.log(self.r[-1]) - np.log(self.r[-3]))
            slope = np.minimum(slope, -1.5)
            tail = -g[:, -1] * self.r[-1] / (slope + 1.0)
            total = G[:, -1] + tail
            u = rng.uniform(size=ws.size) * total
            in_tail = u > G[:, -1]
            idx = np.clip((G < u[:, None]).sum(axis=1), 1, self.r.size - 1)
            g_lo, g_hi = G[np.arange(ws.size), idx - 1], G[np.arange(ws.size), idx]
            frac = np.where(g_hi > g_lo, (u - g_lo) / np.where(g_hi > g_lo, g_hi - g_lo, 1.0), 0.0)
            r = self.r[idx - 1] + frac * (self.r[idx] - self.r[idx - 1])
            # invert the power-law tail: survival prop. to r^(slope+1)
            v = np.where(in_tail, (total - u) / np.where(tail > 0.0, tail, 1.0), 0.5)
            r = np.where(in_tail, self.r[-1] * np.maximum(v, 1e-300) ** (1.0 / (slope + 1.0)), r)
            r_out[start : start + chunk] = r
        return np.column_stack([r_out * w, r_out * (1.0 - w)])


_PP_CACHE: dict[str, _PseudoPolarGridSampler] = {}


def _pp_sampler(spec) -> _PseudoPolarGridSampler:
    sampler = _PP_CACHE.get(spec.name)
    if sampler is None:
        sampler = _PseudoPolarGridSampler(spec.pdf)
        _PP_CACHE[spec.name] = sampler
    return sampler


# ---------------------------------------------------------------------------
# registry and shared helpers

TESTBEDS = {
    "frechet": Frechet,
    "half_t": HalfT,
    "inv_gamma": InvGamma,
    "cauchy2": Cauchy2,
    "trunc_t2": TruncT2,
    "asymmetric": Asymmetric,
    "clover": Clover,
}


def make_testbed(name: str, **params):
    try:
        cls = TESTBEDS[name]
    except KeyError:
        raise ValueError(f"unknown testbed {name!r}; choose from {sorted(TESTBEDS)}") from None
    return cls(**params)


def true_univariate_quantile(spec, p: float) -> float:
    """Quantile of a univariate testbed at exceedance probability p."""
    if spec.is_bivariate:
        raise ValueError("univariate quantile requested from a bivariate testbed")
    return float(spec.quantile(p))


def tail_equivalent_margin(spec, k_over_n: float, margin: int = 1) -> GevParams:
    """Finite-sample margin parameters reproducing the testbed's tail.

    Anchors the censored-tail family at the testbed's exact k/n-level
    quantile with the true tail index: mu = Q(k/n), sigma = gamma * mu.
    """
    if spec.is_bivariate:
        gamma = spec.gammas[margin - 1]
        mu = spec.margin_quantile(k_over_n, margin)
    else:
        gamma = spec.gamma
        mu = spec.quantile(k_over_n)
    return GevParams(mu=float(mu), sigma=float(gamma * mu), gamma=float(gamma))


def extremal_t_exponent(x, y, rho: float, nu: float):
    """Exponent function V(x, y) of the quadrant-truncated extremal-t limit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("x and y must be positive")
    a = np.sqrt((nu + 1.0) / (1.0 - rho**2))
    t0 = student_t.cdf(-rho * a, nu + 1.0)
    term_x = student_t.cdf(a * ((y / x) ** (1.0 / nu) - rho), nu + 1.0) - t0
    term_y = student_t.cdf(a * ((x / y) ** (1.0 / nu) - rho), nu + 1.0) - t0
    out = (term_x / x + term_y / y) / (1.0 - t0)
    return out if out.ndim else float(out)
