import csv

import numpy as np
import pytest
from scipy.integrate import quad

from xqr.dependence import EtaCoefficients, sample_eta_prior, sample_p0_p1_prior
from xqr.margins import GevParams, marginal_transform
from xqr.regions import (
    QuantileTarget,
    RegionCurve,
    angular_basic_density,
    basic_set_boundary,
    default_w_grid,
    nu_S,
    quantile_region,
    summarize_posterior_quantiles,
    summarize_posterior_regions,
    write_region_csv,
)
from xqr.samplers import PosteriorChain
from xqr.testbeds import Asymmetric, Cauchy2, Clover, TruncT2, make_testbed


def cauchy_h(w):
    w = np.asarray(w, dtype=float)
    return 0.5 * (w**2 + (1.0 - w) ** 2) ** (-3.0 / 2.0)


def test_angular_basic_density_cauchy_midpoint():
    # symmetric Cauchy: h(1/2) = sqrt(2), q(1/2) = 2^{3/2}, q* = 2^{-1/2}
    assert angular_basic_density(0.5, cauchy_h, 1.0, 1.0) == pytest.approx(2.0 ** (-1.0 / 2.0), rel=1e-12)
    spec = Cauchy2()
    w = default_w_grid()
    np.testing.assert_allclose(
        angular_basic_density(w, spec.angular_density, 1.0, 1.0), spec.q_star(w), rtol=1e-10
    )


def test_angular_basic_density_uniform_case():
    # gamma1 = gamma2 = 1 and h = 1/2 give q = 1 and q* = 1 for every angle
    w = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(angular_basic_density(w, lambda w: np.full_like(w, 0.5), 1.0, 1.0), 1.0)


def test_angular_basic_density_zero_density_sentinel():
    out = angular_basic_density(np.array([0.3, 0.5]), lambda w: np.where(w < 0.4, 0.0, 0.5), 1.0, 1.0)
    assert np.isinf(out[0]) and np.isfinite(out[1])


def test_angular_basic_density_validation():
    with pytest.raises(ValueError):
        angular_basic_density(0.5, cauchy_h, -1.0, 1.0)
    with pytest.raises(ValueError):
        angular_basic_density(0.0, cauchy_h, 1.0, 1.0)


def test_nu_S_cauchy_closed_form():
    assert nu_S(cauchy_h, 1.0, 1.0) == pytest.approx(1.0 + np.pi / 2.0, abs=1e-6)


def test_nu_S_matches_reference_quadrature():
    # independent scalar QUADPACK evaluation across all bivariate testbeds
    for spec in (Cauchy2(), TruncT2(nu=2.0, rho=0.5), Asymmetric(), Clover()):
        g1, g2 = spec.gammas
        ref = 2.0 * quad(
            lambda w: spec.angular_density(w) / angular_basic_density(w, spec.angular_density, g1, g2),
            0.0,
            1.0,
            limit=400,
        )[0]
        assert nu_S(spec.angular_density, g1, g2) == pytest.approx(ref, rel=1e-6)


def test_nu_S_accepts_eta_coefficients():
    rng = np.random.default_rng(0)
    p0, p1 = sample_p0_p1_prior(5, rng, p0_max=0.1, p1_max=0.1)
    eta = sample_eta_prior(5, p0, p1, rng)
    direct = nu_S(eta, 0.8, 1.3)
    from xqr.dependence import angular_density_eval

    assert direct == pytest.approx(nu_S(lambda w: angular_density_eval(w, eta), 0.8, 1.3), rel=1e-10)


def test_basic_set_boundary_cauchy_diagonal_point():
    # at w = 1/2 the boundary radius is sqrt(2), split evenly over both axes
    curve = basic_set_boundary(np.array([0.5]), cauchy_h, 1.0, 1.0)
    assert curve.x[0] == pytest.approx(np.sqrt(2.0) / 2.0, rel=1e-12)
    assert curve.y[0] == curve.x[0]


def test_basic_set_boundary_plug_back_identity():
    # the basic density extends to Cartesian points by homogeneity of order
    # -(1+g1+g2); every boundary point must land exactly on the level set q = 1
    for spec in (Cauchy2(), TruncT2(nu=2.0, rho=0.5), Asymmetric()):
        g1, g2 = spec.gammas
        w = default_w_grid()
        curve = basic_set_boundary(w, spec.angular_density, g1, g2)
        r = curve.x + curve.y
        w_back = curve.x / r
        q_angular = (
            2.0 * w_back ** (1.0 - g1) * (1.0 - w_back) ** (1.0 - g2)
            * spec.angular_density(w_back) / (g1 * g2)
        )
        q_at_point = r ** (-(1.0 + g1 + g2)) * q_angular
        np.testing.assert_allclose(w_back, w, rtol=1e-10)
        np.testing.assert_allclose(q_at_point, 1.0, rtol=1e-8)


def test_quantile_region_pullback_identity():
    # pushing a boundary point through the data map and back through the
    # marginal transform must reproduce p / (nu(S) x)
    spec = Cauchy2()
    th1 = GevParams(2.0, 2.0, 1.0)
    th2 = GevParams(1.5, 1.5, 1.0)
    target = QuantileTarget(p=1 / 1500, k=150, n=1500)
    w = default_w_grid()
    nus = nu_S(spec.angular_density, 1.0, 1.0)
    boundary = basic_set_boundary(w, spec.angular_density, 1.0, 1.0)
    region = quantile_region(target, th1, th2, nus, boundary)
    kn = target.k / target.n
    z1 = marginal_transform(region.x, th1, kn)
    z2 = marginal_transform(region.y, th2, kn)
    np.testing.assert_allclose(z1 * nus * boundary.x, target.p, rtol=1e-10)
    np.testing.assert_allclose(z2 * nus * boundary.y, target.p, rtol=1e-10)


def test_quantile_region_unit_scale_recovers_location():
    # when k * nu(S) * x / (n p) = 1 the data coordinate collapses to mu
    th = GevParams(3.0, 2.0, 0.7)
    target = QuantileTarget(p=0.1, k=100, n=1000)
    # choose boundary coordinate x so that the scale ratio times x is 1
    nus = 2.0
    x = target.n * target.p / (target.k * nus)
    boundary = RegionCurve(w=np.array([0.5]), x=np.array([x]), y=np.array([x]))
    region = quantile_region(target, th, th, nus, boundary)
    assert region.x[0] == pytest.approx(3.0, rel=1e-12)


def test_quantile_regions_nest_in_p():
    spec = Cauchy2()
    th1 = GevParams(2.0, 2.0, 1.0)
    th2 = GevParams(1.5, 1.5, 1.0)
    w = default_w_grid()
    nus = nu_S(spec.angular_density, 1.0, 1.0)
    boundary = basic_set_boundary(w, spec.angular_density, 1.0, 1.0)
    r1 = quantile_region(QuantileTarget(1 / 750, 150, 1500), th1, th2, nus, boundary)
    r2 = quantile_region(QuantileTarget(1 / 1500, 150, 1500), th1, th2, nus, boundary)
    r3 = quantile_region(QuantileTarget(1 / 3000, 150, 1500), th1, th2, nus, boundary)
    assert np.all(r1.x < r2.x) and np.all(r2.x < r3.x)
    assert np.all(r1.y < r2.y) and np.all(r2.y < r3.y)


def test_region_symmetry_under_margin_swap():
    # a symmetric angular density and swapped margins mirror the curve
    spec = Cauchy2()
    th1 = GevParams(2.0, 2.0, 1.0)
    th2 = GevParams(1.5, 1.5, 1.0)
    w = default_w_grid()
    nus = nu_S(spec.angular_density, 1.0, 1.0)
    boundary = basic_set_boundary(w, spec.angular_density, 1.0, 1.0)
    target = QuantileTarget(1 / 1500, 150, 1500)
    fwd = quantile_region(target, th1, th2, nus, boundary)
    rev = quantile_region(target, th2, th1, nus, boundary)
    np.testing.assert_allclose(fwd.x, rev.y[::-1], rtol=1e-10)
    np.testing.assert_allclose(fwd.y, rev.x[::-1], rtol=1e-10)


def _constant_chain(n_draws=600, burn_in=100, kappa=4):
    """A degenerate bivariate chain repeating one draw, for summary mechanics."""
    rng = np.random.default_rng(3)
    p0, p1 = sample_p0_p1_prior(kappa, rng, p0_max=0.1, p1_max=0.1)
    eta = sample_eta_prior(kappa, p0, p1, rng)
    theta = np.tile(np.array([1.0, np.log(2.0), 1.0]), (n_draws, 1))
    return PosteriorChain(
        theta1=theta.copy(),
        tau1=np.ones(n_draws),
        accept1=np.ones(n_draws, dtype=bool),
        burn_in=burn_in,
        k=(150, 150),
        n=1500,
        theta2=theta.copy(),
        tau2=np.ones(n_draws),
        accept2=np.ones(n_draws, dtype=bool),
        kappa=np.full(n_draws, kappa),
        eta=[eta.eta.copy() for _ in range(n_draws)],
        accept3=np.zeros(n_draws, dtype=bool),
    )


def test_summarize_constant_chain_bands_collapse():
    chain = _constant_chain()
    target = QuantileTarget(1 / 1500, 150, 1500)
    curve = summarize_posterior_regions(chain, target, thin=1)
    np.testing.assert_allclose(curve.x_lo, curve.x, rtol=1e-12)
    np.testing.assert_allclose(curve.x_hi, curve.x, rtol=1e-12)
    # the mean curve equals the single draw pushed through directly
    eta = EtaCoefficients(int(chain.kappa[0]), chain.eta[0])
    boundary = basic_set_boundary(curve.w, eta, 1.0, 1.0)
    nus = nu_S(eta, 1.0, 1.0)
    expected = quantile_region(target, chain.marginal_gev(0, 1), chain.marginal_gev(0, 2), nus, boundary)
    np.testing.assert_allclose(curve.x, expected.x, rtol=1e-10)
    np.testing.assert_allclose(curve.y, expected.y, rtol=1e-10)


def test_summarize_s_scale_when_target_missing():
    chain = _constant_chain()
    curve = summarize_posterior_regions(chain, None, thin=1)
    eta = EtaCoefficients(int(chain.kappa[0]), chain.eta[0])
    boundary = basic_set_boundary(curve.w, eta, 1.0, 1.0)
    np.testing.assert_allclose(curve.x, boundary.x, rtol=1e-12)
    assert curve.p is None


def test_summarize_requires_enough_draws():
    chain = _constant_chain(n_draws=300, burn_in=100)
    with pytest.raises(ValueError):
        summarize_posterior_regions(chain, None, thin=5)  # 40 retained draws


def test_summarize_rejects_univariate_chain():
    chain = PosteriorChain(
        theta1=np.zeros((10, 3)),
        tau1=np.ones(10),
        accept1=np.ones(10, dtype=bool),
        burn_in=0,
        k=(5,),
        n=50,
    )
    with pytest.raises(ValueError):
        summarize_posterior_regions(chain, None)


def test_summarize_posterior_quantiles_constant_chain():
    chain = _constant_chain()
    out = summarize_posterior_quantiles(chain, [1 / 3000], level=0.95)
    stats = out[1 / 3000]
    th = chain.marginal_gev(0, 1)
    expected = th.mu + th.sigma * ((150 / (1500 / 3000)) ** th.gamma - 1.0) / th.gamma
    assert stats["mean"] == pytest.approx(expected, rel=1e-12)
    assert stats["interval"][0] == pytest.approx(expected, rel=1e-12)
    assert stats["hist_counts"].sum() == chain.retained().size


def test_summarize_posterior_quantiles_warns_below_threshold_level():
    chain = _constant_chain()
    with pytest.warns(UserWarning, match="interpolates"):
        summarize_posterior_quantiles(chain, [0.5])


def test_write_region_csv_round_trip(tmp_path):
    chain = _constant_chain()
    target = QuantileTarget(1 / 1500, 150, 1500)
    curve = summarize_posterior_regions(chain, target, thin=1)
    path = tmp_path / "region.csv"
    write_region_csv(curve, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == curve.w.size
    got_x = np.array([float(r["x_mean"]) for r in rows])
    np.testing.assert_allclose(got_x, curve.x, rtol=1e-9)
    assert float(rows[0]["p"]) == pytest.approx(1 / 1500)
    assert float(rows[0]["level"]) == 0.90


def test_write_region_csv_requires_bands(tmp_path):
    curve = basic_set_boundary(default_w_grid(), Cauchy2().angular_density, 1.0, 1.0)
    with pytest.raises(ValueError):
        write_region_csv(curve, tmp_path / "no.csv")


def test_quantile_target_validation():
    with pytest.raises(ValueError):
        QuantileTarget(0.0, 10, 100)
    with pytest.raises(ValueError):
        QuantileTarget(1.5, 10, 100)
