import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from xqr.dependence import (
    BetaCoefficients,
    EtaCoefficients,
    angular_density_eval,
    beta_to_eta,
    eta_to_beta,
    negbin_size_prob,
    p1_bounds,
    pickands_d1,
    pickands_d2,
    pickands_eval,
    prior_logdensity_kappa,
    sample_eta_prior,
    sample_p0_p1_prior,
    validate_eta,
)


def random_etas(n, rng, kappas=(3, 4, 5, 8, 12)):
    out = []
    for _ in range(n):
        kappa = int(rng.choice(kappas))
        p0, p1 = sample_p0_p1_prior(kappa, rng)
        try:
            out.append(sample_eta_prior(kappa, p0, p1, rng, max_tries=5000))
        except ValueError:
            continue
    return out


def test_eta_beta_roundtrip():
    rng = np.random.default_rng(0)
    for eta in random_etas(100, rng):
        back = beta_to_eta(eta_to_beta(eta))
        np.testing.assert_allclose(back.eta, eta.eta, atol=1e-12)


def test_beta_endpoints_and_slopes():
    rng = np.random.default_rng(1)
    for eta in random_etas(30, rng):
        beta = eta_to_beta(eta)
        assert beta.beta[0] == 1.0
        # sum constraint makes the polynomial return to 1 at v = 1
        assert beta.beta[-1] == pytest.approx(1.0, abs=1e-12)
        # A'(0) = 2 p0 - 1, A'(1) = 1 - 2 p1
        assert pickands_d1(0.0, beta) == pytest.approx(2 * eta.p0 - 1.0, abs=1e-10)
        assert pickands_d1(1.0, beta) == pytest.approx(1.0 - 2 * eta.p1, abs=1e-10)


def test_pickands_bounds_and_convexity():
    rng = np.random.default_rng(2)
    v = np.linspace(0.0, 1.0, 201)
    for eta in random_etas(30, rng):
        beta = eta_to_beta(eta)
        a = pickands_eval(v, beta)
        assert np.all(a <= 1.0 + 1e-12)
        assert np.all(a >= np.maximum(v, 1.0 - v) - 1e-12)
        assert np.all(pickands_d2(v, beta) >= -1e-10)


def test_half_second_derivative_equals_angular_density():
    rng = np.random.default_rng(3)
    w = np.linspace(0.0, 1.0, 401)
    for eta in random_etas(30, rng):
        beta = eta_to_beta(eta)
        np.testing.assert_allclose(0.5 * pickands_d2(w, beta), angular_density_eval(w, eta), atol=1e-8)


def test_pickands_derivatives_match_finite_differences():
    rng = np.random.default_rng(4)
    for eta in random_etas(10, rng):
        beta = eta_to_beta(eta)
        for v in rng.uniform(0.05, 0.95, size=5):
            eps = 1e-6
            fd1 = (pickands_eval(v + eps, beta) - pickands_eval(v - eps, beta)) / (2 * eps)
            assert pickands_d1(v, beta) == pytest.approx(fd1, abs=1e-6)
            eps = 1e-4  # second difference needs a wider step for roundoff
            fd2 = (pickands_eval(v + eps, beta) - 2 * pickands_eval(v, beta) + pickands_eval(v - eps, beta)) / eps**2
            assert pickands_d2(v, beta) == pytest.approx(fd2, abs=1e-5, rel=1e-4)


def test_angular_density_moment_constraints():
    # int h = 1 - p0 - p1 and p1 + int w h = 1/2 for any valid eta
    rng = np.random.default_rng(5)
    for eta in random_etas(15, rng):
        m0 = quad(lambda w: angular_density_eval(w, eta), 0.0, 1.0, limit=200)[0]
        m1 = quad(lambda w: w * angular_density_eval(w, eta), 0.0, 1.0, limit=200)[0]
        assert m0 == pytest.approx(1.0 - eta.p0 - eta.p1, abs=1e-9)
        assert eta.p1 + m1 == pytest.approx(0.5, abs=1e-9)


def test_validate_eta_reports_violations():
    assert validate_eta(EtaCoefficients(3, [0.1, 0.5, 0.9])) is None
    assert "range" in validate_eta(EtaCoefficients(3, [-0.1, 0.7, 0.9]))
    assert "monotonicity" in validate_eta(EtaCoefficients(3, [0.5, 0.2, 0.8]))
    assert "sum" in validate_eta(EtaCoefficients(3, [0.1, 0.2, 0.3]))


def test_coefficient_length_checks():
    with pytest.raises(ValueError):
        EtaCoefficients(4, [0.1, 0.5, 0.9])
    with pytest.raises(ValueError):
        BetaCoefficients(3, [1.0, 0.9, 1.0])
    with pytest.raises(ValueError):
        EtaCoefficients(2, [0.5, 0.5])


def test_negbin_parameterization():
    size, prob = negbin_size_prob(3.2, 4.48)
    # mean and variance of NegBin(size, prob)
    mean = size * (1 - prob) / prob
    var = size * (1 - prob) / prob**2
    assert mean == pytest.approx(3.2, rel=1e-12)
    assert var == pytest.approx(4.48, rel=1e-12)


def test_kappa_prior_normalizes():
    kappas = np.arange(3, 400)
    total = np.exp(prior_logdensity_kappa(kappas, 3.2, 4.48)).sum()
    assert total == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        prior_logdensity_kappa(2, 3.2, 4.48)


def test_p1_bounds_feasibility():
    # drawing eta must succeed for any (p0, p1) inside the bounds
    rng = np.random.default_rng(6)
    for kappa in (3, 4, 5, 9):
        for _ in range(20):
            # p0 near 1/2 makes the polytope vanishingly thin for large kappa,
            # so the rejection draw is exercised on a practical range
            p0 = rng.uniform(0.0, 0.3)
            a, b = p1_bounds(kappa, p0)
            assert a <= b
            # stay off the edges of the feasible interval, where the
            # constrained polytope is vanishingly thin
            p1 = a + rng.uniform(0.1, 0.9) * (b - a)
            eta = sample_eta_prior(kappa, p0, p1, rng, max_tries=50000)
            assert validate_eta(eta) is None
            assert eta.p0 == pytest.approx(p0)
            assert eta.p1 == pytest.approx(p1)


def test_kappa3_interior_coefficient_determined():
    rng = np.random.default_rng(7)
    p0, p1 = 0.05, 0.08
    eta = sample_eta_prior(3, p0, p1, rng)
    assert eta.eta[1] == pytest.approx(0.5 + p1 - p0, abs=1e-12)


def test_kappa4_interior_uniform_on_feasible_interval():
    # with one free coefficient the accepted draw must be uniform on the
    # feasible interval for eta_1
    rng = np.random.default_rng(2)
    p0, p1 = 0.05, 0.08
    lo, hi = p0, 1.0 - p1
    target = 2.0 - p0 - (1.0 - p1)
    a = max(lo, target - hi)
    b = min(hi, target / 2.0)
    draws = np.array([sample_eta_prior(4, p0, p1, rng).eta[1] for _ in range(4000)])
    assert draws.min() >= a - 1e-12 and draws.max() <= b + 1e-12
    stat = kstest(draws, lambda x: np.clip((x - a) / (b - a), 0.0, 1.0))
    assert stat.pvalue > 0.01


def test_sample_p0_p1_simulation_override():
    rng = np.random.default_rng(9)
    for kappa in (3, 5, 10):
        for _ in range(200):
            p0, p1 = sample_p0_p1_prior(kappa, rng, p0_max=0.1, p1_max=0.1)
            assert 0.0 <= p0 <= 0.1 and 0.0 <= p1 <= 0.1
            a, b = p1_bounds(kappa, p0)
            assert a - 1e-12 <= p1 <= b + 1e-12


def test_bernstein_basis_endpoint_convention():
    eta = EtaCoefficients(4, [0.1, 0.4, 0.6, 0.9])
    beta = eta_to_beta(eta)
    assert pickands_eval(0.0, beta) == pytest.approx(1.0)
    assert pickands_eval(1.0, beta) == pytest.approx(1.0)
    h = angular_density_eval(np.array([0.0, 1.0]), eta)
    assert np.all(np.isfinite(h))
