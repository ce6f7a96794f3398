import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lctransport import catalog
from lctransport.errors import InvalidDeclaration, NonIntegrable
from lctransport.measures import (Potential, WeightedMeasure1D, ball_mass, cdf, make_measure,
                                  normalize_constant, truncate)

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def gauss_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2))


def test_gaussian_normalizer(std_gauss):
    # density exp(c - t^2/2) so c = -log sqrt(2 pi)
    assert std_gauss.normalization == pytest.approx(-LOG_SQRT_2PI, abs=1e-14)


def test_normalize_constant_unnormalized_measure():
    m = WeightedMeasure1D(catalog.gaussian(1.0))
    assert normalize_constant(m) == pytest.approx(-LOG_SQRT_2PI, abs=1e-14)


def test_truncated_normalizer():
    m = make_measure(truncate(catalog.gaussian(1.0), 1.0))
    oracle = math.sqrt(2 * math.pi) * math.erf(1 / math.sqrt(2))
    assert m.normalization == pytest.approx(-math.log(oracle), abs=1e-13)


def test_truncated_normalizer_composite_quadrature():
    # independent composite Simpson oracle on [-1, 1]
    x = np.linspace(-1, 1, 200001)
    f = np.exp(-x * x / 2)
    h = 2.0 / 200000
    simpson = h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
    m = make_measure(truncate(catalog.gaussian(1.0), 1.0))
    assert m.normalization == pytest.approx(-math.log(simpson), abs=1e-12)


@pytest.mark.parametrize("h", [0.1, 0.5, -0.7])
def test_perturbed_normalizer_jensen_sandwich(h):
    V = catalog.gaussian(1.0)
    m0 = make_measure(V)
    m = make_measure(V, catalog.bump(h, 1.0))
    # relative to the normalised Gaussian the shift is within ||q||
    assert abs(m.normalization - m0.normalization) <= abs(h) + 1e-14


def test_cdf_values(std_gauss):
    assert cdf(std_gauss, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert cdf(std_gauss, 1.0) == pytest.approx(0.841344746068543, abs=1e-14)


def test_cdf_tails_relative_accuracy(std_gauss):
    for x in (-30.0, -10.0, -3.0):
        assert cdf(std_gauss, x) == pytest.approx(gauss_cdf(x), rel=1e-12)
        assert cdf(std_gauss, -x, "upper") == pytest.approx(gauss_cdf(x), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-8, 8), h=st.floats(-1, 1))
def test_cdf_complementarity(x, h):
    m = make_measure(catalog.gaussian(1.0), catalog.bump(h, 1.0))
    assert cdf(m, x) + cdf(m, x, "upper") == pytest.approx(1.0, abs=1e-10)


def test_cdf_derivative_is_density(std_gauss):
    x = np.linspace(-4, 4, 81)
    h = 1e-5
    fd = (std_gauss.cdf(x + h) - std_gauss.cdf(x - h)) / (2 * h)
    assert np.max(np.abs(fd - std_gauss.density(x))) < 1e-9
    assert np.all(np.diff(std_gauss.cdf(x)) > 0)


def test_quantile_roundtrip(std_gauss):
    u = np.array([1e-250, 1e-12, 0.01, 0.5, 0.9])
    x = std_gauss.quantile(u)
    # relative CDF resolution is |x| rho/Phi times the float spacing of x
    rtol = 4 * (1 + x * x) * np.finfo(float).eps + 1e-15
    assert np.all(np.abs(std_gauss.cdf(x) / u - 1) <= rtol)
    y = std_gauss.quantile(u, "upper")
    assert np.all(np.abs(std_gauss.cdf(y, "upper") / u - 1) <= rtol)


def test_ball_mass(std_gauss):
    r = 1.3
    assert ball_mass(std_gauss, r) == pytest.approx(2 * gauss_cdf(r) - 1, abs=1e-14)
    assert ball_mass(std_gauss, math.inf) == 1.0
    trunc = make_measure(truncate(catalog.gaussian(1.0), 1.0))
    assert ball_mass(trunc, 2.0) == pytest.approx(1.0, abs=1e-14)


def test_ball_mass_half_line():
    m = make_measure(catalog.gaussian(1.0), jacobian_power=2)
    # chi distribution with 3 degrees of freedom
    r = 1.5
    oracle = math.erf(r / math.sqrt(2)) - math.sqrt(2 / math.pi) * r * math.exp(-r * r / 2)
    assert ball_mass(m, r) == pytest.approx(oracle, abs=1e-14)


def test_truncation_converges():
    V = catalog.gaussian(1.0)
    c_inf = make_measure(V).normalization
    gaps = [abs(make_measure(truncate(V, j)).normalization - c_inf) for j in (5, 10, 20)]
    assert gaps[0] > gaps[1] >= gaps[2]
    assert gaps[0] < 1e-5 and gaps[2] < 1e-14


def test_truncate_keeps_curvature():
    V = truncate(catalog.quartic_regularized(1.0, 0.5), 3.0)
    assert (V.lambda_lo, V.lambda_hi) == (1.0, 2.25)
    assert V.finite_support == (-3.0, 3.0)
    assert np.isinf(V(3.5)) and np.isfinite(V(2.9))


def test_quadratic_sandwich():
    V = catalog.quartic_regularized(1.0, 0.5)
    x = np.linspace(-6, 6, 1201)
    assert np.all(V(x) >= 0.5 * V.lambda_lo * x * x - 1e-12)
    assert np.all(V(x) <= 0.5 * V.lambda_hi * x * x + 1e-12)


def test_bad_curvature_declaration_rejected():
    with pytest.raises(InvalidDeclaration):
        Potential(lambda t: t**4, lambda t: 4 * t**3, lambda_lo=0.0, lambda_hi=1.0)
    with pytest.raises(InvalidDeclaration):
        Potential(lambda t: 0.5 * t * t, lambda t: t, lambda_lo=2.0, lambda_hi=3.0)


def test_bad_argmin_rejected():
    with pytest.raises(InvalidDeclaration):
        Potential(lambda t: 0.5 * (t - 1) ** 2, lambda t: t - 1, lambda_lo=1.0, lambda_hi=1.0, argmin=0.0)


def test_perturbation_sup_declaration_checked():
    q = catalog.bump(0.3, 1.0)
    with pytest.raises(InvalidDeclaration):
        type(q)(value=q.value, support_radius=1.0, semiconvexity=q.semiconvexity,
                sup_pos=0.1, sup_neg=0.0)
    with pytest.raises(InvalidDeclaration):
        type(q)(value=q.value, support_radius=0.5, semiconvexity=q.semiconvexity,
                sup_pos=0.3, sup_neg=0.0)


def test_flat_potential_not_integrable():
    V = Potential(lambda t: np.zeros_like(t), lambda t: np.zeros_like(t),
                  lambda_lo=0.0, lambda_hi=1.0)
    with pytest.raises(NonIntegrable):
        make_measure(V)


def test_smoothed_abs_integrable_without_strong_convexity():
    m = make_measure(catalog.smoothed_abs(0.5))
    # int exp(-sqrt(eps^2 + t^2)) = 2 eps K_1(eps)
    from scipy.special import k1
    assert m.normalization == pytest.approx(-math.log(2 * 0.5 * k1(0.5)), abs=1e-12)


def test_density_positive_inside_support():
    m = make_measure(truncate(catalog.gaussian(1.0), 2.0), catalog.bump(-0.5, 1.0))
    x = np.linspace(-1.999, 1.999, 301)
    assert np.all(m.density(x) > 0)
