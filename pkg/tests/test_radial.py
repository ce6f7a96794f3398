import math

import numpy as np
import pytest
from scipy import integrate, optimize, stats

from lctransport import catalog
from lctransport.errors import InvalidDimension
from lctransport.radial import build_radial, evaluate_map, gradient_eigenvalues, reduce_to_1d
from lctransport.transport1d import pushforward_errors


@pytest.fixture(scope="module")
def rt3():
    return build_radial(catalog.gaussian(1.0), catalog.bump(0.2, 0.5, 2, center=1.5), 3)


def test_n1_is_plain_half_line():
    src, tgt = reduce_to_1d(catalog.gaussian(1.0), None, 1)
    assert src.jacobian_power == 0 and src.domain == (0.0, math.inf)
    assert src.normalization == pytest.approx(-math.log(math.sqrt(math.pi / 2)), abs=1e-14)


def test_maxwell_boltzmann():
    src, _ = reduce_to_1d(catalog.gaussian(1.0), None, 3)
    r = np.array([0.3, 1.0, 1.7, 3.0])
    assert np.allclose(src.cdf(r), stats.chi(3).cdf(r), rtol=1e-13, atol=0)
    assert np.allclose(src.density(r), stats.chi(3).pdf(r), rtol=1e-13, atol=0)


def test_induced_potential_convex_n5():
    V = catalog.gaussian(1.0)
    n = 5
    r = np.linspace(0.05, 6, 400)
    h = 1e-4
    Vt = lambda s: V(s) - (n - 1) * np.log(s)  # noqa: E731
    d2 = (Vt(r + h) - 2 * Vt(r) + Vt(r - h)) / h**2
    assert np.all(d2 >= 1 + (n - 1) / r**2 - 1e-4)
    reduce_to_1d(V, None, n)


@pytest.mark.parametrize("n", [0, -2, 2.5])
def test_invalid_dimension(n):
    with pytest.raises(InvalidDimension):
        reduce_to_1d(catalog.gaussian(1.0), None, n)


def test_identity_when_unperturbed():
    rt = build_radial(catalog.gaussian(1.0), None, 4)
    x = np.random.default_rng(1).normal(size=(20, 4))
    assert np.allclose(evaluate_map(rt, x), x, atol=1e-12)
    rad, tan = gradient_eigenvalues(rt, np.linspace(0.1, 5, 50))
    assert np.allclose(rad, 1, atol=1e-12) and np.allclose(tan, 1, atol=1e-12)


def test_origin_maps_to_origin(rt3):
    assert np.all(evaluate_map(rt3, np.zeros(3)) == 0)
    assert rt3.radius_map(0.0) == 0.0
    assert rt3.radius_map(1e-9) < 1e-8
    assert abs(rt3.log_deriv_at_zero) <= rt3.oscillation


def test_equivariance(rt3):
    rng = np.random.default_rng(3)
    for _ in range(10):
        v = rng.normal(size=3)
        H = np.eye(3) - 2 * np.outer(v, v) / v.dot(v)
        x = rng.normal(size=3) * 1.5
        assert np.allclose(evaluate_map(rt3, H @ x), H @ evaluate_map(rt3, x), atol=1e-12, rtol=0)


def test_profile_matches_weighted_oracle(rt3):
    # independent oracle: scipy quad of r^2 e^{-r^2/2 - q(r)} and brentq
    q = catalog.bump(0.2, 0.5, 2, center=1.5)
    f_s = lambda r: r * r * math.exp(-r * r / 2)  # noqa: E731
    f_t = lambda r: r * r * math.exp(-r * r / 2 - float(q(r)))  # noqa: E731
    opts = dict(epsabs=0, epsrel=1e-13, limit=200)
    Zs = integrate.quad(f_s, 0, 40, **opts)[0]
    Zt = integrate.quad(f_t, 0, 40, points=[1.0, 2.0], **opts)[0]
    u = integrate.quad(f_s, 0, 1.5, **opts)[0] / Zs
    F = lambda y: integrate.quad(f_t, 0, y, points=[1.0], **opts)[0] / Zt - u  # noqa: E731
    T = optimize.brentq(F, 0.5, 3.0, xtol=1e-14)
    x = np.array([1.5, 0.0, 0.0])
    assert np.linalg.norm(evaluate_map(rt3, x)) == pytest.approx(T, abs=1e-9)


def test_eigenvalues_within_bounds(rt3):
    r = np.linspace(rt3.profile.grid[0], rt3.profile.grid[-1], 1000)
    rad, tan = gradient_eigenvalues(rt3, r)
    lo, hi = rt3.eigen_interval
    assert np.all(rad >= lo - 1e-8) and np.all(rad <= hi + 1e-8)
    assert np.all(tan >= lo - 1e-8) and np.all(tan <= hi + 1e-8)


def test_tangential_is_mean_of_radial(rt3):
    g = rt3.profile.grid
    rad_nodes = np.exp(rt3.profile.log_deriv)
    for r in (0.5, 1.4, 1.6, 2.5, 4.0):
        _, tan = gradient_eigenvalues(rt3, np.array([r]))
        inside = g < r
        lo = min(rad_nodes[inside].min(), math.exp(rt3.log_deriv_at_zero))
        hi = max(rad_nodes[inside].max(), math.exp(rt3.log_deriv_at_zero))
        assert lo - 1e-9 <= tan[0] <= hi + 1e-9


def test_radial_pushforward(rt3):
    assert max(pushforward_errors(rt3.profile).values()) < 1e-6


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10, 50])
def test_dimension_free_bound(n):
    q = catalog.bump(0.25, 1.0, 2, center=1.0)
    rt = build_radial(catalog.gaussian(1.0), q, n)
    assert np.max(np.abs(rt.profile.log_deriv)) <= q.oscillation_bound + 1e-8
