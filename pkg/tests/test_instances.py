import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardsphere import geometry as geo
from hardsphere.exceptions import DomainError, RangeError
from hardsphere.instances import (FunctionClass, GaussianBaselineParams, HardFunction, adversarial_pair, b_value,
                                  b_value_dirichlet, b_value_legendre, build_class, exclusivity_violations,
                                  gaussian_baseline, gaussian_baseline_sum, gaussian_half_width, measure_width,
                                  peak_b, sup_sum_ratio, sup_sum_terms)
from hardsphere.mercer import KernelParams
from hardsphere.special import harmonic_dim, sphere_area

KP1 = KernelParams(1, 1.0)
KP2 = KernelParams(2, 1.0)


def test_b_value_oracles():
    z = geo.north_pole(1)
    assert b_value(z, z, 3) == pytest.approx(7 / (2 * math.pi), rel=1e-14)
    for d in (1, 2, 3, 4):
        zd = geo.north_pole(d)
        assert b_value(zd, zd, 6) == pytest.approx(harmonic_dim(6, d + 2) / sphere_area(d), rel=1e-12)
    x = geo.basis_vector(1, 0)
    assert b_value(x, z, 2) == pytest.approx(-1 / (2 * math.pi), abs=1e-14)


@settings(max_examples=40)
@given(st.integers(1, 40), st.integers(1, 3), st.integers(0, 2 ** 31))
def test_b_value_routes_agree(N, d, seed):
    x, z = geo.sample_uniform(d, 2, seed)
    a, b = b_value(x, z, N), b_value_legendre(x, z, N)
    assert abs(a - b) <= 1e-8 * max(abs(b), 1e-3 * peak_b(N, d))
    if d == 1:
        assert abs(a - b_value_dirichlet(x, z, N)) <= 1e-8 * peak_b(N, d)


def test_hard_function_peak_and_antipode():
    z = geo.north_pole(1)
    for N in range(1, 9):
        f = HardFunction(z, 0.3, N, KP1)
        assert f(z) == pytest.approx(0.6, rel=1e-14)
        assert f(-z) == pytest.approx(0.6 * (-1) ** N / (2 * N + 1), rel=1e-12)


def test_hard_function_validation():
    with pytest.raises(DomainError):
        HardFunction(geo.north_pole(1), 0.1, 0, KP1)
    with pytest.raises(DomainError):
        HardFunction(geo.north_pole(2), 0.1, 3, KP1)
    with pytest.raises(DomainError):
        HardFunction(geo.north_pole(1), -0.1, 3, KP1)


@settings(max_examples=30)
@given(st.floats(1e-6, 10.0), st.floats(0.1, 5.0), st.integers(1, 30))
def test_hard_function_linear_and_bounded(eps, c, N):
    z = geo.north_pole(2)
    x = geo.sample_uniform(2, 64, N)
    f, g = HardFunction(z, eps, N, KP2), HardFunction(z, c * eps, N, KP2)
    assert np.allclose(g(x), c * f(x), rtol=1e-12, atol=0)
    assert np.all(np.abs(f(x)) <= 2 * eps * (1 + 1e-9))


def test_measure_width_N1_root():
    f = HardFunction(geo.north_pole(1), 1.0, 1, KP1)
    grid = 100_000
    rs = measure_width(f, grid)
    assert abs(rs - math.acos(0.25)) <= math.pi / grid + 1e-12


def test_measure_width_circle_bound():
    for N in range(2, 65):
        rs = measure_width(HardFunction(geo.north_pole(1), 1.0, N, KP1), 4000)
        assert rs <= math.pi / N + math.pi / 4000


def test_measure_width_grid_guard():
    with pytest.raises(DomainError):
        measure_width(HardFunction(geo.north_pole(1), 1.0, 3, KP1), 999)


def test_build_class_d1(spectrum_d1):
    fc = build_class(1e-4, 1.0, KP1, spectrum_d1)
    assert fc.member_norm <= 1.0 / 3
    assert fc.functions[0].norm(spectrum_d1) == pytest.approx(fc.member_norm)
    assert fc.w == pytest.approx(2 * fc.rho_star)
    assert fc.centers.min_separation() > fc.w
    other = build_class(1e-4, 1.0, KP1, spectrum_d1, seed=5)
    assert (other.N, other.w) == (fc.N, fc.w)
    assert exclusivity_violations(fc, 5000) == 0


def test_build_class_requires_small_eps(spectrum_d1):
    with pytest.raises(RangeError):
        build_class(0.2, 1.0, KP1, spectrum_d1)


def test_class_serialization(spectrum_d1):
    fc = build_class(1e-3, 1.0, KP1, spectrum_d1)
    payload = fc.to_dict()
    assert payload["members"] == len(fc) and payload["N_bar"] == fc.N


def test_sup_sum_single_member():
    f = HardFunction(geo.north_pole(1), 0.1, 4, KP1)
    sep = geo.SeparatedSet(np.array([geo.north_pole(1)]), 1.0)
    fc = FunctionClass((f,), sep, geo.build_partition(sep), 1.0, 1.0, 0.1, 4, KP1, 0.5, 0.1)
    assert sup_sum_ratio(fc, 0, 1000) <= 4 + 1e-9


def test_sup_sum_terms_guard(spectrum_d1):
    fc = build_class(1e-3, 1.0, KP1, spectrum_d1)
    with pytest.raises(DomainError):
        sup_sum_terms(fc, 0, 10)
    st_ = sup_sum_terms(fc, 0, 1000)
    assert 3.99 <= st_.terms[0] <= 4.0 + 1e-9


def test_adversarial_pair(spectrum_d1):
    fc = build_class(1e-3, 1.0, KP1, spectrum_d1)
    i, j = 0, 3
    f, ft = adversarial_pair(fc, i, j)
    zi, zj = fc.centers.centers[i], fc.centers.centers[j]
    eps = fc.eps
    assert ft(zj) - f(zj) == pytest.approx(4 * eps)
    assert abs(ft(zi) - f(zi)) < 2 * eps
    x = geo.sample_uniform(1, 20_000, 0)
    x = np.vstack([x, fc.centers.centers])
    assert fc.partition.assign(x[np.argmax(ft(x))]) == j
    f2, ft2 = adversarial_pair(fc, 1, 1, allow_self=True)
    assert f2 is ft2
    with pytest.raises(IndexError):
        adversarial_pair(fc, 1, 1)
    with pytest.raises(IndexError):
        adversarial_pair(fc, 0, len(fc))


def test_gaussian_params():
    gp = GaussianBaselineParams(0.5, 2.0)
    assert gp.a == pytest.approx(1.0) and gp.b == pytest.approx(0.5)
    assert gp.c == pytest.approx(math.sqrt(2.0))
    assert 0 < gp.Bg < 1


def test_gaussian_eigenfunctions_orthonormal():
    gp = GaussianBaselineParams(1.0, 1.0)
    x, w = np.polynomial.hermite_e.hermegauss(120)
    wts = w / math.sqrt(2 * math.pi)  # N(0, 1) measure
    G = np.array([[np.sum(wts * gp.eigenfunction(m, x) * gp.eigenfunction(n, x)) for n in range(8)] for m in range(8)])
    assert np.allclose(G, np.eye(8), atol=1e-10)


def test_gaussian_closed_form_matches_sum():
    gp = GaussianBaselineParams(1.0, 1.0)
    xs = np.linspace(-3, 3, 301)
    for N in range(31):
        direct = gaussian_baseline_sum(xs, N, gp)
        peak = gaussian_baseline(0.0, N, gp)
        assert peak > 0
        assert np.max(np.abs(gaussian_baseline(xs, N, gp) - direct)) <= 1e-7 * peak


def test_gaussian_odd_branch():
    gp = GaussianBaselineParams(1.0, 1.0)
    # with H_N(0) = 0 the closed form keeps only the -H_N(u) H_{N+1}(0) term
    assert gaussian_baseline(0.7, 5, gp) == pytest.approx(gaussian_baseline_sum(0.7, 5, gp), rel=1e-10)


def test_gaussian_domain():
    gp = GaussianBaselineParams(1.0, 1.0)
    with pytest.raises(DomainError):
        gaussian_baseline(0.1, 3, gp, d=2)


def test_gaussian_half_width_band():
    gp = GaussianBaselineParams(1.0, 1.0)
    hw = [gaussian_half_width(N, gp) * math.sqrt(N) for N in range(4, 65)]
    assert max(hw) / min(hw) <= 2
