import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardsphere import geometry as geo
from hardsphere.exceptions import DomainError, RangeError
from hardsphere.gp import (CandidatePosterior, GPDataset, PosteriorState, greedy_mig, info_gain, kernel_matrix,
                           mig_bound, mig_bound_min, pivoted_cholesky, posterior, se_kernel, select_M,
                           spectral_tail, theory_rate)
from hardsphere.special import harmonic_dim


def test_se_kernel_oracles():
    x, y = geo.basis_vector(2, 0), geo.basis_vector(2, 1)
    assert se_kernel(x, x, 1.0) == pytest.approx(1.0)
    assert se_kernel(x, -x, 1.0) == pytest.approx(math.exp(-4))
    assert se_kernel(x, y, 2.0) == pytest.approx(math.exp(-1))


def test_posterior_oracles():
    empty = GPDataset(np.empty((0, 3)), np.empty(0), 0.1)
    assert posterior(empty, 1.0, geo.north_pole(2)) == (0.0, 1.0)
    x1 = geo.north_pole(2)
    nv = 0.25
    ds = GPDataset(x1[None], np.array([0.8]), nv)
    m, v = posterior(ds, 1.0, x1)
    assert m == pytest.approx(0.8 / (1 + nv), rel=1e-8)
    assert v == pytest.approx(1 - 1 / (1 + nv), rel=1e-7)
    m, v = posterior(ds, 0.01, -x1)
    assert abs(m) < 1e-12 and v == pytest.approx(1.0)


def test_dataset_validation():
    with pytest.raises(DomainError):
        GPDataset(np.zeros((2, 2)), np.zeros(3), 0.1)
    with pytest.raises(DomainError):
        GPDataset(np.zeros((1, 2)), np.zeros(1), 0.0)


def test_info_gain_oracles():
    nv = 0.5
    assert info_gain(GPDataset(np.empty((0, 2)), np.empty(0), nv), 1.0) == 0.0
    x = geo.north_pole(1)
    assert info_gain(GPDataset(x[None], np.zeros(1), nv), 1.0) == pytest.approx(0.5 * math.log(1 + 1 / nv), rel=1e-8)
    T = 7
    ds = GPDataset(np.repeat(x[None], T, axis=0), np.zeros(T), nv)
    assert info_gain(ds, 1.0) == pytest.approx(0.5 * math.log(1 + T / nv), rel=1e-6)


def test_incremental_logdet():
    st_ = PosteriorState(1.0, 0.1)
    for row in geo.sample_uniform(2, 200, 3):
        st_.append(row, 0.0)
    assert abs(st_.log_det - st_.fresh_log_det()) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.05, 2.0))
def test_incremental_matches_batch(seed, nv):
    X = geo.sample_uniform(2, 25, seed)
    y = np.sin(X[:, 0])
    st_ = PosteriorState(1.0, nv)
    for row, v in zip(X, y):
        st_.append(row, v)
    Q = geo.sample_uniform(2, 10, seed + 1)
    m1, v1 = st_.predict(Q)
    m2, v2 = PosteriorState.from_dataset(GPDataset(X, y, nv), 1.0).predict(Q)
    assert np.allclose(m1, m2, atol=1e-8) and np.allclose(v1, v2, atol=1e-8)
    assert np.all((v1 > 0) & (v1 <= 1))


def test_pivoted_cholesky_accuracy():
    C = geo.sample_uniform(2, 300, 0)
    F = pivoted_cholesky(C, 1.0, 1e-12)
    K = kernel_matrix(C, C, 1.0)
    assert np.max(np.abs(K - F @ F.T)) < 1e-9
    assert F.shape[1] < 300


def test_candidate_posterior_matches_exact():
    C = geo.sample_uniform(1, 400, 1)
    nv = 0.01
    cp = CandidatePosterior(C, 1.0, nv)
    st_ = PosteriorState(1.0, nv)
    rng = np.random.default_rng(0)
    for k in rng.integers(0, 400, 30):
        y = float(rng.normal())
        cp.update(int(k), y)
        st_.append(C[k], y)
    m, v = st_.predict(C)
    assert np.allclose(cp.mean(), m, atol=1e-7)
    assert np.allclose(cp.var, v, atol=1e-8)
    cp2 = cp.copy()
    cp2.update(0, 1.0)
    assert cp.count == 30 and cp2.count == 31


def test_greedy_single_step():
    C = geo.sample_uniform(2, 50, 0)
    g = greedy_mig(1, C, 1.0, 0.3)
    assert g.total == pytest.approx(0.5 * math.log(1 + 1 / 0.3))
    assert g.indices[0] == 0  # all variances tie at 1


@pytest.mark.parametrize("method", ["exact", "lowrank"])
def test_greedy_submodular(method):
    C = geo.sample_uniform(1, 1024, 2)
    g = greedy_mig(100, C, 1.0, 1.0, method=method)
    inc = g.increments()
    assert np.all(inc > 0) and np.all(np.diff(inc) <= 1e-12)


def test_greedy_methods_close():
    C = geo.sample_uniform(1, 1024, 2)
    a = greedy_mig(100, C, 1.0, 1.0, method="exact").total
    b = greedy_mig(100, C, 1.0, 1.0, method="lowrank").total
    assert abs(a - b) < 1e-2 * a


def test_greedy_guards():
    C = geo.sample_uniform(1, 10, 0)
    with pytest.raises(DomainError):
        greedy_mig(11, C, 1.0, 1.0)
    with pytest.raises(DomainError):
        greedy_mig(2, C, 1.0, 1.0, method="nope")


def test_mig_bound_dominates_greedy(spectrum_d1):
    C = geo.sample_uniform(1, 4096, 0)
    g = greedy_mig(256, C, 1.0, 1.0)
    for T in (16, 64, 256):
        b, M = mig_bound_min(T, spectrum_d1, 1.0)
        assert b >= g.gains[T - 1]


def test_mig_bound_limits(spectrum_d1):
    T = 100
    tail = spectral_tail(spectrum_d1)
    assert mig_bound(T, 60, spectrum_d1, 1.0, tail) == pytest.approx(harmonic_dim(60, 3) * math.log1p(T), rel=1e-10)
    m0 = mig_bound(T, 0, spectrum_d1, 1.0, tail)
    assert m0 > math.log1p(T)
    with pytest.raises(RangeError):
        mig_bound(T, 61, spectrum_d1, 1.0)


def test_select_M_oracle():
    assert select_M(math.exp(math.e), 1, 1.0) == 3
    with pytest.raises(DomainError):
        select_M(2, 1)


def test_select_M_band():
    vals = [select_M(math.exp(k), 1) * math.log(k) / k for k in range(3, 30)]
    assert max(vals) / min(vals) <= 2


def test_theory_rate():
    T = 1000
    L = math.log(T)
    assert theory_rate(T, 2) == pytest.approx(L ** 3 / math.log(L) ** 2)
