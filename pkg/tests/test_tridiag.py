import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacobidecay import (
    Constant,
    Example1,
    NearSingular,
    SpectrumQuery,
    TridiagonalSlice,
    distance_to_spectrum,
    eigs_in_window,
    resolvent_column,
    sturm_count,
    tridiag_norm_bound,
    truncate,
)
from oracles import charpoly_eigenvalues, dense_opnorm, dense_resolvent_column


def _pauli_x():
    return TridiagonalSlice(1, 2, np.zeros(2), np.ones(1))


def _random_slice(rng, n, integer=False):
    if integer:
        diag = rng.integers(-5, 6, size=n).astype(float)
        off = rng.integers(1, 6, size=n - 1).astype(float)
    else:
        diag = rng.normal(scale=3.0, size=n)
        off = np.abs(rng.normal(scale=2.0, size=n - 1)) + 0.05
    return TridiagonalSlice(1, n, diag, off)


def test_sturm_count_examples():
    assert sturm_count(_pauli_x(), 0.0) == 1
    free3 = truncate(Constant(1.0), 1, 3)
    assert sturm_count(free3, 0.5) == 2
    rng = np.random.default_rng(0)
    s = _random_slice(rng, 9)
    below_everything = -(np.max(np.abs(s.diag)) + 2 * np.max(s.offdiag)) - 1.0
    assert sturm_count(s, below_everything) == 0
    assert sturm_count(s, -below_everything) == 9


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=30, deadline=None)
def test_sturm_count_monotone(seed):
    rng = np.random.default_rng(seed)
    s = _random_slice(rng, 8)
    xs = np.sort(rng.normal(scale=8.0, size=12))
    counts = [sturm_count(s, x) for x in xs]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_eigs_in_window_examples():
    eigs = eigs_in_window(SpectrumQuery(_pauli_x(), 1e-12), -2.0, 2.0)
    assert eigs == pytest.approx([-1.0, 1.0], abs=1e-11)
    free8 = truncate(Constant(1.0), 1, 8)
    eigs = eigs_in_window(SpectrumQuery(free8, 1e-12), -2.0, 2.0)
    exact = np.sort(2 * np.cos(np.arange(1, 9) * np.pi / 9))
    assert eigs == pytest.approx(exact, abs=1e-11)


def test_eigs_match_charpoly_oracle():
    rng = np.random.default_rng(42)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        s = _random_slice(rng, n, integer=True)
        expected = charpoly_eigenvalues(s.diag, s.offdiag)
        got = eigs_in_window(SpectrumQuery(s, 1e-13), expected[0] - 1.0, expected[-1] + 1.0)
        assert got.shape == expected.shape
        assert np.max(np.abs(got - expected)) < 1e-10


def test_distance_to_spectrum_examples():
    assert distance_to_spectrum(TridiagonalSlice(1, 1, np.zeros(1), np.empty(0)), 0.7) == pytest.approx(0.7, abs=1e-11)
    assert distance_to_spectrum(_pauli_x(), 0.0) == pytest.approx(1.0, abs=1e-11)
    free8 = truncate(Constant(1.0), 1, 8)
    assert distance_to_spectrum(free8, 0.0) == pytest.approx(2 * abs(np.cos(5 * np.pi / 9)), abs=1e-10)


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=25, deadline=None)
def test_distance_matches_dense(seed):
    rng = np.random.default_rng(seed)
    s = _random_slice(rng, 7)
    e = float(rng.normal(scale=4.0))
    exact = float(np.min(np.abs(np.linalg.eigvalsh(s.as_dense()) - e)))
    assert distance_to_spectrum(s, e) == pytest.approx(exact, abs=1e-9)


def test_resolvent_column_examples():
    one = TridiagonalSlice(1, 1, np.asarray([2.0]), np.empty(0))
    col = resolvent_column(one, 5.0)
    assert col.values[0] == pytest.approx(1.0 / (2.0 - 5.0), rel=1e-14)
    col = resolvent_column(_pauli_x(), 3.0)
    assert col.values == pytest.approx([-3 / 8, -1 / 8], rel=1e-14)
    free = truncate(Constant(1.0), 1, 512)
    col = resolvent_column(free, 3.0)
    ratios = col.values[100:110] / col.values[99:109]
    assert ratios.real == pytest.approx((3 - np.sqrt(5)) / 2, rel=1e-10)


def test_resolvent_matches_dense_oracle():
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(2, 65))
        s = _random_slice(rng, n)
        z = complex(rng.normal(scale=2.0), rng.choice([-1, 1]) * (0.1 + rng.random()))
        col = resolvent_column(s, z)
        expected = dense_resolvent_column(s, z)
        scale = np.max(np.abs(expected))
        assert np.max(np.abs(col.values - expected)) <= 1e-10 * scale


def test_resolvent_near_singular_guard():
    s = _pauli_x()  # eigenvalues +-1
    with pytest.raises(NearSingular):
        resolvent_column(s, 1.0 + 1e-13)
    col = resolvent_column(s, 1.0 + 1e-6)  # outside the guard: fine
    assert np.isfinite(col.values).all()


def test_resolvent_residual_certificate():
    col = resolvent_column(truncate(Example1(3, 1), 1, 2000), 0.5)
    s = truncate(Example1(3, 1), 1, 2000)
    assert col.residual <= 1e-10 * (1 + 0.5 + s.entry_scale())


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=25, deadline=None)
def test_herglotz_property(seed):
    rng = np.random.default_rng(seed)
    s = _random_slice(rng, 24)
    z = complex(rng.normal(scale=2.0), 0.05 + rng.random())
    col = resolvent_column(s, z)
    assert col.values[0].imag > 0.0


def test_norm_bound_examples():
    assert tridiag_norm_bound([], [0.0], []) == 0.0
    assert tridiag_norm_bound([0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0]) == 0.0
    assert tridiag_norm_bound([1.0], [0.0, 0.0], [1.0]) == 1.0
    assert tridiag_norm_bound([1.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0]) == 1.0


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=40, deadline=None)
def test_norm_bound_dominates_dense_norm(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 33))
    lower = rng.normal(size=n - 1)
    diag = rng.normal(size=n)
    upper = rng.normal(size=n - 1)
    dense = np.diag(diag)
    idx = np.arange(n - 1)
    dense[idx + 1, idx] = lower
    dense[idx, idx + 1] = upper
    assert tridiag_norm_bound(lower, diag, upper) >= dense_opnorm(dense) - 1e-12


def test_bisection_terminates_at_large_magnitudes():
    """Tolerance below the local float spacing must not stall the sweep."""
    from jacobidecay import Example2, truncate
    from jacobidecay.models import flip_slice

    s = flip_slice(truncate(Example2(), 1, 4000))  # spectrum up to ~1.6e4
    d = distance_to_spectrum(s, 15999.0, tol=1e-12)
    assert np.isfinite(d) and d > 0.0
