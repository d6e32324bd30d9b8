import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacobidecay import (
    BarrierLayout,
    Constant,
    Example1,
    Example2,
    IndexOutOfWindow,
    LayoutOverlap,
    NonPositiveWeight,
    PowerModulated,
    PowerPeriodic,
    Table,
    apply_operator,
    carleman_sum,
    flip_slice,
    rank_one_perturb,
    sample_operator,
    spec_from_json,
    spec_to_json,
    truncate,
    weight_lower_bound_from,
)

MODELS = [
    Constant(1.0, 0.0),
    Constant(2.5, -0.75),
    Example1(3.0, 1.0),
    Example1(-0.5, 0.5),
    Example2(),
    PowerPeriodic(0.5, 2.0, 1.0),
    PowerModulated(alpha=0.5, gamma=0.2, T=1.0, c1=2.0, c2=1.0),
    Table(weights_head=(2.0, 3.0), diags_head=(1.0,), tail=Example2()),
]


def test_sample_operator_examples():
    assert sample_operator(Example1(3, 1), 2) == (3.0, 0.0)
    assert sample_operator(Example2(), 5) == (5.0, -10.0)
    pm = PowerModulated(alpha=0.5, gamma=0.2, T=1.0, c1=2.0, c2=1.0)
    lam1, q1 = sample_operator(pm, 1)
    assert lam1 == pytest.approx(1.0, abs=1e-12)  # phi(1) = 0 at the period point
    assert q1 == 0.0
    assert sample_operator(Example1(3, 1), 0) == (1.0, 0.0)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        Example1(1.0, 1.0)
    with pytest.raises(NonPositiveWeight):
        Example1(-1.5, 0.0)
    with pytest.raises(ValueError):
        PowerModulated(alpha=0.5, gamma=0.3, T=1.0, c1=2.0, c2=1.0)  # gamma too big
    with pytest.raises(NonPositiveWeight):
        truncate(Constant(-1.0), 1, 3)


@given(st.integers(min_value=1, max_value=10**6), st.sampled_from(range(len(MODELS))))
@settings(max_examples=60, deadline=None)
def test_sampling_is_pure(n, model_idx):
    spec = MODELS[model_idx]
    first = sample_operator(spec, n)
    again = sample_operator(spec, n)
    assert first == again  # bit-identical


def test_vector_and_scalar_sampling_agree():
    idx = np.arange(1, 200)
    for spec in MODELS:
        lam = spec.weights(idx)
        q = spec.diags(idx)
        for n in (1, 2, 7, 100, 199):
            assert lam[n - 1] == spec.weight(n)
            assert q[n - 1] == spec.diag(n)


def test_truncate_examples():
    s = truncate(Constant(1.0, 0.0), 1, 3)
    assert np.array_equal(s.diag, [0, 0, 0]) and np.array_equal(s.offdiag, [1, 1])
    s = truncate(Example1(3, 1), 1, 2)
    assert np.array_equal(s.diag, [0, 0]) and np.array_equal(s.offdiag, [4])
    s = truncate(Example2(), 2, 4)
    assert np.array_equal(s.diag, [-4, -6, -8]) and np.array_equal(s.offdiag, [2, 3])


def test_truncate_matches_sampling_exactly():
    for spec in MODELS:
        s = truncate(spec, 3, 40)
        for i, n in enumerate(range(3, 41)):
            assert s.diag[i] == sample_operator(spec, n)[1]
        for i, n in enumerate(range(3, 40)):
            assert s.offdiag[i] == sample_operator(spec, n)[0]


def test_flip_slice_negates_diagonal_only():
    s = truncate(Example2(), 1, 5)
    f = flip_slice(s)
    assert np.array_equal(f.diag, -s.diag)
    assert np.array_equal(f.offdiag, s.offdiag)


def test_carleman_sum_examples():
    assert carleman_sum(Constant(1.0), 5) == 4.0
    assert carleman_sum(Example1(3, 1), 3) == pytest.approx(1 / 4 + 1 / 3, rel=1e-15)
    assert carleman_sum(Example2(), 3, power=0.5) == pytest.approx(1 + 1 / math.sqrt(2), rel=1e-15)
    assert carleman_sum(Example2(), 3, start=5) == 0.0


@given(
    st.integers(min_value=1, max_value=400),
    st.integers(min_value=1, max_value=400),
    st.sampled_from(range(len(MODELS))),
)
@settings(max_examples=40, deadline=None)
def test_carleman_additivity(m, n, model_idx):
    spec = MODELS[model_idx]
    lo, hi = min(m, n), max(m, n)
    total = carleman_sum(spec, hi, start=1)
    split = carleman_sum(spec, lo, start=1) + carleman_sum(spec, hi, start=lo)
    assert total == pytest.approx(split, abs=hi * np.spacing(max(abs(total), 1.0)))


def test_carleman_nondecreasing():
    spec = Example1(3, 1)
    vals = [carleman_sum(spec, n) for n in range(1, 60)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_apply_operator_examples():
    u = np.zeros(6)
    u[1] = 1.0
    assert apply_operator(Constant(1.0), u, 2) == 1.0
    assert apply_operator(Example2(), np.array([0.0, 1, 1, 1, 1]), 2) == -1.0
    x = (3 - math.sqrt(5)) / 2
    u = x ** np.arange(8)
    u[0] = 0.0  # boundary value; interior application does not see it for n >= 2
    got = apply_operator(Constant(1.0), x ** np.arange(8.0), 5)
    assert got == pytest.approx(3 * x**5, rel=1e-14)
    with pytest.raises(IndexOutOfWindow):
        apply_operator(Constant(1.0), u, 7)


def test_apply_operator_matches_slice_matvec():
    rng = np.random.default_rng(7)
    for spec in MODELS:
        s = truncate(spec, 1, 12)
        u = rng.normal(size=14)  # u(0..13)
        v = s.matvec(u[1:13])
        for n in range(2, 12):  # interior rows of the slice
            assert apply_operator(spec, u, n) == pytest.approx(v[n - 1], rel=1e-15, abs=1e-15)


def test_rank_one_perturb():
    spec = rank_one_perturb(Constant(1.0, 0.0), 2.0)
    assert spec.diag(1) == 2.0 and spec.diag(2) == 0.0 and spec.weight(1) == 1.0
    spec = rank_one_perturb(Example2(), -1.0)
    assert spec.diag(1) == -3.0 and spec.diag(2) == -4.0
    base = Example1(3, 1)
    assert rank_one_perturb(base, 0.0) is base


def test_weight_lower_bound_certifies_infimum():
    for spec in MODELS:
        for n0 in (1, 2, 17, 500):
            bound = weight_lower_bound_from(spec, n0)
            assert bound is not None
            lam = spec.weights(np.arange(n0, n0 + 2000))
            assert np.all(lam >= bound - 1e-12)


def test_layout_invariants():
    layout = BarrierLayout((10, 40, 100), (3, 8, 20))
    assert layout.barrier(2) == (32, 48)
    assert layout.matching_region(1) == (5, 14)
    assert layout.inner_barrier(3) == (90, 110)
    assert layout.boundary_set(1) == (5, 6, 7, 13, 14, 15)
    with pytest.raises(LayoutOverlap):
        BarrierLayout((10, 20), (5, 6))
    with pytest.raises(ValueError):
        BarrierLayout((10, 5), (1, 1))


def test_layout_membership():
    layout = BarrierLayout((10, 40), (3, 8))
    n = np.arange(1, 60)
    member = layout.in_matching_region(n)
    expected = ((n >= 5) & (n <= 14)) | ((n >= 30) & (n <= 49))
    assert np.array_equal(member, expected)


def test_table_requires_tail_beyond_head():
    spec = Table(weights_head=(2.0,), diags_head=(0.0,))
    assert spec.weight(1) == 2.0
    with pytest.raises(IndexOutOfWindow):
        spec.weight(2)


@given(st.sampled_from(range(len(MODELS))))
@settings(max_examples=len(MODELS), deadline=None)
def test_json_round_trip(model_idx):
    spec = MODELS[model_idx]
    clone = spec_from_json(spec_to_json(spec))
    idx = np.arange(1, 1001)
    assert np.array_equal(clone.weights(idx), spec.weights(idx))
    assert np.array_equal(clone.diags(idx), spec.diags(idx))


def test_json_round_trip_composite():
    layout = BarrierLayout((50, 200), (5, 20))
    spec = spec_from_json(
        {
            "type": "BarrierComposite",
            "base": {"type": "Example1", "c1": 3, "c2": 1},
            "layout": layout.to_json(),
            "inside": {"type": "Constant", "lambda": 1.0, "q": 0.0},
        }
    )
    idx = np.arange(1, 300)
    lam = spec.weights(idx)
    inside = ~layout.in_matching_region(idx)
    assert np.array_equal(lam[~inside], Example1(3, 1).weights(idx[~inside]))
    assert np.all(lam[inside] == 1.0)


def test_register_custom_phi_rule():
    from jacobidecay import register_phi

    register_phi("triangle", lambda T: (lambda x: 2.0 * np.abs(x / T - np.floor(x / T + 0.5))))
    spec = PowerModulated(alpha=0.5, gamma=0.2, T=1.0, c1=2.0, c2=1.0, phi="triangle")
    assert spec.weight(1) == pytest.approx(1.0)  # phi(1) = 0 for the triangle too
    clone = spec_from_json(spec_to_json(spec))
    idx = np.arange(1, 500)
    assert np.array_equal(clone.weights(idx), spec.weights(idx))
