import math

import numpy as np
import pytest

from jacobidecay import Example1, PowerModulated, PowerPeriodic, truncate
from jacobidecay.barriers import barrier_caps, criterion_partial_sum
from jacobidecay.errors import PhaseNotFound
from jacobidecay.mobility import (
    default_weyl_spec,
    derive_barrier_layout,
    gap_count_J0,
    stabilized_spectrum,
    weyl_quotient,
    weyl_sequence,
)
from jacobidecay.models import rank_one_perturb
from jacobidecay.solutions import fit_asymptotics, recurrence_extend

PM = PowerModulated(alpha=0.5, gamma=0.2, T=1.0, c1=2.0, c2=1.0)
EPS_PHASE = math.acos(0.75) / (2 * math.pi) * 0.999  # keeps phi >= 0.875 on the window


def test_default_weyl_spec_admissible():
    for i in (2, 5, 11):
        ws = default_weyl_spec(PM, i)
        assert ws.delta_i % 2 == 0
        eps_i = float(i) ** ((PM.alpha + PM.gamma - 1.0) / PM.gamma + ws.delta)
        lower = eps_i * ws.n_i ** (1.0 - PM.gamma)
        upper = ws.M * ws.n_i ** (1.0 - PM.gamma - ws.eps)
        assert lower <= ws.delta_i <= upper + 2
        assert 0.0 < ws.delta < (1.0 - PM.alpha - PM.gamma) / PM.gamma
        assert 0.0 < ws.eps < 1.0 - PM.alpha - PM.gamma - PM.gamma * ws.delta
    assert default_weyl_spec(PM, 3).n_i == 3**5  # x_i = (x0 + i T)^(1/gamma)
    with pytest.raises(PhaseNotFound):
        default_weyl_spec(PM, 3, x0=0.5)  # phi(1/2) = 1, not a zero


def test_gap_count_reference_operator():
    empty = gap_count_J0(0.5, 2.0, 1.0, 500, 1.0, margin=1.0)
    assert empty.count_N == empty.count_2N == 0
    rep = gap_count_J0(0.5, 2.0, 1.0, 2000, 1.0, margin=0.02)
    assert rep.stabilized
    assert rep.count_N == 0  # clean window for these parameters
    assert rep.count_N >= 0 and rep.count_2N >= 0


def test_weyl_sequence_tent_geometry():
    ws = default_weyl_spec(PM, 4)
    u = np.ones(ws.delta_i + 1)
    v = weyl_sequence(u, ws)
    assert v[0] == 0.0 and v[-1] == 0.0  # exact endpoint zeros
    assert v[ws.delta_i // 2] == 1.0  # peak value u at the centre
    assert np.all(v >= 0.0) and np.max(v) == 1.0


def test_weyl_sequence_norm_scale():
    """||v||^2 is comparable to Delta_i * n_i^(-alpha), uniformly in i.

    The measured proportionality constant (frozen from the run) collects
    the reference-solution amplitude, the mean square of its oscillation
    and the 1/3 from the squared tent profile.
    """
    ratios = []
    for i in (4, 8, 12):
        ws = default_weyl_spec(PM, i)
        ref = PowerPeriodic(alpha=PM.alpha)
        track = recurrence_extend(ref, 0.0, 0.0, 1.0, ws.n_i + ws.delta_i + 1)
        u = track.true_values().real[ws.n_i : ws.n_i + ws.delta_i + 1]
        norm2 = float(np.sum(weyl_sequence(u, ws) ** 2))
        ratios.append(norm2 / (ws.delta_i * ws.n_i ** (-PM.alpha)))
    assert all(0.10 <= r <= 0.18 for r in ratios)
    assert max(ratios) / min(ratios) < 1.1  # the comparability is uniform in i


def test_weyl_quotient_positive_and_decreasing():
    values = [weyl_quotient(PM, 0.0, default_weyl_spec(PM, i)) for i in range(2, 12)]
    assert all(v > 0.0 and math.isfinite(v) for v in values)
    assert all(values[j + 2] < values[j] for j in range(len(values) - 2))


def test_weyl_quotient_ignores_rank_one_perturbation():
    """The window sits far from the first row, so q_1 never enters."""
    ws = default_weyl_spec(PM, 3)
    assert ws.n_i > 2
    base_q = weyl_quotient(PM, 0.5, ws)
    # direct check through the full matrix application of the perturbed slice
    ref = PowerPeriodic(alpha=PM.alpha)
    track = recurrence_extend(ref, 0.5, 0.0, 1.0, ws.n_i + ws.delta_i + 1)
    u = track.true_values().real
    n_lo, n_hi = ws.support
    for coupling in (0.0, 37.0):
        spec = rank_one_perturb(PM, coupling)
        s = truncate(spec, 1, n_hi + 2)
        v = np.zeros(n_hi + 2)
        v[n_lo - 1 : n_hi] = weyl_sequence(u[n_lo : n_hi + 1], ws)  # slice offset: row n -> index n-1
        image = s.matvec(v) - 0.5 * v
        got = float(np.linalg.norm(image) / np.linalg.norm(v))
        assert got == pytest.approx(base_q, rel=1e-12)


def test_derive_barrier_layout_geometry():
    layout, composite = derive_barrier_layout(PM, (-0.5, 0.5), 0.5, EPS_PHASE, k_max=26)
    ks = np.arange(len(layout)) + (26 - len(layout)) + 1  # generated phase indices
    centers = np.asarray(layout.centers, dtype=float)
    predicted = (0.5 + ks) ** 5
    # the first barrier is still strongly affected by integer rounding
    assert np.max(np.abs(centers[1:] / predicted[1:] - 1.0)) < 0.02
    assert abs(centers[0] / predicted[0] - 1.0) < 0.05
    # l_k / Lambda_k grows like k^((1-alpha)/gamma - 1) = k^1.5 in the phase index
    caps = barrier_caps(PM, layout)
    ratio = np.asarray(layout.half_lengths) / caps
    fit = fit_asymptotics(ratio, (int(ks[2]), int(ks[-1])), ("1", "log_n"), n0=int(ks[0]))
    assert fit.coefficient("log_n") == pytest.approx(1.5, rel=0.1)


def test_derive_barrier_layout_deviation_bound():
    layout, composite = derive_barrier_layout(PM, (-0.5, 0.5), 0.5, EPS_PHASE, k_max=8)
    reference = PowerPeriodic(alpha=PM.alpha, c1=PM.c1, c2=PM.c2)
    delta_e = 0.5
    for k in (1, len(layout)):
        lo, hi = layout.matching_region(k)
        idx = np.arange(max(lo, 1), hi + 1)
        dev = np.abs(composite.weights(idx) - reference.weights(idx))
        assert np.max(dev) <= delta_e / 2 + 1e-12
    # off the barriers the composite *is* the reference
    between = np.arange(layout.matching_region(1)[1] + 1, layout.matching_region(2)[0])
    assert np.array_equal(composite.weights(between), reference.weights(between))


def test_derive_barrier_layout_phase_errors():
    with pytest.raises(PhaseNotFound):
        derive_barrier_layout(PM, (-0.5, 0.5), 0.25, EPS_PHASE, k_max=6)  # phi(0.25) != 1
    with pytest.raises(PhaseNotFound):
        derive_barrier_layout(PM, (-0.5, 0.5), 0.5, 0.4, k_max=6)  # floor violated


def test_derived_layout_satisfies_criterion():
    layout, _ = derive_barrier_layout(PM, (-0.5, 0.5), 0.5, EPS_PHASE, k_max=16)
    caps = barrier_caps(PM, layout)
    report = criterion_partial_sum(layout, caps, 1.0, len(layout) - 1)
    assert report.verdict == "CONVERGENT_EVIDENCE"


def test_stabilized_spectrum_gap_is_empty():
    assert stabilized_spectrum(Example1(3, 1), (-1.5, 1.5), 1200).size == 0
    assert stabilized_spectrum(PowerPeriodic(0.5, 2.0, 1.0), (-0.9, 0.9), 1500).size == 0


def test_stabilized_spectrum_finds_bound_state():
    pert = rank_one_perturb(Example1(3, 1), 8.0)
    found = stabilized_spectrum(pert, (-1.95, 1.95), 1200)
    assert found.size == 1
    assert found[0] == pytest.approx(-1.12507, abs=1e-4)
