"""Mobility-edge model: slowly modulated power weights.

The weights lambda_n = n**alpha + c_n phi(n**gamma) interpolate between
the pure power operator (where phi vanishes, spectrum all of the line)
and the two-periodically shifted operator (where phi peaks, spectral
window of half-width c = |c1 - c2|).  Three numerical mechanisms are
implemented:

* Weyl sequences supported where phi nearly vanishes show that every
  real energy stays in the spectrum (tent-windowed copies of a
  reference solution of the pure power operator);
* two-step transfer products with negative limiting discriminant imply
  non-subordinate solution behaviour for |lambda| > c;
* where phi nearly peaks the operator matches a gapped reference, which
  yields the barrier layout feeding the many-barriers criterion inside
  (-c, c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PhaseNotFound
from .models import (
    BarrierComposite,
    BarrierLayout,
    ModelSpec,
    PowerModulated,
    PowerPeriodic,
    truncate,
)
from .solutions import recurrence_extend
from .tridiag import SpectrumQuery, eigs_in_window, sturm_counts

__all__ = [
    "WeylSequenceSpec",
    "GapCountReport",
    "default_weyl_spec",
    "gap_count_J0",
    "weyl_sequence",
    "weyl_quotient",
    "derive_barrier_layout",
    "stabilized_spectrum",
]


@dataclass(frozen=True)
class WeylSequenceSpec:
    """Window data for the i-th member of the Weyl sequence.

    The window I_i = [n_i, n_i + Delta_i] sits where the modulation
    phase passes its zero x0: n_i = floor(x_i) with x_i**gamma = x0 + i T.
    Delta_i is even, beta_i = 2 / Delta_i, and the admissible width
    range is eps_i n_i^(1-gamma) <= Delta_i <= M n_i^(1-gamma-eps) with
    eps_i = i^((alpha+gamma-1)/gamma + delta).
    """

    i: int
    x0: float
    n_i: int
    delta_i: int
    delta: float
    M: float
    eps: float

    def __post_init__(self):
        if self.delta_i % 2 != 0 or self.delta_i < 2:
            raise ValueError("Delta_i must be a positive even integer")

    @property
    def beta_i(self) -> float:
        return 2.0 / self.delta_i

    @property
    def center(self) -> int:
        return self.n_i + self.delta_i // 2

    @property
    def support(self) -> tuple[int, int]:
        return self.n_i, self.n_i + self.delta_i


def default_weyl_spec(
    spec: PowerModulated,
    i: int,
    x0: float = 0.0,
    M: float = 4.0,
    delta: Optional[float] = None,
    eps: Optional[float] = None,
) -> WeylSequenceSpec:
    """Window at the centre of the admissible parameter region.

    delta defaults to half its upper limit (1 - alpha - gamma)/gamma and
    eps to half of 1 - alpha - gamma - gamma*delta; Delta_i is the
    smallest even integer above eps_i n_i^(1-gamma), capped by
    M n_i^(1-gamma-eps).
    """
    a, g = spec.alpha, spec.gamma
    if delta is None:
        delta = 0.5 * (1.0 - a - g) / g
    if eps is None:
        eps = 0.5 * (1.0 - a - g - g * delta)
    if not 0.0 < delta < (1.0 - a - g) / g:
        raise ValueError("delta outside (0, (1-alpha-gamma)/gamma)")
    if not 0.0 < eps < 1.0 - a - g - g * delta:
        raise ValueError("eps outside (0, 1-alpha-gamma-gamma*delta)")
    phi = spec.phi_fn()
    if abs(float(phi(np.asarray([x0]))[0])) > 1e-12:
        raise PhaseNotFound(f"phi({x0}) != 0; the window must sit at a modulation zero")
    x_i = (x0 + i * spec.T) ** (1.0 / g)
    n_i = int(math.floor(x_i))
    if n_i < 1:
        raise ValueError(f"window index i = {i} puts the window below the lattice")
    eps_i = float(i) ** ((a + g - 1.0) / g + delta)
    width = eps_i * n_i ** (1.0 - g)
    cap = M * n_i ** (1.0 - g - eps)
    delta_i = max(2, 2 * int(math.ceil(width / 2.0)))
    cap_even = max(2, 2 * int(math.floor(cap / 2.0)))
    delta_i = min(delta_i, cap_even)
    return WeylSequenceSpec(i=i, x0=x0, n_i=n_i, delta_i=delta_i, delta=delta, M=M, eps=eps)


@dataclass(frozen=True)
class GapCountReport:
    N: int
    count_N: int
    count_2N: int
    window: tuple[float, float]
    margin: float

    @property
    def stabilized(self) -> bool:
        return self.count_N == self.count_2N


def gap_count_J0(alpha: float, c1: float, c2: float, N: int, c: float, margin: float = 0.0) -> GapCountReport:
    """Eigenvalue count of the truncated reference operator in (-c + margin, c - margin).

    The reference weights are n**alpha + c_n; counts at N and 2N are
    reported so stabilisation (a finite limiting count) can be checked.
    """
    if margin < 0.0 or margin > c:
        raise ValueError("margin must lie in [0, c]")
    spec = PowerPeriodic(alpha=alpha, c1=c1, c2=c2)
    lo, hi = -c + margin, c - margin
    if lo >= hi:
        return GapCountReport(N=N, count_N=0, count_2N=0, window=(lo, hi), margin=margin)
    counts = []
    for size in (N, 2 * N):
        s = truncate(spec, 1, size)
        ca, cb = sturm_counts(s, [lo, hi])
        counts.append(int(cb - ca))
    return GapCountReport(N=N, count_N=counts[0], count_2N=counts[1], window=(lo, hi), margin=margin)


def weyl_sequence(u: np.ndarray, wspec: WeylSequenceSpec) -> np.ndarray:
    """Tent-windowed copy of the reference solution over I_i.

    ``u`` holds the reference values on [n_i, n_i + Delta_i]; the tent
    1 -+ beta_i (n - center) vanishes exactly at both endpoints and
    passes through 1 at the centre.
    """
    u = np.asarray(u)
    if u.shape[0] != wspec.delta_i + 1:
        raise ValueError("u must be sampled exactly on [n_i, n_i + Delta_i]")
    n = np.arange(wspec.n_i, wspec.n_i + wspec.delta_i + 1)
    offset = n - wspec.center
    tent = 1.0 - wspec.beta_i * np.abs(offset)
    return u * tent


def weyl_quotient(spec: PowerModulated, lam: float, wspec: WeylSequenceSpec) -> float:
    """||(J - lam) v|| / ||v|| for the tent-windowed reference solution.

    The reference solution solves the pure power-weight recurrence at
    lam (forward recurrence is stable for these non-decaying solutions
    and gives |u_n| comparable to n^(-alpha/2)); the quotient is
    evaluated exactly on the support plus its 1-neighbourhood.
    """
    n_lo, n_hi = wspec.support
    reference = PowerPeriodic(alpha=spec.alpha)
    track = recurrence_extend(reference, lam, 0.0, 1.0, n_hi + 1)
    u = track.true_values().real
    v = np.zeros(n_hi + 3)
    v[n_lo : n_hi + 1] = weyl_sequence(u[n_lo : n_hi + 1], wspec)
    idx = np.arange(max(n_lo - 1, 1), n_hi + 2, dtype=np.int64)
    lam_prev = np.where(idx == 1, 1.0, spec.weights(np.maximum(idx - 1, 1)))
    lam_cur = spec.weights(idx)
    image = lam_prev * v[idx - 1] - lam * v[idx] + lam_cur * v[idx + 1]
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        raise ValueError("empty Weyl window")
    return float(np.linalg.norm(image)) / norm_v


def stabilized_spectrum(
    spec: ModelSpec,
    window: tuple[float, float],
    N: int,
    tol: float = 1e-3,
    bisect_tol: float = 1e-10,
) -> np.ndarray:
    """Eigenvalues in the window that persist between the N and 2N sections.

    Finite sections scatter spurious edge eigenvalues into spectral
    gaps; a point is kept only if the doubled section has an eigenvalue
    within ``tol`` of it.  What persists approximates the true spectrum
    in the window at desk scale.
    """
    a, b = window
    small = eigs_in_window(SpectrumQuery(truncate(spec, 1, N), bisect_tol), a, b)
    big = eigs_in_window(SpectrumQuery(truncate(spec, 1, 2 * N), bisect_tol), a, b)
    if small.size == 0 or big.size == 0:
        return np.empty(0)
    keep = [x for x in small if np.min(np.abs(big - x)) <= tol]
    return np.asarray(keep)


def derive_barrier_layout(
    spec: PowerModulated,
    window: tuple[float, float],
    x0: float,
    eps_phase: float,
    k_max: int,
    k_min: int = 1,
) -> tuple[BarrierLayout, BarrierComposite]:
    """Barrier layout at the modulation peaks, and the matching gap operator.

    For each k the phase interval [x0 + kT - eps, x0 + kT + eps] maps to
    a lattice interval; its nearest-integer centre becomes x_k and a
    quarter of its length becomes l_k, shrunk when necessary so the
    whole matching region keeps phi above the floor
    1 - delta_E / (2 max(c1, c2)).  The returned operator has the
    modulated weights on every matching region and the reference weights
    n**alpha + c_n elsewhere, hence deviates from the reference by at
    most delta_E / 2 everywhere.
    """
    alpha_e, beta_e = window
    c = spec.gap_halfwidth
    if not -c < alpha_e <= beta_e < c:
        raise ValueError("window must lie inside (-c, c)")
    delta_e = min(alpha_e + c, c - beta_e)
    floor = 1.0 - delta_e / (2.0 * max(spec.c1, spec.c2))
    phi = spec.phi_fn()
    if abs(float(phi(np.asarray([x0]))[0]) - 1.0) > 1e-12:
        raise PhaseNotFound(f"phi({x0}) != 1; barriers must sit at a modulation peak")
    probe = x0 + np.linspace(-eps_phase, eps_phase, 4097)
    if float(np.min(phi(probe))) < floor:
        raise PhaseNotFound(
            f"phi dips below the floor {floor:.6f} on [x0 - {eps_phase}, x0 + {eps_phase}]"
        )

    centers, halves = [], []
    for k in range(k_min, k_max + 1):
        lo_phase = x0 + k * spec.T - eps_phase
        hi_phase = x0 + k * spec.T + eps_phase
        lo = lo_phase ** (1.0 / spec.gamma)
        hi = hi_phase ** (1.0 / spec.gamma)
        x_k = int(round(0.5 * (lo + hi)))
        l_k = int(math.floor((hi - lo) / 4.0))
        # keep the matching region inside the integer image of the phase window
        l_k = min(l_k, x_k - 2 - int(math.ceil(lo)), int(math.floor(hi)) - 1 - x_k)
        if l_k < 1 or (halves and l_k < halves[-1]):
            if halves:
                raise PhaseNotFound(f"half-lengths stopped growing at k = {k}")
            continue
        centers.append(x_k)
        halves.append(l_k)
    if len(centers) < 2:
        raise PhaseNotFound("phase window too narrow to produce at least two barriers")
    layout = BarrierLayout(tuple(centers), tuple(halves))
    reference = PowerPeriodic(alpha=spec.alpha, c1=spec.c1, c2=spec.c2)
    composite = BarrierComposite(base=spec, layout=layout, inside=reference)
    _assert_deviation(spec, reference, layout, delta_e)
    return layout, composite


def _assert_deviation(spec, reference, layout, delta_e, sample_cap: int = 1 << 16):
    """|lambda_n^eps - reference| <= delta_E / 2 on every matching region."""
    for k in range(1, len(layout) + 1):
        lo, hi = layout.matching_region(k)
        lo = max(lo, 1)
        if hi - lo + 1 > sample_cap:
            idx = np.unique(np.linspace(lo, hi, sample_cap).astype(np.int64))
        else:
            idx = np.arange(lo, hi + 1, dtype=np.int64)
        dev = np.max(np.abs(spec.weights(idx) - reference.weights(idx)))
        if dev > delta_e / 2.0 + 1e-12:
            raise PhaseNotFound(
                f"barrier {k} deviates by {dev:.3e} > delta_E/2 = {delta_e / 2.0:.3e}"
            )
