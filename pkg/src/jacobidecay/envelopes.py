"""Certified exponential decay envelopes for resolvent matrix elements.

The conjugation trick: with rho(n) a running sum of inverse weights and
phi = exp(-gamma * rho) as a multiplication operator,

    phi^(-1) J phi - J = A(gamma)

is a non-symmetric Jacobi matrix whose real part is O(gamma^2) while its
imaginary part is only O(gamma).  Inverting J - lambda + A(gamma) through
the two operator lemmas below and undoing the conjugation produces decay
envelopes whose rate is proportional to the *square root* of the distance
of lambda to the spectrum.

All envelope constants are certified numerically here: the norms of
Re A and Im A have the closed forms

    ||Re A|| = 2 sup_p lambda_p (cosh(gamma / lambda_p**power) - 1),
    ||Im A|| = 2 sup_p lambda_p  sinh(gamma / lambda_p**power),

both decreasing in lambda_p, so a scan plus a certified weight floor for
the tail bounds the suprema rigorously.  Dividing by gamma**2 (resp.
gamma) yields constants valid for every smaller gamma as well, which is
what makes a single worst-case certification window-uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BadEpsilon,
    BetaTooLarge,
    DeltaTooLarge,
    NotUnbounded,
    OutsideGap,
    OutsideHalfLine,
    UnverifiedTail,
)
from .models import ModelSpec, weight_lower_bound_from
from .tridiag import ResolventColumn

__all__ = [
    "GapWindow",
    "FiniteGap",
    "BelowBottom",
    "AboveTop",
    "ConjugationWeight",
    "NormConstants",
    "conjugation_entries",
    "certify_constants",
    "certify_for_gap",
    "certify_for_halfline",
    "envelope_thm1",
    "envelope_thm2",
    "envelope_thm3",
    "envelope_thm4",
    "pick_N_thm2",
    "pick_N_thm3",
    "Thm2Pick",
    "lemma_inverse_bound",
    "verify_envelope",
    "eta_rate",
    "EnvelopeReport",
]

ENVELOPE_SLACK = 1e-6


class GapWindow:
    """Location of the spectral parameter relative to the spectrum."""


@dataclass(frozen=True)
class FiniteGap(GapWindow):
    r: float
    s: float

    def __post_init__(self):
        if not self.r < self.s:
            raise ValueError("FiniteGap requires r < s")

    def weight_fn(self, lam: float) -> float:
        """w(lambda) = (lambda - r)(s - lambda)."""
        return (lam - self.r) * (self.s - lam)


@dataclass(frozen=True)
class BelowBottom(GapWindow):
    d: float


@dataclass(frozen=True)
class AboveTop(GapWindow):
    d: float


@dataclass(frozen=True)
class ConjugationWeight:
    """Exponential weight phi = exp(-gamma * rho).

    ``start`` <= 1 sums rho from the first weight; larger values freeze
    rho below the start index.  ``cap`` (exclusive) freezes rho beyond
    it, giving the bounded weights used for half-line bounds.  ``power``
    selects inverse weights (1) or inverse square roots (1/2).
    """

    gamma: float
    start: int = 1
    cap: Optional[int] = None
    power: float = 1.0

    def __post_init__(self):
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if self.power not in (1.0, 0.5):
            raise ValueError("power must be 1 or 1/2")
        if self.cap is not None and self.cap <= max(self.start, 1):
            raise ValueError("cap must exceed the start index")

    def support_start(self) -> int:
        return max(self.start, 1)

    def rho_increment(self, spec: ModelSpec, n) -> np.ndarray:
        """rho(n+1) - rho(n) for integer n >= 1."""
        n = np.asarray(n, dtype=np.int64)
        inc = spec.weights(n) ** (-self.power)
        inc = np.where(n < self.support_start(), 0.0, inc)
        if self.cap is not None:
            inc = np.where(n >= self.cap, 0.0, inc)
        return inc


@dataclass(frozen=True)
class NormConstants:
    """Certified norm data for A(gamma) at a given model and weight.

    C1 bounds ||Re A|| / gamma**2 and C2 bounds ||Im A|| / gamma for
    every gamma up to the certification value; epsN and deltaN are the
    norms themselves at that gamma; rN is the certified inverse weight
    floor (inf_{p >= N} lambda_p)^(-1).
    """

    C1: float
    C2: float
    epsN: float
    deltaN: float
    rN: float
    gamma: float = 0.0
    power: float = 1.0
    start: int = 1

    def as_dict(self) -> dict:
        return {
            "C1": self.C1,
            "C2": self.C2,
            "epsN": self.epsN,
            "deltaN": self.deltaN,
            "rN": self.rN,
            "gamma": self.gamma,
            "power": self.power,
            "start": self.start,
        }


def conjugation_entries(spec: ModelSpec, weight: ConjugationWeight, n: int) -> tuple[float, float]:
    """Entries a_n, b_n of phi^(-1) J phi - J.

    a_n = lambda_n (phi(n+1)/phi(n) - 1), b_n = lambda_n (phi(n)/phi(n+1) - 1);
    both vanish where rho is frozen.
    """
    if n < 1:
        raise ValueError("conjugation entries are defined for n >= 1")
    lam = spec.weight(n)
    step = weight.gamma * float(weight.rho_increment(spec, [n])[0])
    return lam * math.expm1(-step), lam * math.expm1(step)


def _psi_extrema(lam: np.ndarray, gamma: float, power: float) -> tuple[float, float]:
    """max over the given weights of lambda*(cosh(x)-1) and lambda*sinh(x), x = gamma/lambda**power."""
    x = gamma * lam ** (-power)
    psi1 = lam * (np.cosh(x) - 1.0)
    psi2 = lam * np.sinh(x)
    return float(np.max(psi1)), float(np.max(psi2))


_SCAN_CHUNK = 1 << 18


def certify_constants(spec: ModelSpec, weight: ConjugationWeight, scanN: int) -> NormConstants:
    """Certify ||Re A(gamma)|| and ||Im A(gamma)|| by scan plus tail floor.

    Scans the support up to ``scanN`` exactly and closes the tail with a
    certified weight lower bound (the hyperbolic bounds are decreasing
    in the weight).  Raises UnverifiedTail when no floor is available.
    """
    gamma, power = weight.gamma, weight.power
    start = weight.support_start()
    end = weight.cap - 1 if weight.cap is not None else None
    scan_hi = min(scanN, end) if end is not None else max(scanN, start)
    if scan_hi < start:
        scan_hi = start

    psi1_max = 0.0
    psi2_max = 0.0
    lam_min = math.inf
    for lo in range(start, scan_hi + 1, _SCAN_CHUNK):
        hi = min(scan_hi, lo + _SCAN_CHUNK - 1)
        lam = spec.weights(np.arange(lo, hi + 1, dtype=np.int64))
        lam_min = min(lam_min, float(np.min(lam)))
        if gamma > 0.0:
            p1, p2 = _psi_extrema(lam, gamma, power)
            psi1_max = max(psi1_max, p1)
            psi2_max = max(psi2_max, p2)

    if end is None or end > scan_hi:
        floor = weight_lower_bound_from(spec, scan_hi + 1)
        if floor is None or floor <= 0.0:
            raise UnverifiedTail(
                f"no certified weight floor beyond n = {scan_hi}; raise scanN or cap the weight"
            )
        lam_min = min(lam_min, floor)
        if gamma > 0.0:
            p1, p2 = _psi_extrema(np.asarray([floor]), gamma, power)
            psi1_max = max(psi1_max, p1)
            psi2_max = max(psi2_max, p2)

    epsN = 2.0 * psi1_max
    deltaN = 2.0 * psi2_max
    C1 = epsN / gamma**2 if gamma > 0.0 else 0.0
    C2 = deltaN / gamma if gamma > 0.0 else 0.0
    return NormConstants(
        C1=C1, C2=C2, epsN=epsN, deltaN=deltaN, rN=1.0 / lam_min,
        gamma=gamma, power=power, start=start,
    )


def certify_for_gap(spec: ModelSpec, window: FiniteGap, scanN: int = 4096, start: int = 1) -> NormConstants:
    """Window-uniform constants for a finite gap.

    Certifies at the worst-case gamma: since C2 >= 2, any admissible
    rate constant satisfies eta <= 1/8, so gamma = eta * sqrt(w) never
    exceeds (s - r)/16 anywhere in the gap.
    """
    gamma_cap = (window.s - window.r) / 16.0
    weight = ConjugationWeight(gamma=gamma_cap, start=start)
    return certify_constants(spec, weight, scanN)


def certify_for_halfline(spec: ModelSpec, d: float, lam_min: float, scanN: int = 4096, start: int = 1) -> NormConstants:
    """Constants for spectral parameters below the bottom ``d``.

    The optimal gamma = sqrt((d - lambda)/(2 C1)) is a-priori bounded by
    sqrt((d - lambda) * lambda_probe / 2) because C1 >= 1/inf(lambda);
    certifying at that cap covers every parameter >= lam_min.
    """
    if not lam_min < d:
        raise OutsideHalfLine("certification requires lam_min < d")
    probe = spec.weight(max(start, 1))
    gamma_cap = math.sqrt((d - lam_min) * probe / 2.0)
    weight = ConjugationWeight(gamma=gamma_cap, start=start)
    return certify_constants(spec, weight, scanN)


def eta_rate(constants: NormConstants, span: float, c2_factor: float) -> float:
    pieces = []
    if constants.C2 > 0.0:
        pieces.append(1.0 / (c2_factor * constants.C2))
    if constants.C1 > 0.0:
        pieces.append(1.0 / math.sqrt(2.0 * constants.C1 * span))
    if not pieces:
        raise ValueError("constants were certified at gamma = 0; no rate available")
    return min(pieces)


def _check_gamma_cover(constants: NormConstants, gamma_used: float):
    if gamma_used > constants.gamma * (1.0 + 1e-12):
        raise ValueError(
            f"constants certified at gamma = {constants.gamma} do not cover gamma = {gamma_used}"
        )


def envelope_thm1(window: GapWindow, constants: NormConstants, lam: float, rho_n: float) -> float:
    """Gap/half-line envelope with certified constants.

    Finite gap: 4 max{(lam-r)^-1, (s-lam)^-1} exp(-eta sqrt(w) rho_n)
    with eta = min{1/(4 C2), 1/sqrt(2 C1 (s-r))}.  Half line at distance
    D: 4 D^-1 exp(-eta sqrt(D) rho_n) with eta = 1/sqrt(2 C1).
    """
    if isinstance(window, FiniteGap):
        r, s = window.r, window.s
        if not r < lam < s:
            raise OutsideGap(f"lambda = {lam} outside ({r}, {s})")
        w = window.weight_fn(lam)
        eta = eta_rate(constants, s - r, 4.0)
        _check_gamma_cover(constants, eta * math.sqrt(w))
        pref = 4.0 * max(1.0 / (lam - r), 1.0 / (s - lam))
        return pref * math.exp(-eta * math.sqrt(w) * rho_n)
    if isinstance(window, (BelowBottom, AboveTop)):
        dist = window.d - lam if isinstance(window, BelowBottom) else lam - window.d
        if dist <= 0.0:
            raise OutsideGap(f"lambda = {lam} on the wrong side of d = {window.d}")
        if constants.C1 <= 0.0:
            raise ValueError("constants were certified at gamma = 0; no rate available")
        eta = 1.0 / math.sqrt(2.0 * constants.C1)
        _check_gamma_cover(constants, eta * math.sqrt(dist))
        return (4.0 / dist) * math.exp(-eta * math.sqrt(dist) * rho_n)
    raise TypeError(f"unsupported window {window!r}")


def envelope_thm2(window: FiniteGap, lam: float, eps: float, sum_n: float) -> float:
    """(s-r) / (eps (lam-r)(s-lam)) * exp(-(1/2-eps) sqrt(w) sum_n)."""
    if not 0.0 < eps < 0.5:
        raise BadEpsilon("thm2 requires 0 < eps < 1/2")
    r, s = window.r, window.s
    if not r < lam < s:
        raise OutsideGap(f"lambda = {lam} outside ({r}, {s})")
    w = window.weight_fn(lam)
    return (s - r) / (eps * w) * math.exp(-(0.5 - eps) * math.sqrt(w) * sum_n)


def envelope_thm3(d: float, lam: complex, eps: float, sum_sqrt: float) -> float:
    """[(d - Re lam) eps]^-1 * exp(-(1-eps) sqrt(d - Re lam) sum_sqrt)."""
    if not 0.0 < eps < 1.0:
        raise BadEpsilon("thm3 requires 0 < eps < 1")
    gap = d - complex(lam).real
    if gap <= 0.0:
        raise OutsideHalfLine(f"Re lambda = {complex(lam).real} not below d = {d}")
    return math.exp(-(1.0 - eps) * math.sqrt(gap) * sum_sqrt) / (gap * eps)


def envelope_thm4(window: FiniteGap, constants: NormConstants, lam: float, delta: float, sum_ba: float) -> float:
    """Block-to-block envelope with imaginary offset delta.

    Same shape as the gap envelope but with eta = min{1/(8 C2),
    1/sqrt(2 C1 (s-r))} and the inverse-weight sum taken from max B to
    min A - 1; requires |delta| <= sqrt(w)/8.
    """
    r, s = window.r, window.s
    if not r < lam < s:
        raise OutsideGap(f"lambda = {lam} outside ({r}, {s})")
    w = window.weight_fn(lam)
    if abs(delta) > math.sqrt(w) / 8.0:
        raise DeltaTooLarge(f"|delta| = {abs(delta)} exceeds sqrt(w)/8 = {math.sqrt(w) / 8.0}")
    eta = eta_rate(constants, s - r, 8.0)
    _check_gamma_cover(constants, eta * math.sqrt(w))
    pref = 4.0 * max(1.0 / (lam - r), 1.0 / (s - lam))
    return pref * math.exp(-eta * math.sqrt(w) * sum_ba)


def _scan_grid(scan_max: int) -> list[int]:
    grid = list(range(1, min(scan_max, 64) + 1))
    n = 64
    while n < scan_max:
        n = min(int(n * 1.25) + 1, scan_max)
        grid.append(n)
    return grid


@dataclass(frozen=True)
class Thm2Pick:
    """Start index for the sharpened gap envelope plus its certified constant."""

    N: int
    C3: float
    r_at_N: float


def pick_N_thm2(
    spec: ModelSpec,
    window: FiniteGap,
    eps: float,
    constants: NormConstants,
    scan_max: int = 1 << 20,
    C3: Optional[float] = None,
) -> Thm2Pick:
    """Smallest scan-grid N with r(N) <= 4 eps^2 / C3.

    C3 collects the constants of the comparison between beta^2 and
    d+ d-: with K = (s + r)^2 C1 / 8 and r0 the inverse-weight floor at
    the scan start,

        C3 = C1 (s - r) + 2 K r0 + K^2 r0^3,

    which dominates the bracket multiplying r(N) in the expansion of
    (1 - C1 (lam-r) r)(1 - C1 (s-lam) r) - (1-2 eps)^2 (1 + K r^2)^2.
    """
    if not 0.0 < eps < 0.5:
        raise BadEpsilon("thm2 requires 0 < eps < 1/2")
    r_edge, s_edge = window.r, window.s
    if C3 is None:
        floor0 = weight_lower_bound_from(spec, 1)
        if floor0 is None or floor0 <= 0.0:
            raise UnverifiedTail("no certified weight floor at the scan start")
        r0 = 1.0 / floor0
        K = (s_edge + r_edge) ** 2 * constants.C1 / 8.0
        C3 = constants.C1 * (s_edge - r_edge) + 2.0 * K * r0 + K**2 * r0**3
    target = 4.0 * eps**2 / C3 if C3 > 0.0 else math.inf
    _require_unbounded(spec, scan_max)
    for N in _scan_grid(scan_max):
        floor = weight_lower_bound_from(spec, N)
        if floor is not None and floor > 0.0 and 1.0 / floor <= target:
            return Thm2Pick(N=N, C3=C3, r_at_N=1.0 / floor)
    raise NotUnbounded(
        f"r(N) did not reach {target:.3e} below N = {scan_max}; weights grow too slowly"
    )


def pick_N_thm3(spec: ModelSpec, d: float, lam: complex, eps: float, scan_max: int = 1 << 20) -> int:
    """Smallest scan-grid N with inf lambda >= 1 and 2 r(N) e^{(1-eps)^2 (d - Re lam)} <= eps."""
    if not 0.0 < eps < 1.0:
        raise BadEpsilon("thm3 requires 0 < eps < 1")
    re = complex(lam).real
    if re >= d:
        raise OutsideHalfLine(f"Re lambda = {re} not below d = {d}")
    _require_unbounded(spec, scan_max)
    bulge = math.exp((1.0 - eps) ** 2 * (d - re))
    for N in _scan_grid(scan_max):
        floor = weight_lower_bound_from(spec, N)
        if floor is None or floor < 1.0:
            continue
        if 2.0 / floor * bulge <= eps:
            return N
    raise NotUnbounded(f"the conditions on N were not met below N = {scan_max}")


def _require_unbounded(spec: ModelSpec, scan_max: int):
    lo = weight_lower_bound_from(spec, 1)
    hi = weight_lower_bound_from(spec, scan_max)
    if lo is None or hi is None:
        raise UnverifiedTail("cannot certify weight growth for this model")
    if not hi > 2.0 * max(lo, 1.0):
        raise NotUnbounded("weights show no certified growth; lambda_n -> infinity required")


def lemma_inverse_bound(d_plus: float, d_minus: float, beta: float, mode: str) -> float:
    """Inverse-norm bounds for T + i beta S with ||S|| <= 1.

    T is self-adjoint and invertible with spectral distances d_plus,
    d_minus to zero from the two sides (math.inf when a side is empty).

    L1: 2 max{1/d+, 1/d-} for |beta| <= sqrt(d+ d-)/2.
    L2: [Delta+ - sqrt(Delta+^2 + beta^2 - d+ d-)]^(-1), Delta+ =
    (d+ + d-)/2, for |beta| < sqrt(d+ d-); evaluated in rationalised
    form, and as its convergent limit 1/d_finite when one side is empty.
    """
    if d_plus <= 0.0 or d_minus <= 0.0:
        raise ValueError("d_plus and d_minus must be positive")
    if mode not in ("L1", "L2"):
        raise ValueError("mode must be 'L1' or 'L2'")
    both_finite = math.isfinite(d_plus) and math.isfinite(d_minus)
    if mode == "L1":
        if both_finite and abs(beta) > math.sqrt(d_plus * d_minus) / 2.0:
            raise BetaTooLarge("L1 requires |beta| <= sqrt(d+ d-)/2")
        inv_p = 1.0 / d_plus if math.isfinite(d_plus) else 0.0
        inv_m = 1.0 / d_minus if math.isfinite(d_minus) else 0.0
        return 2.0 * max(inv_p, inv_m)
    if both_finite:
        g = d_plus * d_minus - beta * beta
        if g <= 0.0:
            raise BetaTooLarge("L2 requires |beta| < sqrt(d+ d-)")
        delta_plus = 0.5 * (d_plus + d_minus)
        return (delta_plus + math.sqrt(delta_plus**2 - g)) / g
    if math.isfinite(d_plus):
        return 1.0 / d_plus
    if math.isfinite(d_minus):
        return 1.0 / d_minus
    return 0.0


@dataclass(frozen=True)
class EnvelopeReport:
    """Result of comparing a computed column against an envelope."""

    n_checked: int
    skirt: int
    violations: np.ndarray
    max_ratio: float

    @property
    def passed(self) -> bool:
        return self.violations.size == 0


def verify_envelope(column: ResolventColumn, envelope, skirt: int) -> EnvelopeReport:
    """List every n <= N - skirt where |column(n)| exceeds envelope(n).

    The comparison carries a multiplicative slack of 1 + 1e-6 and skips
    the trailing ``skirt`` indices polluted by the Dirichlet edge.
    """
    env = np.asarray(envelope, dtype=float)
    if env.shape[0] < column.N:
        raise ValueError("envelope must supply a value for every column index")
    n_checked = column.N - max(skirt, 0)
    mag = np.abs(column.values[:n_checked])
    bound = env[:n_checked] * (1.0 + ENVELOPE_SLACK)
    bad = np.nonzero(mag > bound)[0] + 1
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(mag == 0.0, 0.0, mag / env[:n_checked])
    max_ratio = float(np.max(ratios)) if n_checked else 0.0
    return EnvelopeReport(n_checked=n_checked, skirt=skirt, violations=bad, max_ratio=max_ratio)
