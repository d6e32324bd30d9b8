"""Generalized eigenfunctions and their asymptotics.

Solutions of the three-term recurrence

    lambda_{n-1} u(n-1) + q_n u(n) + lambda_n u(n+1) = z u(n)

are propagated forward with tracked log-magnitude rescaling, so growing
solutions never overflow.  Decaying solutions are *never* produced by
recurrence: forward recurrence toward the minimal solution is unstable,
and the square-summable solution is exactly the first resolvent column,
so it is obtained from the tridiagonal solve instead (``weyl_solution``).

The transfer-matrix view propagates (u(n-1), u(n)) by

    B_n = [[0, 1], [-lambda_{n-1}/lambda_n, z/lambda_n]],

and two-step products B_{2n} B_{2n-1} expose the slow modulation of the
power-weight models: the rescaled deviation from -I has a discriminant
whose limiting sign separates elliptic from hyperbolic transport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .errors import DegenerateBasis, Overflow
from .models import ModelSpec, PowerModulated, truncate
from .tridiag import ResolventColumn, resolvent_column

__all__ = [
    "RecurrenceTrack",
    "FundamentalPair",
    "TransferStep",
    "AsymptoticFit",
    "recurrence_extend",
    "fundamental_pair",
    "weyl_solution",
    "transfer_step",
    "transfer_product_two_step",
    "discriminant_V",
    "fit_asymptotics",
]

_RESCALE_AT = 1e150
_LOG_GUARD = 1e15


@njit(cache=True)
def _recurrence_kernel(lam, q, z, u0, u1, vals, logs):
    """Forward recurrence with multiplicative rescaling.

    lam[k] = lambda_k for k = 0..N (lam[0] is the boundary convention),
    q[k] = q_k.  vals[n] * exp(logs[n]) is the true u(n).
    """
    n_max = vals.shape[0] - 1
    vals[0] = u0
    vals[1] = u1
    logs[0] = 0.0
    logs[1] = 0.0
    prev = u0
    cur = u1
    scale = 0.0
    for n in range(1, n_max):
        nxt = ((z - q[n]) * cur - lam[n - 1] * prev) / lam[n]
        prev = cur
        cur = nxt
        mag = abs(cur)
        if mag > _RESCALE_AT:
            prev /= mag
            cur /= mag
            scale += math.log(mag)
            if scale > _LOG_GUARD:
                return False
        vals[n + 1] = cur
        logs[n + 1] = scale
    return True


@dataclass(frozen=True)
class RecurrenceTrack:
    """Recurrence output in rescaled form: u(n) = values[n] * exp(log_scale[n])."""

    z: complex
    values: np.ndarray
    log_scale: np.ndarray

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    def log_abs(self) -> np.ndarray:
        """log |u(n)| for n = 0..N (-inf at exact zeros)."""
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.values)) + self.log_scale

    def true_values(self) -> np.ndarray:
        """u(n) as plain complex numbers; raises Overflow when unrepresentable."""
        if np.max(self.log_scale) + np.log(np.max(np.abs(self.values)) + 1e-300) > 700.0:
            raise Overflow("solution magnitude exceeds double range; use log_abs()")
        return self.values * np.exp(self.log_scale)

    def value(self, n: int) -> complex:
        return self.values[n] * math.exp(self.log_scale[n])


def recurrence_extend(spec: ModelSpec, z: complex, u0, u1, N: int) -> RecurrenceTrack:
    """Extend (u(0), u(1)) to u(0..N) along the recurrence at parameter z."""
    if N < 2:
        raise ValueError("recurrence_extend requires N >= 2")
    idx = np.arange(1, N + 1, dtype=np.int64)
    lam = np.empty(N + 1)
    lam[0] = 1.0
    lam[1:] = spec.weights(idx)
    q = np.empty(N + 1)
    q[0] = 0.0
    q[1:] = spec.diags(idx)
    vals = np.empty(N + 1, dtype=np.complex128)
    logs = np.empty(N + 1)
    ok = _recurrence_kernel(lam, q, complex(z), complex(u0), complex(u1), vals, logs)
    if not ok:
        raise Overflow("tracked log-magnitude exceeded 1e15")
    return RecurrenceTrack(z=complex(z), values=vals, log_scale=logs)


@dataclass(frozen=True)
class FundamentalPair:
    """Solutions with phi(0)=0, phi(1)=1 and psi(0)=-1, psi(1)=0.

    Any solution is a combination of the two; the Weyl solution is
    psi + m phi with m the value of the resolvent column at index 1.
    """

    phi: RecurrenceTrack
    psi: RecurrenceTrack
    z: complex
    N: int

    def wronskian(self, spec: ModelSpec, n: int) -> complex:
        """lambda_n (phi(n) psi(n+1) - phi(n+1) psi(n)); identically 1."""
        lam = 1.0 if n == 0 else spec.weight(n)
        return lam * (
            self.phi.value(n) * self.psi.value(n + 1)
            - self.phi.value(n + 1) * self.psi.value(n)
        )


def fundamental_pair(spec: ModelSpec, z: complex, N: int) -> FundamentalPair:
    phi = recurrence_extend(spec, z, 0.0, 1.0, N)
    psi = recurrence_extend(spec, z, -1.0, 0.0, N)
    return FundamentalPair(phi=phi, psi=psi, z=complex(z), N=N)


def weyl_solution(spec: ModelSpec, E: float, eta: float, N: int) -> tuple[ResolventColumn, complex]:
    """Resolvent column at E + i eta on the [1, N] section, with its m-value.

    eta = 0 is admitted only when E clears the near-singularity guard of
    the tridiagonal solve (e.g. strictly inside a certified gap).
    """
    if eta < 0.0:
        raise ValueError("weyl_solution requires eta >= 0")
    column = resolvent_column(truncate(spec, 1, N), complex(E, eta))
    return column, complex(column.values[0])


@dataclass(frozen=True)
class TransferStep:
    n: int
    matrix: np.ndarray

    def det(self) -> complex:
        m = self.matrix
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def _weight_with_convention(spec: ModelSpec, n: int) -> float:
    return 1.0 if n == 0 else spec.weight(n)


def transfer_step(spec: ModelSpec, z, n: int) -> TransferStep:
    """B_n mapping (u(n-1), u(n)) to (u(n), u(n+1)); det B_n = lambda_{n-1}/lambda_n."""
    if n < 1:
        raise ValueError("transfer steps are defined for n >= 1")
    lam_prev = _weight_with_convention(spec, n - 1)
    lam = spec.weight(n)
    return TransferStep(n=n, matrix=np.array([[0.0, 1.0], [-lam_prev / lam, z / lam]]))


def transfer_product_two_step(spec: ModelSpec, z, n: int) -> np.ndarray:
    """B_{2n} B_{2n-1}; det = lambda_{2n-2}/lambda_{2n}."""
    if n < 1:
        raise ValueError("two-step products are defined for n >= 1")
    return transfer_step(spec, z, 2 * n).matrix @ transfer_step(spec, z, 2 * n - 1).matrix


def discriminant_V(spec: PowerModulated, lam: float, n) -> np.ndarray | float:
    """Discriminant of the rescaled two-step deviation from -I.

    V(n) = (2n)^alpha (B_{2n} B_{2n-1} + I); returns (tr V)^2 - 4 det V,
    which for large n approaches
    -4 [lam^2 + (c2 - c1)^2 phi((2n-1)^gamma) phi((2n)^gamma)].
    """
    if not isinstance(spec, PowerModulated):
        raise TypeError("discriminant_V expects a PowerModulated spec")
    n_arr = np.asarray(n, dtype=np.int64)
    scalar = n_arr.ndim == 0
    n_arr = np.atleast_1d(n_arr)
    if np.any(n_arr < 1):
        raise ValueError("discriminant_V requires n >= 1")
    w_prev = np.where(n_arr == 1, 1.0, 0.0)
    mask = n_arr > 1
    if np.any(mask):
        w_prev[mask] = spec.weights(2 * n_arr[mask] - 2)
    w_mid = spec.weights(2 * n_arr - 1)
    w_cur = spec.weights(2 * n_arr)
    # entries of P = B_{2n} B_{2n-1}
    p11 = -w_prev / w_mid
    p22 = lam * lam / (w_cur * w_mid) - w_mid / w_cur
    det_p = w_prev / w_cur
    scale = (2.0 * n_arr) ** spec.alpha
    tr_v = scale * (2.0 + p11 + p22)
    det_v = scale * scale * (det_p + p11 + p22 + 1.0)
    out = tr_v * tr_v - 4.0 * det_v
    return float(out[0]) if scalar else out


_BASIS_BUILDERS = {
    "1": lambda n: np.ones(n.shape),
    "log_n": lambda n: np.log(n),
    "sqrt_n": lambda n: np.sqrt(n),
    "n": lambda n: n.astype(float),
}


@dataclass(frozen=True)
class AsymptoticFit:
    basis: tuple[str, ...]
    coefficients: np.ndarray
    window: tuple[int, int]
    residual: float

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.basis.index(name)])


def fit_asymptotics(
    values,
    window: Optional[tuple[int, int]],
    basis: Sequence[str],
    n0: int = 1,
    values_are_log: bool = False,
    extra: Optional[dict] = None,
) -> AsymptoticFit:
    """Least-squares fit of ln(values(n)) on the requested basis.

    ``values[i]`` corresponds to n = n0 + i.  ``window`` = (lo, hi) is an
    inclusive n-range; None drops the first and last 10% of the data.
    Custom regressors (running weight sums etc.) are passed through
    ``extra`` as arrays aligned with ``values``.
    """
    vals = np.asarray(values, dtype=float)
    n_all = n0 + np.arange(vals.shape[0])
    if window is None:
        trim = vals.shape[0] // 10
        window = (int(n_all[trim]), int(n_all[-trim - 1]))
    lo, hi = window
    mask = (n_all >= lo) & (n_all <= hi)
    count = int(np.sum(mask))
    basis = tuple(basis)
    if count < 10 * len(basis):
        raise ValueError(f"window holds {count} points; need >= {10 * len(basis)}")
    n = n_all[mask].astype(float)
    if values_are_log:
        y = vals[mask]
    else:
        sel = vals[mask]
        if np.any(sel <= 0.0):
            raise ValueError("values must be positive to fit their logarithm")
        y = np.log(sel)
    cols = []
    for name in basis:
        if name in _BASIS_BUILDERS:
            cols.append(_BASIS_BUILDERS[name](n))
        elif extra is not None and name in extra:
            cols.append(np.asarray(extra[name], dtype=float)[mask])
        else:
            raise KeyError(f"unknown basis element {name!r}")
    design = np.column_stack(cols)
    norms = np.maximum(np.max(np.abs(design), axis=0), 1e-300)
    scaled = design / norms
    svals = np.linalg.svd(scaled, compute_uv=False)
    if svals[-1] < 1e-12 * svals[0] or svals[-1] == 0.0:
        raise DegenerateBasis("normal equations singular to 1e-12")
    coef_scaled, *_ = np.linalg.lstsq(scaled, y, rcond=None)
    coef = coef_scaled / norms
    rms = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return AsymptoticFit(basis=basis, coefficients=coef, window=(lo, hi), residual=rms)
