"""Jacobi operators as evaluable weight/diagonal rules.

A semi-infinite Jacobi matrix acts on square-summable sequences by

    (J u)(n) = lambda_{n-1} u(n-1) + q_n u(n) + lambda_n u(n+1),   n >= 1,

with boundary condition u(0) = 0, positive weights lambda_n and real
diagonal q_n.  The convention lambda_0 = 1 is adopted globally.  Model
rules are immutable dataclasses; sampling is pure, so repeated calls at
the same index return bit-identical values.

Everything downstream (finite sections, decay envelopes, barrier
constructions) consumes these rules lazily; nothing here ever
materialises an infinite object.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IndexOutOfWindow, LayoutOverlap, NonPositiveWeight

__all__ = [
    "ModelSpec",
    "Constant",
    "Example1",
    "Example2",
    "PowerPeriodic",
    "PowerModulated",
    "BarrierComposite",
    "Table",
    "BarrierLayout",
    "TridiagonalSlice",
    "register_phi",
    "sample_operator",
    "truncate",
    "flip_slice",
    "carleman_sum",
    "apply_operator",
    "rank_one_perturb",
    "has_zero_diagonal",
    "weight_lower_bound_from",
    "spec_to_json",
    "spec_from_json",
]


def _as_index_array(n):
    arr = np.asarray(n, dtype=np.int64)
    if np.any(arr < 1):
        raise IndexOutOfWindow("weight/diagonal rules are defined for n >= 1")
    return arr


def _parity_values(n, odd_value, even_value):
    return np.where(n % 2 == 1, odd_value, even_value)


# --------------------------------------------------------------------------
# periodic modulation rules
#
# The default rule (1 - cos(2 pi x / T)) / 2 is twice differentiable,
# T-periodic, has range [0, 1], inf 0 and sup 1, with zeros at integer
# multiples of T and maxima at half-periods.

_PHI_RULES: dict[str, Callable[[float], Callable[[np.ndarray], np.ndarray]]] = {}


def register_phi(name: str, factory: Callable[[float], Callable]) -> None:
    """Register a named modulation rule; ``factory(T)`` returns phi(x)."""
    _PHI_RULES[name] = factory


register_phi("raised_cosine", lambda T: (lambda x: 0.5 * (1.0 - np.cos(2.0 * np.pi * x / T))))


class ModelSpec:
    """Base class for weight/diagonal rules.  Subclasses are frozen dataclasses."""

    def weights(self, n) -> np.ndarray:
        """lambda_n for an integer array n >= 1."""
        raise NotImplementedError

    def diags(self, n) -> np.ndarray:
        """q_n for an integer array n >= 1."""
        raise NotImplementedError

    def weight(self, n: int) -> float:
        return float(self.weights(np.asarray([n]))[0])

    def diag(self, n: int) -> float:
        return float(self.diags(np.asarray([n]))[0])


def _checked_weights(spec, lam, n):
    if np.any(lam <= 0.0):
        bad = int(np.asarray(n)[np.argmax(lam <= 0.0)])
        raise NonPositiveWeight(f"{type(spec).__name__} yields lambda_{bad} <= 0")
    return lam


@dataclass(frozen=True)
class Constant(ModelSpec):
    """lambda_n = lam, q_n = q."""

    lam: float = 1.0
    q: float = 0.0

    def weights(self, n):
        n = _as_index_array(n)
        return _checked_weights(self, np.full(n.shape, float(self.lam)), n)

    def diags(self, n):
        n = _as_index_array(n)
        return np.full(n.shape, float(self.q))


@dataclass(frozen=True)
class Example1(ModelSpec):
    """Two-periodically shifted linear weights: lambda_n = n + c_n, q_n = 0.

    c_n alternates (c1, c2, c1, ...); requires c1 != c2 and positive
    weights.  The essential spectrum leaves the finite gap
    (-|c1 - c2|, |c1 - c2|) open.
    """

    c1: float
    c2: float

    def __post_init__(self):
        if self.c1 == self.c2:
            raise ValueError("Example1 requires c1 != c2")
        if 1.0 + self.c1 <= 0.0 or 2.0 + self.c2 <= 0.0:
            raise NonPositiveWeight("Example1 requires n + c_n > 0 for all n >= 1")

    def weights(self, n):
        n = _as_index_array(n)
        lam = n + _parity_values(n, self.c1, self.c2)
        return _checked_weights(self, lam.astype(float), n)

    def diags(self, n):
        n = _as_index_array(n)
        return np.zeros(n.shape)


@dataclass(frozen=True)
class Example2(ModelSpec):
    """lambda_n = n, q_n = -2n; bounded from above by -1."""

    def weights(self, n):
        return _as_index_array(n).astype(float)

    def diags(self, n):
        return -2.0 * _as_index_array(n)


@dataclass(frozen=True)
class PowerPeriodic(ModelSpec):
    """lambda_n = n**alpha + c_n, q_n = 0, with a two-periodic shift c_n.

    The c1 = c2 = 0 case is the pure power-weight operator used as the
    reference when building Weyl sequences.
    """

    alpha: float
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("PowerPeriodic requires 0 < alpha <= 1")
        if 1.0 + self.c1 <= 0.0 or 2.0**self.alpha + self.c2 <= 0.0:
            raise NonPositiveWeight("PowerPeriodic weights must stay positive")

    def weights(self, n):
        n = _as_index_array(n)
        lam = n.astype(float) ** self.alpha + _parity_values(n, self.c1, self.c2)
        return _checked_weights(self, lam, n)

    def diags(self, n):
        return np.zeros(_as_index_array(n).shape)


@dataclass(frozen=True)
class PowerModulated(ModelSpec):
    """lambda_n = n**alpha + c_n * phi(n**gamma), q_n = 0.

    phi is T-periodic, twice differentiable, 0 <= phi <= 1 with inf 0 and
    sup 1; the admissible exponent region is 0 < alpha < 1 and
    0 < gamma < (1 - alpha) / 2.  The slow modulation phi(n**gamma)
    opens and closes the local two-periodic gap along the lattice.
    """

    alpha: float
    gamma: float
    T: float = 1.0
    c1: float = 2.0
    c2: float = 1.0
    phi: str = "raised_cosine"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("PowerModulated requires 0 < alpha < 1")
        if not 0.0 < self.gamma < (1.0 - self.alpha) / 2.0:
            raise ValueError("PowerModulated requires 0 < gamma < (1 - alpha)/2")
        if self.c1 <= 0.0 or self.c2 <= 0.0 or self.c1 == self.c2:
            raise ValueError("PowerModulated requires c1, c2 > 0 and c1 != c2")
        if self.T <= 0.0:
            raise ValueError("PowerModulated requires T > 0")
        if self.phi not in _PHI_RULES:
            raise ValueError(f"unknown phi rule {self.phi!r}")

    @property
    def gap_halfwidth(self) -> float:
        """c = |c1 - c2|, the half-width of the modulated spectral window."""
        return abs(self.c1 - self.c2)

    def phi_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        return _PHI_RULES[self.phi](self.T)

    def weights(self, n):
        n = _as_index_array(n)
        phi = self.phi_fn()(n.astype(float) ** self.gamma)
        lam = n.astype(float) ** self.alpha + _parity_values(n, self.c1, self.c2) * phi
        return _checked_weights(self, lam, n)

    def diags(self, n):
        return np.zeros(_as_index_array(n).shape)


@dataclass(frozen=True)
class BarrierLayout:
    """Barrier centers x_k and half-lengths l_k.

    The k-th barrier interval is I_k = [x_k - l_k, x_k + l_k]; the
    matching region, two sites wider to the left and one to the right,
    is [x_k - l_k - 2, x_k + l_k + 1].  Layouts must satisfy the
    separation condition x_k + l_k < x_{k+1} - l_{k+1}.
    """

    centers: tuple[int, ...]
    half_lengths: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(int(x) for x in self.centers))
        object.__setattr__(self, "half_lengths", tuple(int(x) for x in self.half_lengths))
        if len(self.centers) != len(self.half_lengths):
            raise ValueError("centers and half_lengths must have equal length")
        if any(l < 0 for l in self.half_lengths):
            raise ValueError("half-lengths must be nonnegative")
        xs, ls = self.centers, self.half_lengths
        if any(xs[i] >= xs[i + 1] for i in range(len(xs) - 1)):
            raise ValueError("centers must be strictly increasing")
        for i in range(len(xs) - 1):
            if not xs[i] + ls[i] < xs[i + 1] - ls[i + 1]:
                raise LayoutOverlap(
                    f"barriers {i + 1} and {i + 2} violate x_k + l_k < x_(k+1) - l_(k+1)"
                )

    def __len__(self):
        return len(self.centers)

    def barrier(self, k: int) -> tuple[int, int]:
        """I_k as a closed integer range (1-based k)."""
        x, l = self.centers[k - 1], self.half_lengths[k - 1]
        return x - l, x + l

    def matching_region(self, k: int) -> tuple[int, int]:
        x, l = self.centers[k - 1], self.half_lengths[k - 1]
        return x - l - 2, x + l + 1

    def inner_barrier(self, k: int) -> tuple[int, int]:
        """I~_k with half-length floor(l_k / 2)."""
        x, l = self.centers[k - 1], self.half_lengths[k - 1]
        return x - l // 2, x + l // 2

    def boundary_set(self, k: int) -> tuple[int, ...]:
        """U_k: the six indices flanking the barrier edges."""
        lo, hi = self.barrier(k)
        return (lo - 2, lo - 1, lo, hi, hi + 1, hi + 2)

    def to_json(self) -> dict:
        return {"centers": list(self.centers), "half_lengths": list(self.half_lengths)}

    @staticmethod
    def from_json(data: dict) -> "BarrierLayout":
        return BarrierLayout(tuple(data["centers"]), tuple(data["half_lengths"]))

    def _merged_bounds(self) -> np.ndarray:
        """Flattened merged matching-region bounds for membership queries."""
        regions = []
        for k in range(1, len(self) + 1):
            lo, hi = self.matching_region(k)
            lo = max(lo, 1)
            if hi >= lo:
                regions.append((lo, hi))
        merged = []
        for lo, hi in regions:
            if merged and lo <= merged[-1][1] + 1:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        bounds = np.empty(2 * len(merged), dtype=np.int64)
        for i, (lo, hi) in enumerate(merged):
            bounds[2 * i] = lo
            bounds[2 * i + 1] = hi + 1
        return bounds

    def in_matching_region(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        bounds = self._merged_bounds()
        if bounds.size == 0:
            return np.zeros(n.shape, dtype=bool)
        return np.searchsorted(bounds, n, side="right") % 2 == 1


@dataclass(frozen=True)
class BarrierComposite(ModelSpec):
    """Weights equal ``base`` on every matching region and ``inside`` elsewhere.

    Both constituents must have zero diagonal; the composite keeps it.
    """

    base: ModelSpec
    layout: BarrierLayout
    inside: ModelSpec

    def __post_init__(self):
        for part, name in ((self.base, "base"), (self.inside, "inside")):
            if not has_zero_diagonal(part):
                raise ValueError(f"BarrierComposite requires a zero-diagonal {name} spec")

    def weights(self, n):
        n = _as_index_array(n)
        mask = self.layout.in_matching_region(n)
        lam = np.empty(n.shape, dtype=float)
        if np.any(mask):
            lam[mask] = self.base.weights(n[mask])
        if np.any(~mask):
            lam[~mask] = self.inside.weights(n[~mask])
        return lam

    def diags(self, n):
        return np.zeros(_as_index_array(n).shape)


@dataclass(frozen=True)
class Table(ModelSpec):
    """Explicit leading entries followed by a tail rule.

    lambda_n = weights[n-1] for n <= len(weights), else the tail rule
    sampled at n (similarly for the diagonal).  A missing tail restricts
    the model to the explicit range.
    """

    weights_head: tuple[float, ...] = ()
    diags_head: tuple[float, ...] = ()
    tail: Optional[ModelSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "weights_head", tuple(float(x) for x in self.weights_head))
        object.__setattr__(self, "diags_head", tuple(float(x) for x in self.diags_head))

    def _lookup(self, n, head, component):
        n = _as_index_array(n)
        out = np.empty(n.shape, dtype=float)
        head_arr = np.asarray(head, dtype=float)
        in_head = n <= len(head)
        if np.any(in_head):
            out[in_head] = head_arr[n[in_head] - 1]
        if np.any(~in_head):
            if self.tail is None:
                raise IndexOutOfWindow("Table has no tail rule beyond its explicit entries")
            sampler = self.tail.weights if component == "w" else self.tail.diags
            out[~in_head] = sampler(n[~in_head])
        return out

    def weights(self, n):
        return _checked_weights(self, self._lookup(n, self.weights_head, "w"), n)

    def diags(self, n):
        return self._lookup(n, self.diags_head, "q")


# --------------------------------------------------------------------------
# finite sections


@dataclass(frozen=True)
class TridiagonalSlice:
    """Symmetric tridiagonal finite section over the index window [lo, hi].

    Dirichlet boundary: couplings outside the window are dropped.
    ``diag`` holds q_lo .. q_hi, ``offdiag`` holds lambda_lo .. lambda_(hi-1).
    """

    lo: int
    hi: int
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.ascontiguousarray(np.asarray(self.diag, dtype=float))
        off = np.ascontiguousarray(np.asarray(self.offdiag, dtype=float))
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", off)
        if off.shape[0] != diag.shape[0] - 1:
            raise ValueError("offdiag must be one entry shorter than diag")
        if np.any(off <= 0.0):
            raise NonPositiveWeight("slice off-diagonal entries must be positive")

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    def entry_scale(self) -> float:
        off_max = float(np.max(np.abs(self.offdiag))) if self.offdiag.size else 0.0
        return max(float(np.max(np.abs(self.diag))), off_max)

    def as_dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        idx = np.arange(self.size - 1)
        m[idx, idx + 1] = self.offdiag
        m[idx + 1, idx] = self.offdiag
        return m

    def matvec(self, u: np.ndarray) -> np.ndarray:
        v = self.diag * u
        v[:-1] += self.offdiag * u[1:]
        v[1:] += self.offdiag * u[:-1]
        return v


def truncate(spec: ModelSpec, lo: int, hi: int) -> TridiagonalSlice:
    """Dirichlet finite section carrying q_lo..q_hi and lambda_lo..lambda_(hi-1)."""
    if not 1 <= lo <= hi:
        raise ValueError("truncate requires 1 <= lo <= hi")
    idx = np.arange(lo, hi + 1, dtype=np.int64)
    diag = spec.diags(idx)
    offdiag = spec.weights(idx[:-1]) if hi > lo else np.empty(0)
    return TridiagonalSlice(lo, hi, diag, offdiag)


def flip_slice(s: TridiagonalSlice) -> TridiagonalSlice:
    """Finite section of -J after conjugation by the alternating-sign diagonal.

    The conjugated matrix has the same (positive) weights and negated
    diagonal, and resolvent matrix elements of equal absolute value, so
    half-line bounds for operators bounded from above reduce to the
    bounded-from-below case.
    """
    return TridiagonalSlice(s.lo, s.hi, -s.diag, s.offdiag)


# --------------------------------------------------------------------------
# basic functionals


def sample_operator(spec: ModelSpec, n: int) -> tuple[float, float]:
    """(lambda_n, q_n); n = 0 returns the convention (1, 0)."""
    if n < 0:
        raise IndexOutOfWindow("sample_operator requires n >= 0")
    if n == 0:
        return 1.0, 0.0
    return spec.weight(n), spec.diag(n)


_CHUNK = 1 << 20


def carleman_sum(spec: ModelSpec, n: int, power: float = 1.0, start: int = 1) -> float:
    """sum_{k=start}^{n-1} lambda_k**(-power); zero when n <= start."""
    if n < 1 or start < 1:
        raise IndexOutOfWindow("carleman_sum requires n >= 1 and start >= 1")
    if power not in (1.0, 0.5):
        raise ValueError("power must be 1 or 1/2")
    total = 0.0
    for lo in range(start, n, _CHUNK):
        hi = min(n - 1, lo + _CHUNK - 1)
        lam = spec.weights(np.arange(lo, hi + 1, dtype=np.int64))
        total += float(np.sum(lam ** (-power)))
    return total


def apply_operator(spec: ModelSpec, u: Sequence, n: int):
    """lambda_{n-1} u(n-1) + q_n u(n) + lambda_n u(n+1) for u given on [0..N]."""
    u = np.asarray(u)
    N = u.shape[0] - 1
    if not 1 <= n <= N - 1:
        raise IndexOutOfWindow(f"apply_operator requires 1 <= n <= {N - 1}")
    lam_prev = 1.0 if n == 1 else spec.weight(n - 1)
    return lam_prev * u[n - 1] + spec.diag(n) * u[n] + spec.weight(n) * u[n + 1]


def rank_one_perturb(spec: ModelSpec, coupling: float) -> ModelSpec:
    """Add coupling * <., e_1> e_1, i.e. shift q_1 by the coupling constant."""
    if coupling == 0.0:
        return spec
    return Table(weights_head=(), diags_head=(spec.diag(1) + coupling,), tail=spec)


def has_zero_diagonal(spec: ModelSpec) -> bool:
    """Structural check that q_n == 0 for every n."""
    if isinstance(spec, (Example1, PowerPeriodic, PowerModulated)):
        return True
    if isinstance(spec, Constant):
        return spec.q == 0.0
    if isinstance(spec, Example2):
        return False
    if isinstance(spec, BarrierComposite):
        return True
    if isinstance(spec, Table):
        return all(q == 0.0 for q in spec.diags_head) and (
            spec.tail is None or has_zero_diagonal(spec.tail)
        )
    return False


def weight_lower_bound_from(spec: ModelSpec, n0: int) -> Optional[float]:
    """Certified lower bound on inf_{n >= n0} lambda_n, or None if unknown.

    Drives the tail arguments in constant certification: the hyperbolic
    bounds are decreasing in lambda, so a weight floor controls every
    tail supremum.
    """
    n0 = max(int(n0), 1)
    if isinstance(spec, Constant):
        return spec.lam
    if isinstance(spec, Example1):
        odd0 = n0 if n0 % 2 == 1 else n0 + 1
        even0 = n0 if n0 % 2 == 0 else n0 + 1
        return min(odd0 + spec.c1, even0 + spec.c2)
    if isinstance(spec, Example2):
        return float(n0)
    if isinstance(spec, PowerPeriodic):
        return n0**spec.alpha + min(spec.c1, spec.c2)
    if isinstance(spec, PowerModulated):
        # inf phi = 0, so only the power part is guaranteed
        return float(n0**spec.alpha)
    if isinstance(spec, BarrierComposite):
        bounds = [weight_lower_bound_from(spec.base, n0), weight_lower_bound_from(spec.inside, n0)]
        if any(b is None for b in bounds):
            return None
        return min(bounds)
    if isinstance(spec, Table):
        head = spec.weights_head[n0 - 1 :]
        candidates = [min(head)] if head else []
        if spec.tail is not None:
            tail_bound = weight_lower_bound_from(spec.tail, max(n0, len(spec.weights_head) + 1))
            if tail_bound is None:
                return None
            candidates.append(tail_bound)
        return min(candidates) if candidates else None
    return None


# --------------------------------------------------------------------------
# canonical JSON encoding


def spec_to_json(spec: ModelSpec) -> dict:
    if isinstance(spec, Constant):
        return {"type": "Constant", "lambda": spec.lam, "q": spec.q}
    if isinstance(spec, Example1):
        return {"type": "Example1", "c1": spec.c1, "c2": spec.c2}
    if isinstance(spec, Example2):
        return {"type": "Example2"}
    if isinstance(spec, PowerPeriodic):
        return {"type": "PowerPeriodic", "alpha": spec.alpha, "c1": spec.c1, "c2": spec.c2}
    if isinstance(spec, PowerModulated):
        return {
            "type": "PowerModulated",
            "alpha": spec.alpha,
            "gamma": spec.gamma,
            "T": spec.T,
            "c1": spec.c1,
            "c2": spec.c2,
            "phi": spec.phi,
        }
    if isinstance(spec, BarrierComposite):
        return {
            "type": "BarrierComposite",
            "base": spec_to_json(spec.base),
            "layout": spec.layout.to_json(),
            "inside": spec_to_json(spec.inside),
        }
    if isinstance(spec, Table):
        out = {
            "type": "Table",
            "weights": list(spec.weights_head),
            "diags": list(spec.diags_head),
        }
        out["tail"] = spec_to_json(spec.tail) if spec.tail is not None else None
        return out
    raise ValueError(f"cannot encode spec of type {type(spec).__name__}")


def spec_from_json(data: dict) -> ModelSpec:
    kind = data.get("type")
    if kind == "Constant":
        return Constant(lam=float(data["lambda"]), q=float(data.get("q", 0.0)))
    if kind == "Example1":
        return Example1(c1=float(data["c1"]), c2=float(data["c2"]))
    if kind == "Example2":
        return Example2()
    if kind == "PowerPeriodic":
        return PowerPeriodic(
            alpha=float(data["alpha"]), c1=float(data.get("c1", 0.0)), c2=float(data.get("c2", 0.0))
        )
    if kind == "PowerModulated":
        return PowerModulated(
            alpha=float(data["alpha"]),
            gamma=float(data["gamma"]),
            T=float(data.get("T", 1.0)),
            c1=float(data["c1"]),
            c2=float(data["c2"]),
            phi=data.get("phi", "raised_cosine"),
        )
    if kind == "BarrierComposite":
        return BarrierComposite(
            base=spec_from_json(data["base"]),
            layout=BarrierLayout.from_json(data["layout"]),
            inside=spec_from_json(data["inside"]),
        )
    if kind == "Table":
        tail = data.get("tail")
        return Table(
            weights_head=tuple(data.get("weights", ())),
            diags_head=tuple(data.get("diags", ())),
            tail=spec_from_json(tail) if tail is not None else None,
        )
    raise ValueError(f"unknown model type {kind!r}")
