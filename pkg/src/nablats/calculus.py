"""Nabla derivative and nabla integral of grid functions.

Semantics on a grid with per-gap kinds:

* at a left-scattered point the nabla derivative is the exact difference
  quotient (f(t) - f(rho(t))) / nu(t);
* at a left-dense (sampled) point it is the backward difference over the
  local sampling step, an O(h) approximation;
* the nabla integral over (a, b] is the sum of local-step-weighted values,
  which is exact on all-scattered scales and a left-rectangle O(h) rule
  across sampled gaps.

Integrals are accumulated with exactly rounded summation (math.fsum) in
ascending t order, so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .timescale import GapKind, TimeScale, TimeScaleError


class CalculusError(ValueError):
    pass


class OutsideKappaError(CalculusError):
    """Derivative requested at the excluded minimum."""


class ReversedBoundsError(CalculusError):
    """Integral bounds with a > b; callers negate explicitly."""


class GridMismatchError(CalculusError):
    """Operands live on different grids."""


class EmptyTailError(CalculusError):
    """No partial-integral entries at or beyond the requested T."""


@dataclass(frozen=True)
class GridFunction:
    """Values of a (possibly vector-valued) function on a time-scale grid.

    ``values`` has shape (npoints, dim).  ``min_copied`` marks derivative
    grids whose value at the excluded minimum was copied from the successor.
    """

    ts: TimeScale
    values: np.ndarray
    min_copied: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] != len(self.ts):
            raise CalculusError(
                f"values shape {arr.shape} does not match grid of {len(self.ts)} points"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_callable(cls, ts: TimeScale, fn: Callable[[float], float]) -> "GridFunction":
        return cls(ts, np.array([[float(fn(t))] for t in ts.points]))

    @classmethod
    def scalar(cls, ts: TimeScale, values) -> "GridFunction":
        return cls(ts, np.asarray(values, dtype=float).reshape(len(ts), 1))

    # -- views ----------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def value_at(self, t: float) -> np.ndarray:
        return self.values[self.ts.index_of(t)]

    def component(self, c: int) -> np.ndarray:
        return self.values[:, c]

    def rho_values(self) -> np.ndarray:
        """Array of f(rho(t)) for every grid point t."""
        idx = [self.ts.rho_index(i) for i in range(len(self.ts))]
        return self.values[idx]

    # -- arithmetic (same grid required) --------------------------------------

    def _check_same_grid(self, other: "GridFunction"):
        if self.ts != other.ts:
            raise GridMismatchError("grid functions live on different grids")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.ts, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        return GridFunction(self.ts, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check_same_grid(other)
            return GridFunction(self.ts, self.values * other.values)
        return GridFunction(self.ts, self.values * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other: "GridFunction") -> "GridFunction":
        self._check_same_grid(other)
        if np.any(other.values == 0.0):
            raise CalculusError("division by a grid function with zeros")
        return GridFunction(self.ts, self.values / other.values)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.ts, -self.values)


# -- derivative ---------------------------------------------------------------


def nabla_derivative(f: GridFunction, t: float) -> np.ndarray:
    """Nabla derivative of f at grid point t (t must lie in the kappa set).

    Exact difference quotient at left-scattered points; backward difference
    over the sampling step at left-dense points.  At a right-dense minimum
    the forward difference over the first sampling step is used (the
    one-sided limit).
    """
    ts = f.ts
    i = ts.index_of(t)
    if i == 0:
        if ts.gap_kinds[0] is GapKind.SCATTERED:
            raise OutsideKappaError(
                f"{t!r} is the right-scattered minimum; outside the kappa set"
            )
        return (f.values[1] - f.values[0]) / ts.local_steps[1]
    return (f.values[i] - f.values[i - 1]) / ts.local_steps[i]


def nabla_derivative_fn(f: GridFunction) -> GridFunction:
    """Nabla derivative as a grid function on the full grid.

    The value at the minimum is copied from its successor (the derivative is
    not defined there when the minimum is right-scattered, and equals the
    forward difference when it is right-dense); the result is flagged with
    ``min_copied=True``.
    """
    steps = f.ts.local_steps[1:, None]
    dv = (f.values[1:] - f.values[:-1]) / steps
    out = np.vstack([dv[0], dv])
    return GridFunction(f.ts, out, min_copied=True)


# -- integral -----------------------------------------------------------------


def _integral_terms(f: GridFunction, ia: int, ib: int) -> np.ndarray:
    steps = f.ts.local_steps[ia + 1 : ib + 1, None]
    return steps * f.values[ia + 1 : ib + 1]


def nabla_integral(f: GridFunction, a: float, b: float) -> np.ndarray:
    """Nabla integral of f over (a, b]; returns a vector of shape (dim,).

    Zero when a == b.  Raises ReversedBoundsError when a > b.
    """
    ia = f.ts.index_of(a)
    ib = f.ts.index_of(b)
    if ia > ib:
        raise ReversedBoundsError(f"reversed bounds a={a!r} > b={b!r}")
    if ia == ib:
        return np.zeros(f.dim)
    terms = _integral_terms(f, ia, ib)
    return np.array([math.fsum(terms[:, c]) for c in range(f.dim)])


def local_rho_integral(f: GridFunction, t: float) -> np.ndarray:
    """nu(t) * f(t), the nabla integral of f over (rho(t), t].

    Zero at left-dense points.  At left-scattered points the product is
    asserted against the explicit single-term integral.
    """
    ts = f.ts
    i = ts.index_of(t)
    if i not in ts.kappa_indices:
        raise OutsideKappaError(f"{t!r} lies outside the kappa set")
    nu = ts.nu(t)
    out = nu * f.values[i]
    if nu > 0.0:
        direct = nabla_integral(f, ts.rho(t), t)
        assert np.array_equal(direct, out), "local rho-integral disagrees with quadrature"
    return out


def integration_by_parts_residual(f: GridFunction, g: GridFunction, a: float, b: float) -> float:
    """| integral(f * g^nabla) - [f g] + integral(f^nabla * g_rho) | over (a, b].

    Zero to rounding on all-scattered scales; O(h) across sampled gaps.
    Vector operands are combined componentwise and the max residual returned.
    """
    f._check_same_grid(g)
    ts = f.ts
    ia, ib = ts.index_of(a), ts.index_of(b)
    if ia > ib:
        raise ReversedBoundsError(f"reversed bounds a={a!r} > b={b!r}")
    df = nabla_derivative_fn(f)
    dg = nabla_derivative_fn(g)
    g_rho = GridFunction(ts, g.rho_values())
    lhs = nabla_integral(f * dg, a, b)
    boundary = f.values[ib] * g.values[ib] - f.values[ia] * g.values[ia]
    rhs = boundary - nabla_integral(df * g_rho, a, b)
    return float(np.max(np.abs(lhs - rhs))) if f.dim else 0.0


def partial_integrals(f: GridFunction, a: float) -> list[tuple[float, float | np.ndarray]]:
    """[(T', integral of f over (a, T'])] for every grid point T' > a.

    Scalar grid functions yield float values; vector ones yield arrays.
    """
    ts = f.ts
    ia = ts.index_of(a)
    out = []
    for j in range(ia + 1, len(ts)):
        val = nabla_integral(f, a, ts.points[j])
        out.append((ts.points[j], float(val[0]) if f.dim == 1 else val))
    return out


# -- tail infima --------------------------------------------------------------


def liminf_tail(seq: Sequence[tuple[float, float]], T: float) -> float:
    """inf of values over entries with T' >= T."""
    tail = [v for tp, v in seq if tp >= T]
    if not tail:
        raise EmptyTailError(f"no entries with T' >= {T!r}")
    return min(tail)


class LimInfEstimate(NamedTuple):
    value: float
    cauchy_gap: float
    converged: bool
    diverging: bool


def liminf_estimate(
    seq: Sequence[tuple[float, float]],
    cauchy_tol: float = 1e-8,
    divergence_threshold: float = 1e8,
) -> LimInfEstimate:
    """Estimate lim_{T->inf} inf_{T'>=T} value on a truncated sequence.

    The estimate is the inf over the last quarter of the sequence; the
    Cauchy gap compares it with the inf over the last half.  Divergence is
    flagged heuristically: |values| growing monotonically over the last half
    and exceeding ``divergence_threshold``.
    """
    if not seq:
        raise EmptyTailError("empty partial-integral sequence")
    vals = [v for _, v in seq]
    nq = max(1, len(vals) // 4)
    nh = max(1, len(vals) // 2)
    q = min(vals[-nq:])
    h = min(vals[-nh:])
    gap = abs(q - h)
    tail = vals[-nh:]
    growing = len(tail) >= 2 and all(
        abs(tail[k + 1]) > abs(tail[k]) for k in range(len(tail) - 1)
    )
    diverging = growing and abs(tail[-1]) > divergence_threshold
    return LimInfEstimate(q, gap, gap <= cauchy_tol, diverging)
