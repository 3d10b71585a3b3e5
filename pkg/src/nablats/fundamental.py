"""Constructive witnesses that a grid function is not identically zero.

Given a scalar grid function ``g``, this module builds an admissible
variation ``eta`` (vanishing at both ends of the grid) whose pairing

    integral of  g(t) * eta(rho(t))  over the support

is strictly positive.  The existence of such a variation certifies that
``g`` does not vanish on the detectable part of the grid; conversely,
when every admissible variation pairs to zero the function is declared
trivial.  A corollary-style check concludes that a function is constant
when its nabla derivative admits no such witness.

Detectability caveat: the pairing never sees ``g`` at the grid minimum,
nor at the successor of a left-scattered minimum (its only coefficient
is eta at the minimum, which is pinned to zero), nor at a left-dense
maximum.  ``construct_violating_variation`` therefore scans only points
whose value actually couples to a free eta coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .calculus import GridFunction, GridMismatchError, nabla_derivative_fn, nabla_integral
from .timescale import GapKind, TimeScale


class CaseTag(Enum):
    """Geometry of the constructed variation."""

    LEFT_DENSE_BUMP = "left_dense_bump"
    SCATTERED_SPIKE = "scattered_spike"
    RHO_DENSE_BUMP = "rho_dense_bump"
    BRIDGE = "bridge"


@dataclass(frozen=True)
class Variation:
    """An admissible variation certifying a nonzero pairing.

    ``eta`` vanishes at the grid minimum and maximum and outside
    ``support``; ``t0`` is the scanned point whose value triggered the
    construction.
    """

    eta: GridFunction
    support: tuple[float, float]
    case_tag: CaseTag
    t0: float


class DuboisReymondResult(NamedTuple):
    is_constant: bool
    spread: float
    variation: Optional[Variation]


def default_tolerance(g: GridFunction, ts: TimeScale) -> float:
    """Threshold below which a value is treated as zero.

    Scattered grids carry exact arithmetic, so an absolute 1e-10 floor
    suffices; grids with dense-sample gaps use a scale-relative cutoff.
    """
    if ts.all_scattered:
        return 1e-10
    mag = float(np.max(np.abs(g.values))) if g.values.size else 0.0
    return max(1e-10, 1e-6 * mag)


def _resolve_scale(g: GridFunction, ts: Optional[TimeScale]) -> TimeScale:
    if ts is None:
        return g.ts
    if ts is not g.ts and ts.points != g.ts.points:
        raise GridMismatchError("grid function does not live on the given time scale")
    return g.ts


def _require_scalar(g: GridFunction) -> np.ndarray:
    if g.values.shape[1] != 1:
        raise ValueError("a scalar grid function is required")
    return g.values[:, 0]


def witness_value(
    g: GridFunction,
    eta: GridFunction,
    ts: Optional[TimeScale] = None,
    a: Optional[float] = None,
) -> float:
    """Pair ``g`` against ``eta`` composed with rho over eta's support.

    Computes the nabla integral of ``t -> g(t) * eta(rho(t))``.  The
    integration window is the smallest gap-aligned interval containing
    every nonzero value of ``eta`` (clipped below at ``a``), so a spike
    variation reduces to the single local term nu(t0) * g(t0) * eta(rho(t0)).
    """
    ts = _resolve_scale(g, ts)
    gv = _require_scalar(g)
    ev = _require_scalar(eta) if eta.ts is g.ts or eta.ts.points == g.ts.points else None
    if ev is None:
        raise GridMismatchError("eta does not live on the same grid as g")
    pts = ts.points_array
    nonzero = np.nonzero(ev)[0]
    if nonzero.size == 0:
        return 0.0
    lo_idx = max(int(nonzero[0]) - 1, 0)
    hi_idx = int(nonzero[-1])
    # eta at index p couples to the value at p+1 across a scattered gap
    if hi_idx < len(ts) - 1 and ts.gap_kinds[hi_idx] is GapKind.SCATTERED:
        hi_idx += 1
    lo = pts[lo_idx] if a is None else max(a, pts[lo_idx])
    hi = pts[hi_idx]
    if not lo < hi:
        return 0.0
    paired = GridFunction(ts, g.values * eta.rho_values())
    return float(nabla_integral(paired, lo, hi)[0])


def _validated(
    g: GridFunction,
    ts: TimeScale,
    eta_values: np.ndarray,
    support: tuple[float, float],
    tag: CaseTag,
    t0: float,
) -> Optional[Variation]:
    eta = GridFunction(ts, eta_values[:, None])
    var = Variation(eta=eta, support=support, case_tag=tag, t0=t0)
    if witness_value(g, eta, ts) > 0.0:
        return var
    return None


def _dense_bump_values(
    vals: np.ndarray, ts: TimeScale, end: int, s: float
) -> Optional[tuple[np.ndarray, tuple[float, float]]]:
    """Parabolic bump on a dense run ending at index ``end``.

    The window [k, end] grows leftward through dense gaps while the
    newly interior value keeps the sign ``s`` strictly; eta vanishes at
    both window edges, so nothing couples across the jump that may
    follow ``end``.
    """
    pts = ts.points_array
    k = end - 1
    while k > 0 and ts.gap_kinds[k - 1] is GapKind.DENSE_SAMPLE and vals[k] * s > 0.0:
        k -= 1
    if k > end - 2:
        return None
    eta = np.zeros(len(ts))
    interior = np.arange(k + 1, end)
    eta[interior] = s * (pts[end] - pts[interior]) * (pts[interior] - pts[k])
    return eta, (float(pts[k]), float(pts[end]))


def construct_violating_variation(
    g: GridFunction,
    ts: Optional[TimeScale] = None,
    tol: Optional[float] = None,
) -> Optional[Variation]:
    """Build an admissible variation with a strictly positive pairing.

    Scans detectable points in order of decreasing magnitude and applies
    the construction matching the local geometry:

    * left-dense point: parabolic bump ``s*(t0 - t)(t - t1)`` over the
      sign-keeping dense window ending at the point;
    * left-scattered point with left-scattered predecessor: spike
      ``eta(rho(t0)) = g(t0)``, whose pairing is exactly
      ``g(t0)^2 * nu(t0)``;
    * left-scattered point with left-dense predecessor: bump ending at
      the predecessor when its value is above tolerance, otherwise a
      minimal bridge ramping from zero to ``g(t0)`` at the predecessor.

    Every construction is validated numerically before being returned;
    candidates whose construction fails (for example a sign flip right
    next to the point) are skipped.  Returns None when no detectable
    value exceeds the tolerance or no construction validates.
    """
    ts = _resolve_scale(g, ts)
    vals = _require_scalar(g)
    if tol is None:
        tol = default_tolerance(g, ts)
    m = len(ts) - 1
    if m < 1:
        return None

    candidates = []
    for j in range(1, m + 1):
        if not np.isfinite(vals[j]) or abs(vals[j]) <= tol:
            continue
        if ts.gap_kinds[j - 1] is GapKind.SCATTERED and j < 2:
            continue  # its only coefficient is eta at the minimum, pinned to 0
        candidates.append(j)
    candidates.sort(key=lambda j: (-abs(vals[j]), j))

    pts = ts.points_array
    for j in candidates:
        s = 1.0 if vals[j] > 0 else -1.0
        if ts.gap_kinds[j - 1] is GapKind.DENSE_SAMPLE:
            built = _dense_bump_values(vals, ts, j, s)
            if built is not None:
                var = _validated(g, ts, built[0], built[1], CaseTag.LEFT_DENSE_BUMP, float(pts[j]))
                if var is not None:
                    return var
            continue
        # left-scattered candidate: j >= 2 guaranteed above
        if ts.gap_kinds[j - 2] is GapKind.SCATTERED:
            eta = np.zeros(len(ts))
            eta[j - 1] = vals[j]
            support = (float(pts[j - 1]), float(pts[j]))
            var = _validated(g, ts, eta, support, CaseTag.SCATTERED_SPIKE, float(pts[j]))
            if var is not None:
                return var
            continue
        # predecessor is left-dense: prefer a bump ending at it
        if abs(vals[j - 1]) > tol:
            s_prev = 1.0 if vals[j - 1] > 0 else -1.0
            built = _dense_bump_values(vals, ts, j - 1, s_prev)
            if built is not None:
                var = _validated(g, ts, built[0], built[1], CaseTag.RHO_DENSE_BUMP, float(pts[j]))
                if var is not None:
                    return var
        # minimal bridge: ramp from zero at the prior point to g(t0) at rho(t0)
        eta = np.zeros(len(ts))
        eta[j - 1] = vals[j]
        support = (float(pts[j - 2]), float(pts[j]))
        var = _validated(g, ts, eta, support, CaseTag.BRIDGE, float(pts[j]))
        if var is not None:
            return var
    return None


def dubois_reymond_check(
    h: GridFunction,
    ts: Optional[TimeScale] = None,
    a: Optional[float] = None,
    tol: Optional[float] = None,
) -> DuboisReymondResult:
    """Decide whether ``h`` is constant by probing its nabla derivative.

    Computes the derivative on the whole grid and attempts to construct
    a violating variation against it; ``is_constant`` is True exactly
    when no witness exists.  ``spread`` reports max(h) - min(h) over the
    points at or after ``a`` as a direct measure of non-constancy.
    """
    ts = _resolve_scale(h, ts)
    hv = _require_scalar(h)
    start = ts.points[0] if a is None else a
    mask = ts.points_array >= start - 1e-15
    spread = float(np.max(hv[mask]) - np.min(hv[mask]))
    deriv = nabla_derivative_fn(h)
    variation = construct_violating_variation(deriv, ts, tol=tol)
    return DuboisReymondResult(is_constant=variation is None, spread=spread, variation=variation)
