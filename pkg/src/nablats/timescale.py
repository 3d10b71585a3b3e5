"""Finite time-scale grids: jump operators, graininess, point classification.

A grid is a strictly increasing tuple of real points together with a *kind*
for each adjacent gap:

* ``SCATTERED``   -- the gap is a true hole of the scale (the two points are
  consecutive members, nothing lies between them);
* ``DENSE_SAMPLE`` -- the gap is a sampling step inside a continuum interval
  that belongs to the scale but is represented only through its samples.

All point lookups compare floats exactly; no snapping is performed.  The
backward jump at the minimum and the forward jump at the maximum follow the
standard boundary conventions rho(t_0) = t_0 and sigma(t_m) = t_m, so the
minimum is left-dense and the maximum right-dense by convention.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class TimeScaleError(ValueError):
    """Invalid grid construction or grid use."""


class PointNotInScaleError(TimeScaleError):
    """A queried point is not a member of the grid (exact float comparison)."""


class GapKind(enum.Enum):
    SCATTERED = "scattered"
    DENSE_SAMPLE = "dense_sample"


class Side(enum.Enum):
    DENSE = "dense"
    SCATTERED = "scattered"


@dataclass(frozen=True)
class PointClass:
    """Local classification of a grid point (left/right density)."""

    left: Side
    right: Side

    @property
    def is_isolated(self) -> bool:
        return self.left is Side.SCATTERED and self.right is Side.SCATTERED

    @property
    def is_dense(self) -> bool:
        return self.left is Side.DENSE and self.right is Side.DENSE

    @property
    def is_left_scattered(self) -> bool:
        return self.left is Side.SCATTERED

    @property
    def is_right_scattered(self) -> bool:
        return self.right is Side.SCATTERED


@dataclass(frozen=True)
class TimeScale:
    """A finite, strictly increasing grid with per-gap kinds.

    ``unbounded_above`` marks the grid as a truncation of a scale that
    continues past the last point; it is advisory (reports may mention it)
    and does not change any operator below.
    """

    points: tuple[float, ...]
    gap_kinds: tuple[GapKind, ...]
    unbounded_above: bool = False

    def __post_init__(self):
        if len(self.points) < 2:
            raise TimeScaleError("a time scale grid needs at least 2 points")
        if len(self.gap_kinds) != len(self.points) - 1:
            raise TimeScaleError(
                f"expected {len(self.points) - 1} gap kinds, got {len(self.gap_kinds)}"
            )
        for p in self.points:
            if not math.isfinite(p):
                raise TimeScaleError(f"non-finite grid point {p!r}")
        for a, b in zip(self.points, self.points[1:]):
            if not (b > a):
                raise TimeScaleError(f"grid points must increase strictly ({a!r} !< {b!r})")
        for k in self.gap_kinds:
            if not isinstance(k, GapKind):
                raise TimeScaleError(f"bad gap kind {k!r}")

    # -- cached views -------------------------------------------------------

    @cached_property
    def points_array(self) -> np.ndarray:
        arr = np.asarray(self.points, dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def _index(self) -> dict[float, int]:
        return {t: i for i, t in enumerate(self.points)}

    @cached_property
    def local_steps(self) -> np.ndarray:
        """step[i] = t_i - t_{i-1} for i >= 1; step[0] = 0 by convention."""
        arr = np.diff(self.points_array, prepend=self.points[0])
        arr.setflags(write=False)
        return arr

    @cached_property
    def kappa_indices(self) -> tuple[int, ...]:
        if self.gap_kinds[0] is GapKind.SCATTERED:
            return tuple(range(1, len(self.points)))
        return tuple(range(len(self.points)))

    # -- basic queries ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.points)

    def index_of(self, t: float) -> int:
        try:
            return self._index[float(t)]
        except KeyError:
            raise PointNotInScaleError(f"{t!r} is not a grid point") from None

    def __contains__(self, t: float) -> bool:
        return float(t) in self._index

    @property
    def min(self) -> float:
        return self.points[0]

    @property
    def max(self) -> float:
        return self.points[-1]

    # -- jump operators and graininess --------------------------------------

    def rho(self, t: float) -> float:
        """Backward jump; rho(min) = min, rho(t) = t at left-dense points."""
        i = self.index_of(t)
        if i == 0 or self.gap_kinds[i - 1] is GapKind.DENSE_SAMPLE:
            return self.points[i]
        return self.points[i - 1]

    def sigma(self, t: float) -> float:
        """Forward jump; sigma(max) = max, sigma(t) = t at right-dense points."""
        i = self.index_of(t)
        if i == len(self.points) - 1 or self.gap_kinds[i] is GapKind.DENSE_SAMPLE:
            return self.points[i]
        return self.points[i + 1]

    def nu(self, t: float) -> float:
        """Backward graininess nu(t) = t - rho(t)."""
        i = self.index_of(t)
        if i == 0 or self.gap_kinds[i - 1] is GapKind.DENSE_SAMPLE:
            return 0.0
        return self.points[i] - self.points[i - 1]

    def rho_index(self, i: int) -> int:
        """Index of rho(points[i])."""
        if i == 0 or self.gap_kinds[i - 1] is GapKind.DENSE_SAMPLE:
            return i
        return i - 1

    def classify(self, t: float) -> PointClass:
        i = self.index_of(t)
        if i == 0:
            left = Side.DENSE  # rho(min) = min
        else:
            left = Side.DENSE if self.gap_kinds[i - 1] is GapKind.DENSE_SAMPLE else Side.SCATTERED
        if i == len(self.points) - 1:
            right = Side.DENSE  # sigma(max) = max
        else:
            right = Side.DENSE if self.gap_kinds[i] is GapKind.DENSE_SAMPLE else Side.SCATTERED
        return PointClass(left, right)

    def kappa_set(self) -> tuple[float, ...]:
        """Grid points where the nabla derivative is defined.

        Excludes the minimum exactly when the minimum is right-scattered.
        """
        return tuple(self.points[i] for i in self.kappa_indices)

    @property
    def all_scattered(self) -> bool:
        return all(k is GapKind.SCATTERED for k in self.gap_kinds)


# -- builders ---------------------------------------------------------------


def integers(a: int, b: int) -> TimeScale:
    """The integer scale {a, a+1, ..., b}."""
    a, b = int(a), int(b)
    if b <= a:
        raise TimeScaleError(f"integers({a}, {b}): need b > a")
    pts = tuple(float(t) for t in range(a, b + 1))
    return TimeScale(pts, (GapKind.SCATTERED,) * (len(pts) - 1))


def uniform(a: float, b: float, h: float) -> TimeScale:
    """The uniform discrete scale a, a+h, ..., b (all gaps scattered).

    h must divide b - a to float tolerance; the last point is set to b
    exactly.
    """
    if h <= 0:
        raise TimeScaleError("uniform: step h must be positive")
    k = round((b - a) / h)
    if k < 1 or abs(a + k * h - b) > 1e-12 * max(1.0, abs(a), abs(b)):
        raise TimeScaleError(f"uniform({a}, {b}, {h}): step does not divide the span")
    pts = tuple(a + i * h for i in range(k)) + (float(b),)
    return TimeScale(pts, (GapKind.SCATTERED,) * k)


def sampled_interval(a: float, b: float, n: int) -> TimeScale:
    """A continuum interval [a, b] represented by n sampling steps.

    Returns n + 1 points with DENSE_SAMPLE gaps; the last point is b exactly.
    """
    n = int(n)
    if n < 1:
        raise TimeScaleError("sampled_interval: need at least one step")
    if not b > a:
        raise TimeScaleError(f"sampled_interval({a}, {b}): need b > a")
    pts = tuple(a + (b - a) * i / n for i in range(n)) + (float(b),)
    return TimeScale(pts, (GapKind.DENSE_SAMPLE,) * n)


def q_scale(q: float, t0: float, count: int) -> TimeScale:
    """The geometric scale {t0 * q**i : i = 0..count-1} for q > 1, t0 > 0."""
    if q <= 1:
        raise TimeScaleError("q_scale: need q > 1")
    if t0 <= 0:
        raise TimeScaleError("q_scale: need t0 > 0")
    if count < 2:
        raise TimeScaleError("q_scale: need at least 2 points")
    pts = tuple(t0 * q**i for i in range(count))
    return TimeScale(pts, (GapKind.SCATTERED,) * (count - 1))


def union(scales: Sequence[TimeScale]) -> TimeScale:
    """Disjoint union of grids, ordered; junction gaps are SCATTERED.

    Components must not overlap or touch (strictly increasing overall grid).
    """
    if not scales:
        raise TimeScaleError("union: empty input")
    parts = sorted(scales, key=lambda s: s.points[0])
    pts: list[float] = []
    kinds: list[GapKind] = []
    for s in parts:
        if pts:
            if not s.points[0] > pts[-1]:
                raise TimeScaleError(
                    f"union: components overlap near {s.points[0]!r}"
                )
            kinds.append(GapKind.SCATTERED)
        pts.extend(s.points)
        kinds.extend(s.gap_kinds)
    return TimeScale(tuple(pts), tuple(kinds), unbounded_above=parts[-1].unbounded_above)


def from_points(
    points: Iterable[float],
    gap_kinds: Iterable[GapKind | str],
    unbounded_above: bool = False,
) -> TimeScale:
    """Build a grid from explicit points and gap kinds.

    Gap kinds may be GapKind values or the strings "scattered" /
    "dense_sample" (also "s" / "d").
    """
    kinds = []
    for k in gap_kinds:
        if isinstance(k, GapKind):
            kinds.append(k)
        else:
            key = str(k).strip().lower()
            if key in ("s", "scattered"):
                kinds.append(GapKind.SCATTERED)
            elif key in ("d", "dense", "dense_sample"):
                kinds.append(GapKind.DENSE_SAMPLE)
            else:
                raise TimeScaleError(f"unknown gap kind {k!r}")
    return TimeScale(tuple(float(p) for p in points), tuple(kinds), unbounded_above)
