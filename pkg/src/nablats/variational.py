"""Infinite-horizon variational problems on time-scale grids.

A problem maximizes (or minimizes)

    J(x) = integral over (a, inf) of  L(t, x_rho(t), x_nabla(t), z(t))

subject to x(a) = x_a, where z accumulates a constraint integrand:

    z(t) = integral over (a, t] of  g(tau, x_rho(tau), x_nabla(tau)).

In expressions, ``x1..xn`` denote the state sampled at the backward jump
rho(t), ``v1..vn`` its nabla derivative, and ``z`` the accumulated integral.

This module evaluates truncated functionals and the first-order optimality
residuals:

* the pointwise Euler-Lagrange residual at horizon T',
      gx*I - (gv*I)^nabla + Lx - Lv^nabla,     I(t) = int_{rho(t)}^{T'} Lz,
  which vanishes along a maximizer for every t and every T' >= t;
* the integral (Dubois-Reymond) form, constant in t at a maximizer;
* two transversality residuals whose tail infima vanish at a maximizer;
* a weak-maximizer margin comparing two admissible trajectories through the
  tail infimum of truncated objective differences.

Composite quantities (Lv along the path, gv times the inner integral) are
nabla-differentiated numerically from their grid samples.  Values that would
require the undefined derivative at a right-scattered minimum use the
successor-copy convention and are excluded from reported residual domains.

Minimization problems are verified through their maximization mirror: all
residuals use -L internally when sense is MIN (``evaluate_functional_partial``
always reports the literal integral of L).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .calculus import (
    GridFunction,
    GridMismatchError,
    OutsideKappaError,
    liminf_estimate,
    nabla_derivative_fn,
)
from .expressions import (
    Expr,
    ExprDomainError,
    Neg,
    differentiate,
    evaluate_many,
    parse,
    to_source,
    variables,
)
from .timescale import GapKind, TimeScale


class ProblemError(ValueError):
    pass


class AdmissibilityError(ValueError):
    """Trajectory violates the pinned initial state or lives off-grid."""


class Sense(enum.Enum):
    MAX = "max"
    MIN = "min"


def _allowed_vars(n: int, with_z: bool) -> set[str]:
    names = {"t"}
    for i in range(1, n + 1):
        names.add(f"x{i}")
        names.add(f"v{i}")
    if with_z:
        names.add("z")
    return names


@dataclass(frozen=True)
class Problem:
    """An infinite-horizon problem instance on a (truncated) grid."""

    ts: TimeScale
    n: int
    lagrangian: Expr
    z_integrand: Expr
    x_a: tuple[float, ...]
    sense: Sense = Sense.MAX

    def __post_init__(self):
        if self.n < 1:
            raise ProblemError("state dimension n must be >= 1")
        object.__setattr__(self, "x_a", tuple(float(v) for v in self.x_a))
        if len(self.x_a) != self.n:
            raise ProblemError(f"x_a has length {len(self.x_a)}, expected n={self.n}")
        if not all(math.isfinite(v) for v in self.x_a):
            raise ProblemError("x_a must be finite")
        bad = variables(self.lagrangian) - _allowed_vars(self.n, with_z=True)
        if bad:
            raise ProblemError(f"lagrangian uses unknown variables {sorted(bad)}")
        bad = variables(self.z_integrand) - _allowed_vars(self.n, with_z=False)
        if bad:
            raise ProblemError(f"z integrand uses unknown variables {sorted(bad)} (z itself is not allowed)")

    @classmethod
    def from_strings(cls, ts, n, lagrangian, z_integrand, x_a, sense=Sense.MAX) -> "Problem":
        if isinstance(x_a, (int, float)):
            x_a = (float(x_a),)
        return cls(ts, n, parse(lagrangian), parse(z_integrand), tuple(x_a), sense)

    @cached_property
    def effective_lagrangian(self) -> Expr:
        """The maximized integrand: L itself, or -L for minimization."""
        return Neg(self.lagrangian) if self.sense is Sense.MIN else self.lagrangian

    @cached_property
    def partials(self) -> dict[str, list[Expr] | Expr]:
        L, g = self.effective_lagrangian, self.z_integrand
        return {
            "Lx": [differentiate(L, f"x{i}") for i in range(1, self.n + 1)],
            "Lv": [differentiate(L, f"v{i}") for i in range(1, self.n + 1)],
            "Lz": differentiate(L, "z"),
            "gx": [differentiate(g, f"x{i}") for i in range(1, self.n + 1)],
            "gv": [differentiate(g, f"v{i}") for i in range(1, self.n + 1)],
        }

    @property
    def x_a_array(self) -> np.ndarray:
        return np.asarray(self.x_a)


@dataclass(frozen=True)
class Trajectory:
    """State values on the problem grid with x(a) pinned to x_a."""

    x: GridFunction

    @classmethod
    def from_values(cls, problem: Problem, values) -> "Trajectory":
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.shape != (len(problem.ts), problem.n):
            raise AdmissibilityError(
                f"trajectory shape {arr.shape} does not match ({len(problem.ts)}, {problem.n})"
            )
        if not np.array_equal(arr[0], problem.x_a_array):
            raise AdmissibilityError(
                f"x(a) = {arr[0].tolist()} does not match the pinned x_a = {list(problem.x_a)}"
            )
        if not np.all(np.isfinite(arr)):
            raise AdmissibilityError("trajectory contains non-finite values")
        return cls(GridFunction(problem.ts, arr))

    @classmethod
    def constant(cls, problem: Problem) -> "Trajectory":
        values = np.tile(problem.x_a_array, (len(problem.ts), 1))
        return cls(GridFunction(problem.ts, values))

    @property
    def values(self) -> np.ndarray:
        return self.x.values

    def value_at(self, t: float) -> np.ndarray:
        return self.x.value_at(t)


def _check_trajectory(p: Problem, x: Trajectory):
    if x.x.ts != p.ts:
        raise GridMismatchError("trajectory grid does not match the problem grid")
    if x.x.dim != p.n:
        raise AdmissibilityError(f"trajectory dimension {x.x.dim} != n={p.n}")


# -- path evaluation ------------------------------------------------------------


def _prefix_fsum(terms: np.ndarray) -> np.ndarray:
    """prefix[j] = fsum(terms[1..j]); terms[0] is ignored (weight 0 at the min)."""
    out = np.empty(len(terms))
    out[0] = 0.0
    for j in range(1, len(terms)):
        out[j] = math.fsum(terms[1 : j + 1])
    return out


def _path_env(p: Problem, x: Trajectory) -> dict[str, np.ndarray]:
    """Arrays of t, x_rho and x_nabla along the trajectory (z added separately)."""
    ts = p.ts
    xd = nabla_derivative_fn(x.x).values
    xr = x.x.rho_values()
    env: dict[str, np.ndarray] = {"t": ts.points_array}
    for i in range(p.n):
        env[f"x{i + 1}"] = xr[:, i]
        env[f"v{i + 1}"] = xd[:, i]
    return env

def _eval_checked(expr: Expr, env, ts: TimeScale, what: str) -> np.ndarray:
    vals = np.broadcast_to(np.asarray(evaluate_many(expr, env), dtype=float), (len(ts),)).copy()
    bad = ~np.isfinite(vals)
    if np.any(bad):
        tau = ts.points[int(np.argmax(bad))]
        raise ExprDomainError(
            f"{what} '{to_source(expr)}' is non-finite at tau={tau!r}"
        )
    return vals


def compute_z(p: Problem, x: Trajectory) -> GridFunction:
    """The accumulated constraint integral z along x; z(a) = 0."""
    _check_trajectory(p, x)
    env = _path_env(p, x)
    gvals = _eval_checked(p.z_integrand, env, p.ts, "z integrand")
    terms = p.ts.local_steps * gvals
    return GridFunction.scalar(p.ts, _prefix_fsum(terms))


def evaluate_functional_partial(p: Problem, x: Trajectory, T_prime: float) -> float:
    """The truncated objective: integral of L over (a, T'] along x.

    Always the literal L, independent of the problem sense.
    """
    _check_trajectory(p, x)
    k = p.ts.index_of(T_prime)
    if k == 0:
        raise ProblemError(f"T_prime={T_prime!r} must lie strictly past the initial point")
    env = _path_env(p, x)
    env["z"] = compute_z(p, x).values[:, 0]
    lvals = _eval_checked(p.lagrangian, env, p.ts, "lagrangian")
    terms = p.ts.local_steps * lvals
    return math.fsum(terms[1 : k + 1])


# -- Euler-Lagrange residual core ------------------------------------------------


class _ELCore:
    """All per-point arrays needed by the residual operators, computed once."""

    def __init__(self, p: Problem, x: Trajectory):
        _check_trajectory(p, x)
        ts = p.ts
        self.p, self.x, self.ts = p, x, ts
        env = _path_env(p, x)
        env["z"] = compute_z(p, x).values[:, 0]
        d = p.partials
        m, n = len(ts), p.n
        self.Lz = _eval_checked(d["Lz"], env, ts, "dL/dz")
        self.Lx = np.column_stack([_eval_checked(e, env, ts, "dL/dx") for e in d["Lx"]])
        self.Lv = np.column_stack([_eval_checked(e, env, ts, "dL/dv") for e in d["Lv"]])
        self.gx = np.column_stack([_eval_checked(e, env, ts, "dg/dx") for e in d["gx"]])
        self.gv = np.column_stack([_eval_checked(e, env, ts, "dg/dv") for e in d["gv"]])
        w = ts.local_steps
        self.P = _prefix_fsum(w * self.Lz)  # P[j] = int_a^{t_j} Lz
        self.CumLx = np.column_stack([_prefix_fsum(w * self.Lx[:, i]) for i in range(n)])
        self.rho_idx = np.array([ts.rho_index(j) for j in range(m)])
        self.nu_true = np.where(self.rho_idx == np.arange(m), 0.0, w)

    def inner_integral(self, k: int) -> np.ndarray:
        """I[j] = integral of Lz over (rho(t_j), T'] with T' = t_k."""
        return self.P[k] - self.P[self.rho_idx]

    def pointwise(self, k: int) -> np.ndarray:
        """Residual array (m, n); rows past k are meaningless, row at the
        minimum (and its successor on scattered-start grids) use copied
        derivative values."""
        ts, p = self.ts, self.p
        I = self.inner_integral(k)
        out = np.empty_like(self.Lx)
        for i in range(p.n):
            dG = nabla_derivative_fn(GridFunction.scalar(ts, self.gv[:, i] * I)).values[:, 0]
            dLv = nabla_derivative_fn(GridFunction.scalar(ts, self.Lv[:, i])).values[:, 0]
            out[:, i] = self.gx[:, i] * I - dG + self.Lx[:, i] - dLv
        return out

    def integral_form(self, k: int) -> np.ndarray:
        """Dubois-Reymond form array (m, n): constant in t at a maximizer."""
        I = self.inner_integral(k)
        w = self.ts.local_steps
        out = np.empty_like(self.Lx)
        for i in range(self.p.n):
            cum_gI = _prefix_fsum(w * self.gx[:, i] * I)
            out[:, i] = (cum_gI[k] - cum_gI) + self.gv[:, i] * I + self.Lv[:, i] - self.CumLx[:, i]
        return out

    def trans_T1(self, j: int) -> float:
        bracket = self.Lv[j] + self.gv[j] * (self.nu_true[j] * self.Lz[j])
        return float(self.x.values[j] @ bracket)

    def trans_T2(self, j: int) -> float:
        return float(self.x.values[j] @ self.CumLx[j])


def el_report_indices(ts: TimeScale) -> tuple[int, ...]:
    """Kappa indices where the pointwise residual stencil is fully defined.

    On grids whose minimum is right-scattered the successor of the minimum is
    excluded: its stencil would use the undefined derivative at the minimum
    (only the successor-copy convention makes it total).
    """
    idx = ts.kappa_indices
    if ts.gap_kinds[0] is GapKind.SCATTERED:
        return tuple(j for j in idx if j >= 2)
    return idx


def _require_kappa(ts: TimeScale, t: float) -> int:
    j = ts.index_of(t)
    if j not in ts.kappa_indices:
        raise OutsideKappaError(f"{t!r} lies outside the kappa set")
    return j


def finite_horizon_el_residual(p: Problem, x: Trajectory, b: float, t: float) -> np.ndarray:
    """Euler-Lagrange residual at t for the problem truncated at horizon b."""
    core = _ELCore(p, x)
    k = p.ts.index_of(b)
    j = _require_kappa(p.ts, t)
    if j > k:
        raise ProblemError(f"t={t!r} exceeds the horizon b={b!r}")
    return core.pointwise(k)[j]


def el_residual_pointwise(p: Problem, x: Trajectory, t: float, T_prime: float) -> np.ndarray:
    """Pointwise residual at t with tail integrals cut at T' (T' >= t)."""
    core = _ELCore(p, x)
    k = p.ts.index_of(T_prime)
    j = _require_kappa(p.ts, t)
    if j > k:
        raise ProblemError(f"t={t!r} exceeds T_prime={T_prime!r}")
    return core.pointwise(k)[j]


def el_residual_integral(p: Problem, x: Trajectory, t: float, T_prime: float) -> np.ndarray:
    """Integral (Dubois-Reymond) form at t; constant in t at a maximizer."""
    core = _ELCore(p, x)
    k = p.ts.index_of(T_prime)
    j = p.ts.index_of(t)
    if j > k:
        raise ProblemError(f"t={t!r} exceeds T_prime={T_prime!r}")
    return core.integral_form(k)[j]


def el_integral_constant_spread(p: Problem, x: Trajectory, T_prime: float) -> np.ndarray:
    """max - min of the integral form over kappa points up to T', per component."""
    core = _ELCore(p, x)
    k = p.ts.index_of(T_prime)
    rows = [j for j in p.ts.kappa_indices if j <= k]
    F = core.integral_form(k)[rows]
    return F.max(axis=0) - F.min(axis=0)


def transversality_residual_T1(p: Problem, x: Trajectory, T_prime: float) -> float:
    """x(T') . [Lv(T') + gv(T') * nu(T') * Lz(T')]."""
    core = _ELCore(p, x)
    return core.trans_T1(p.ts.index_of(T_prime))


def transversality_residual_T2(p: Problem, x: Trajectory, T_prime: float) -> float:
    """x(T') . integral of Lx over (a, T']."""
    core = _ELCore(p, x)
    return core.trans_T2(p.ts.index_of(T_prime))


def weak_max_compare(
    p: Problem,
    x_candidate: Trajectory,
    x_star: Trajectory,
    cauchy_tol: float = 1e-8,
) -> float:
    """Estimated tail margin of the candidate against x_star.

    Returns the liminf-estimate of D(T') = J_{T'}(candidate) - J_{T'}(star)
    computed with the effective (maximized) integrand; x_star passes the weak
    maximality test against this candidate when the margin is <= 0 (up to a
    caller-chosen tolerance).  Identical trajectories give exactly 0.
    """
    _check_trajectory(p, x_candidate)
    _check_trajectory(p, x_star)
    sign = -1.0 if p.sense is Sense.MIN else 1.0
    seq = []
    for j in range(1, len(p.ts)):
        T = p.ts.points[j]
        d = sign * (
            evaluate_functional_partial(p, x_candidate, T)
            - evaluate_functional_partial(p, x_star, T)
        )
        seq.append((T, d))
    return liminf_estimate(seq, cauchy_tol=cauchy_tol).value


# -- reporting -------------------------------------------------------------------


@dataclass
class ResidualReport:
    """First-order residuals of a trajectory at a fixed verification horizon."""

    T_prime: float
    el_pointwise: list[tuple[float, np.ndarray]]
    el_integral: list[tuple[float, np.ndarray]]
    el_integral_constant_spread: np.ndarray
    trans_T1: list[tuple[float, float]]
    trans_T2: list[tuple[float, float]]
    weak_max_margin: float | None = None

    @property
    def max_pointwise(self) -> float:
        if not self.el_pointwise:
            return 0.0
        return max(float(np.max(np.abs(v))) for _, v in self.el_pointwise)

    @property
    def max_spread(self) -> float:
        return float(np.max(self.el_integral_constant_spread))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "T_prime", "component", "value", "kind"])
            for t, vec in self.el_pointwise:
                for c, v in enumerate(vec, start=1):
                    wr.writerow([repr(t), repr(self.T_prime), c, repr(float(v)), "el_pointwise"])
            for t, vec in self.el_integral:
                for c, v in enumerate(vec, start=1):
                    wr.writerow([repr(t), repr(self.T_prime), c, repr(float(v)), "el_integral"])
            for c, v in enumerate(self.el_integral_constant_spread, start=1):
                wr.writerow([repr(self.T_prime), repr(self.T_prime), c, repr(float(v)), "el_integral_spread"])
            for t, v in self.trans_T1:
                wr.writerow([repr(t), repr(self.T_prime), 0, repr(v), "trans_T1"])
            for t, v in self.trans_T2:
                wr.writerow([repr(t), repr(self.T_prime), 0, repr(v), "trans_T2"])
            if self.weak_max_margin is not None:
                wr.writerow(
                    [repr(self.T_prime), repr(self.T_prime), 0, repr(self.weak_max_margin), "weak_max_margin"]
                )


def residual_report(p: Problem, x: Trajectory, T_prime: float | None = None) -> ResidualReport:
    """Evaluate all residual families at one horizon (default: the last point)."""
    ts = p.ts
    if T_prime is None:
        T_prime = ts.points[-1]
    core = _ELCore(p, x)
    k = ts.index_of(T_prime)
    if k == 0:
        raise ProblemError("T_prime must lie strictly past the initial point")
    R = core.pointwise(k)
    F = core.integral_form(k)
    rows_pw = [j for j in el_report_indices(ts) if j <= k]
    rows_int = [j for j in ts.kappa_indices if j <= k]
    el_pw = [(ts.points[j], R[j]) for j in rows_pw]
    el_int = [(ts.points[j], F[j]) for j in rows_int]
    spread = (
        F[rows_int].max(axis=0) - F[rows_int].min(axis=0)
        if rows_int
        else np.zeros(p.n)
    )
    t1 = [(ts.points[j], core.trans_T1(j)) for j in range(1, k + 1)]
    t2 = [(ts.points[j], core.trans_T2(j)) for j in range(1, k + 1)]
    return ResidualReport(float(T_prime), el_pw, el_int, spread, t1, t2)


# -- trajectory CSV ---------------------------------------------------------------


def trajectory_to_csv(x: Trajectory, path):
    """Write t,x1,...,xn rows with full-precision (round-trip exact) floats."""
    n = x.x.dim
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t"] + [f"x{i}" for i in range(1, n + 1)])
        for j, t in enumerate(x.x.ts.points):
            wr.writerow([repr(t)] + [repr(float(v)) for v in x.x.values[j]])


def trajectory_from_csv(p: Problem, path) -> Trajectory:
    """Read a trajectory written by ``trajectory_to_csv`` for this problem."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        expected = ["t"] + [f"x{i}" for i in range(1, p.n + 1)]
        if header != expected:
            raise AdmissibilityError(f"bad trajectory header {header!r}, expected {expected!r}")
        rows = [[float(cell) for cell in row] for row in rd if row]
    if len(rows) != len(p.ts):
        raise AdmissibilityError(
            f"trajectory has {len(rows)} rows, grid has {len(p.ts)} points"
        )
    arr = np.asarray(rows)
    if not np.array_equal(arr[:, 0], p.ts.points_array):
        raise AdmissibilityError("trajectory t column does not match the problem grid")
    return Trajectory.from_values(p, arr[:, 1:])
