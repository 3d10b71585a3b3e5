"""Direct maximization of truncated functionals over trajectory values.

The solver treats the state values at grid points after the start (and
before a pinned terminal point) as optimization variables and performs
gradient ascent with a backtracking line search on the truncated
objective.  A brute-force enumerator over a finite value grid serves as
an independent oracle on tiny instances, and a horizon study re-solves
the problem at increasing truncations to expose the decay of the
transversality residuals.

Gradients come in two flavours: central finite differences on the
trajectory coordinates (the default, fully independent of the symbolic
layer) and an exact analytic gradient of the discretized objective
assembled from the symbolic partials.  Deep discounted horizons need
the analytic gradient: finite differences bottom out near 5e-11 because
of float cancellation, which drowns the exponentially small gradient
entries that matter at large times.  Jacobi preconditioning rescales
each coordinate by its local curvature so that the stopping test reads
in step units rather than raw gradient units.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .calculus import GridFunction
from .expressions import evaluate_many, to_source
from .timescale import GapKind, TimeScale
from .variational import (
    Problem,
    ProblemError,
    Trajectory,
    el_report_indices,
    el_residual_pointwise,
    evaluate_functional_partial,
    transversality_residual_T1,
    transversality_residual_T2,
)


class NonFiniteObjectiveError(ValueError):
    """The objective or its integrand became non-finite during the search."""


class EnumerationGuardError(ValueError):
    """The brute-force assignment count exceeds the enumeration guard."""


@dataclass(frozen=True)
class TerminalMode:
    kind: str
    values: Optional[tuple[float, ...]] = None


FREE = TerminalMode("free")


def PINNED(*values: float) -> TerminalMode:
    """Pin the state at the truncation point to the given values."""
    if not values:
        raise ValueError("PINNED requires at least one value")
    vals = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("pinned terminal values must be finite")
    return TerminalMode("pinned", vals)


@dataclass(frozen=True)
class SolveOptions:
    """Controls for direct_solve / brute_force / horizon_study.

    ``gradient`` selects "fd" (central finite differences) or "analytic"
    (exact gradient of the discretized objective);  ``precondition``
    rescales the ascent direction by inverse local curvature and then
    interprets ``grad_tol`` as a bound on the step, which is the only
    reliable stopping rule when the objective carries strong discounting.
    """

    T_trunc: float
    terminal_mode: TerminalMode = FREE
    max_iters: int = 2000
    step_init: float = 1.0
    grad_tol: float = 1e-6
    seed: int = 0
    gradient: str = "fd"
    precondition: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.step_init > 0:
            raise ValueError("step_init must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.gradient not in ("fd", "analytic"):
            raise ValueError("gradient must be 'fd' or 'analytic'")
        if self.terminal_mode.kind not in ("free", "pinned"):
            raise ValueError("unknown terminal mode")


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    converged: bool
    grad_norm: float
    objective: float
    objective_log: tuple[float, ...]


ARMIJO = 1e-4


class _Engine:
    """Truncated-objective evaluation on raw value arrays.

    Works on the slice of the grid up to the truncation index K; terms
    at the start carry weight zero and are never evaluated, so domain
    trouble at excluded points cannot poison the search.
    """

    def __init__(self, p: Problem, opts: SolveOptions):
        ts = p.ts
        self.p = p
        self.opts = opts
        self.K = ts.index_of(opts.T_trunc)
        if self.K < 1:
            raise ProblemError("T_trunc must lie strictly past the initial point")
        self.n = p.n
        self.w = np.asarray(ts.local_steps[: self.K + 1])
        self.t_inner = ts.points_array[1 : self.K + 1]
        self.scattered = np.array(
            [k is GapKind.SCATTERED for k in ts.gap_kinds[: self.K]]
        )
        free = list(range(1, self.K + 1))
        if opts.terminal_mode.kind == "pinned":
            free.remove(self.K)
            if len(opts.terminal_mode.values) != p.n:
                raise ProblemError(
                    f"pinned terminal needs {p.n} value(s), got {len(opts.terminal_mode.values)}"
                )
        self.free = [(j, c) for j in free for c in range(p.n)]

    def initial_values(self) -> np.ndarray:
        ts, p, opts = self.p.ts, self.p, self.opts
        x = np.tile(p.x_a_array, (len(ts), 1)).astype(float)
        if opts.terminal_mode.kind == "pinned":
            target = np.asarray(opts.terminal_mode.values)
            span = ts.points[self.K] - ts.points[0]
            frac = (ts.points_array[: self.K + 1] - ts.points[0]) / span
            x[: self.K + 1] = p.x_a_array + frac[:, None] * (target - p.x_a_array)
            x[self.K + 1 :] = target
        return x

    def _env(self, x: np.ndarray) -> dict[str, np.ndarray]:
        head = x[: self.K + 1]
        v = np.diff(head, axis=0) / self.w[1:, None]
        xr = np.where(self.scattered[:, None], head[:-1], head[1:])
        env: dict[str, np.ndarray] = {"t": self.t_inner}
        for c in range(self.n):
            env[f"x{c + 1}"] = xr[:, c]
            env[f"v{c + 1}"] = v[:, c]
        return env

    def _eval(self, expr, env, what: str) -> np.ndarray:
        vals = np.broadcast_to(
            np.asarray(evaluate_many(expr, env), dtype=float), (self.K,)
        )
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmax(~np.isfinite(vals)))
            raise NonFiniteObjectiveError(
                f"{what} '{to_source(expr)}' is non-finite at t={self.t_inner[bad]!r} "
                "during the search"
            )
        return vals

    def objective(self, x: np.ndarray) -> float:
        # correctly-rounded sums keep the line search honest: once true
        # improvements drop below one ulp of the objective, probes evaluate
        # bit-identically instead of picking up accumulation noise that
        # masquerades as a decrease
        env = self._env(x)
        gvals = self._eval(self.p.z_integrand, env, "z integrand")
        terms = self.w[1:] * gvals
        env["z"] = np.array([math.fsum(terms[: j + 1]) for j in range(self.K)])
        lvals = self._eval(self.p.effective_lagrangian, env, "objective integrand")
        return math.fsum(self.w[1:] * lvals)

    def fd_gradient(self, x: np.ndarray) -> np.ndarray:
        grad = np.empty(len(self.free))
        for i, (j, c) in enumerate(self.free):
            h = 1e-6 * (1.0 + abs(x[j, c]))
            xp = x.copy()
            xp[j, c] = x[j, c] + h
            fp = self.objective(xp)
            xp[j, c] = x[j, c] - h
            fm = self.objective(xp)
            grad[i] = (fp - fm) / (2.0 * h)
        return grad

    def analytic_gradient(self, x: np.ndarray) -> np.ndarray:
        """Exact gradient of the discretized objective.

        With S_j the tail sum of w*L_z from j to K, the chain through z
        collapses to S at the point where a coordinate first enters the
        accumulation, so each coordinate touches at most four terms.
        """
        env = self._env(x)
        gvals = self._eval(self.p.z_integrand, env, "z integrand")
        env["z"] = np.cumsum(self.w[1:] * gvals)
        d = self.p.partials
        Lz = self._eval(d["Lz"], env, "dL/dz")
        S = np.cumsum((self.w[1:] * Lz)[::-1])[::-1]
        cols = {}
        for c in range(self.n):
            cols[c] = (
                self._eval(d["Lx"][c], env, "dL/dx"),
                self._eval(d["Lv"][c], env, "dL/dv"),
                self._eval(d["gx"][c], env, "dg/dx"),
                self._eval(d["gv"][c], env, "dg/dv"),
            )
        grad = np.empty(len(self.free))
        for i, (j, c) in enumerate(self.free):
            Lx, Lv, gx, gv = cols[c]
            a = j - 1  # array slot for grid index j
            total = Lv[a] + S[a] * gv[a]
            if not self.scattered[j - 1]:
                total += self.w[j] * (Lx[a] + S[a] * gx[a])
            if j + 1 <= self.K:
                total -= Lv[a + 1] + S[a + 1] * gv[a + 1]
                if self.scattered[j]:
                    total += self.w[j + 1] * (Lx[a + 1] + S[a + 1] * gx[a + 1])
            grad[i] = total
        return grad

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.opts.gradient == "analytic":
            return self.analytic_gradient(x)
        return self.fd_gradient(x)

    def curvature(self, x: np.ndarray) -> np.ndarray:
        """|diagonal curvature| per free coordinate, by differencing the gradient."""
        diag = np.empty(len(self.free))
        for i, (j, c) in enumerate(self.free):
            h = 1e-6 * (1.0 + abs(x[j, c]))
            xp = x.copy()
            xp[j, c] = x[j, c] + h
            gp = self.analytic_gradient(xp)[i]
            xp[j, c] = x[j, c] - h
            gm = self.analytic_gradient(xp)[i]
            diag[i] = abs(gp - gm) / (2.0 * h)
        return np.maximum(diag, 1e-30)

    def apply(self, x: np.ndarray, delta: np.ndarray) -> np.ndarray:
        out = x.copy()
        for i, (j, c) in enumerate(self.free):
            out[j, c] = x[j, c] + delta[i]
        return out


def free_coordinates(p: Problem, opts: SolveOptions) -> list[tuple[int, int]]:
    """(grid index, component) pairs the solver treats as variables."""
    return list(_Engine(p, opts).free)


def fd_gradient(p: Problem, values, opts: SolveOptions) -> np.ndarray:
    """Central-difference gradient of the truncated objective at ``values``."""
    eng = _Engine(p, opts)
    return eng.fd_gradient(np.asarray(values, dtype=float))


def analytic_gradient(p: Problem, values, opts: SolveOptions) -> np.ndarray:
    """Exact gradient of the discretized truncated objective at ``values``."""
    eng = _Engine(p, opts)
    return eng.analytic_gradient(np.asarray(values, dtype=float))


def direct_solve(p: Problem, opts: SolveOptions, with_info: bool = False):
    """Gradient ascent on the truncated objective over free state values.

    Starts from the constant initial state (or the linear interpolant to
    a pinned terminal), ascends with Armijo backtracking from
    ``step_init``, and stops when the sup norm of the gradient (or of
    the preconditioned step, when ``precondition`` is set) falls below
    ``grad_tol``.  Values beyond the truncation point are frozen; they
    never enter the truncated objective.  Accepted steps never decrease
    the objective.
    """
    eng = _Engine(p, opts)
    x = eng.initial_values()
    f = eng.objective(x)
    log = [f]
    curv = None
    converged = False
    crit = math.inf
    iterations = 0
    flat = 0  # consecutive accepted steps with no representable objective change
    for it in range(opts.max_iters):
        iterations = it + 1
        grad = eng.gradient(x)
        if opts.precondition:
            if curv is None or it % 50 == 0:
                curv = eng.curvature(x)
            direction = grad / curv
        else:
            direction = grad
        crit = float(np.max(np.abs(direction))) if len(direction) else 0.0
        if crit <= opts.grad_tol:
            converged = True
            break
        slope = float(np.dot(grad, direction))
        alpha = opts.step_init
        accepted = False
        for _ in range(80):
            xt = eng.apply(x, alpha * direction)
            ft = eng.objective(xt)
            if ft >= f + ARMIJO * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted or (ft == f and np.array_equal(xt, x)):
            break  # no representable progress at any step size
        # zero-change steps can still tighten the iterate, but a long run of
        # them means the objective has hit float resolution; stop crawling
        flat = flat + 1 if ft == f else 0
        x, f = xt, ft
        log.append(f)
        if flat >= 50:
            break

    traj = Trajectory.from_values(p, x)
    if not with_info:
        return traj
    info = SolveInfo(
        iterations=iterations,
        converged=converged,
        grad_norm=crit,
        objective=evaluate_functional_partial(p, traj, opts.T_trunc),
        objective_log=tuple(log),
    )
    return traj, info


# -- brute force oracle -----------------------------------------------------


GUARD = 10**7
_BATCH = 4096


def brute_force(p: Problem, opts: SolveOptions, value_grid) -> Trajectory:
    """Exhaustive argmax of the truncated objective over a value grid.

    Every free coordinate independently ranges over the sorted distinct
    values of ``value_grid``; assignments are enumerated in lexicographic
    order and the first maximizer wins, which makes the result invariant
    under permutation of the input grid.  Guarded to at most 10^7
    assignments.
    """
    eng = _Engine(p, opts)
    grid = np.array(sorted(set(float(v) for v in value_grid)))
    if grid.size == 0:
        raise ValueError("value_grid must be nonempty")
    G, F = grid.size, len(eng.free)
    total = G**F
    if total > GUARD:
        raise EnumerationGuardError(
            f"{G}^{F} = {total} assignments exceed the enumeration guard of {GUARD}"
        )
    base = eng.initial_values()
    K, n = eng.K, eng.n
    weights = G ** np.arange(F - 1, -1, -1, dtype=np.int64)

    best_val = -math.inf
    best_x = None
    for start in range(0, total, _BATCH):
        ids = np.arange(start, min(start + _BATCH, total), dtype=np.int64)
        B = ids.size
        xb = np.tile(base[: K + 1], (B, 1, 1))
        for i, (j, c) in enumerate(eng.free):
            xb[:, j, c] = grid[(ids[:, None] // weights[i]) % G].ravel()
        vals = _batch_objective(eng, xb)
        vals = np.where(np.isfinite(vals), vals, -math.inf)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_x = xb[k].copy()
    if best_x is None or best_val == -math.inf:
        raise NonFiniteObjectiveError("every enumerated assignment gave a non-finite objective")
    full = base.copy()
    full[: K + 1] = best_x
    return Trajectory.from_values(p, full)


def _batch_objective(eng: _Engine, xb: np.ndarray) -> np.ndarray:
    """Vectorized truncated objective over a batch of head segments."""
    w = eng.w
    v = np.diff(xb, axis=1) / w[1:, None]
    xr = np.where(eng.scattered[:, None], xb[:, :-1], xb[:, 1:])
    env: dict[str, object] = {"t": eng.t_inner}
    for c in range(eng.n):
        env[f"x{c + 1}"] = xr[:, :, c]
        env[f"v{c + 1}"] = v[:, :, c]
    B = xb.shape[0]
    g = np.broadcast_to(
        np.asarray(evaluate_many(eng.p.z_integrand, env), dtype=float), (B, eng.K)
    )
    env["z"] = np.cumsum(w[1:] * g, axis=1)
    lv = np.broadcast_to(
        np.asarray(evaluate_many(eng.p.effective_lagrangian, env), dtype=float), (B, eng.K)
    )
    with np.errstate(invalid="ignore"):
        return lv @ w[1:]


# -- horizon study ----------------------------------------------------------


@dataclass(frozen=True)
class HorizonRow:
    T_trunc: float
    max_el_residual: float
    trans_T1: float
    trans_T2: float
    objective: float
    trans_applicable: bool


def horizon_study(p: Problem, truncations, opts: SolveOptions) -> list[HorizonRow]:
    """Re-solve at each truncation and tabulate residual magnitudes.

    For every truncation point: solve, record the largest pointwise
    Euler-Lagrange residual over reported points up to the truncation,
    both transversality residual magnitudes at the truncation, and the
    literal objective value.  Transversality is a free-endpoint
    condition, so rows solved with a pinned terminal carry
    ``trans_applicable=False``.
    """
    ts = p.ts
    cuts = [float(T) for T in truncations]
    if sorted(cuts) != cuts or len(set(cuts)) != len(cuts):
        raise ProblemError("truncations must be strictly increasing")
    rows = []
    for T in cuts:
        o = replace(opts, T_trunc=T)
        x = direct_solve(p, o)
        K = ts.index_of(T)
        report = [j for j in el_report_indices(ts) if j <= K]
        max_res = 0.0
        for j in report:
            r = el_residual_pointwise(p, x, ts.points[j], T)
            max_res = max(max_res, float(np.max(np.abs(r))))
        rows.append(
            HorizonRow(
                T_trunc=T,
                max_el_residual=max_res,
                trans_T1=abs(transversality_residual_T1(p, x, T)),
                trans_T2=abs(transversality_residual_T2(p, x, T)),
                objective=evaluate_functional_partial(p, x, T),
                trans_applicable=o.terminal_mode.kind == "free",
            )
        )
    return rows


def horizon_table_to_csv(rows: list[HorizonRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["T_trunc", "max_el_residual", "trans_T1", "trans_T2", "objective", "trans_applicable"]
        )
        for r in rows:
            writer.writerow(
                [
                    repr(r.T_trunc),
                    repr(r.max_el_residual),
                    repr(r.trans_T1),
                    repr(r.trans_T2),
                    repr(r.objective),
                    "true" if r.trans_applicable else "false",
                ]
            )
