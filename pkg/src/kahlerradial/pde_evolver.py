"""Crank-Nicolson evolution of du/dt = L u on [0, R].

This is the time-domain route to the same kernels that
:mod:`kahlerradial.sturm_liouville` obtains from eigen-expansions; the two only
share the spatial discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import ConvergenceError, DomainError
from .model_geometry import ModelSpec
from .sturm_liouville import DEFAULT_N, Grid, TridiagonalOperator, build_grid, cheng_lambda1, discretize

# Backward-Euler half steps taken before switching to Crank-Nicolson and,
# for kernel columns, again in place of the last Crank-Nicolson steps.  The
# trapezoidal rule only flips the sign of stiff modes, so the indicator data of
# a point source (and the roundoff it seeds) would otherwise never decay.
STARTUP_HALF_STEPS = 16
FINISH_HALF_STEPS = 4


def default_dt(R: float) -> float:
    return 1e-4 * max(1.0, R * R)


@dataclass
class EvolutionState:
    grid: Grid
    time: float
    values: np.ndarray


class _Stepper:
    """Factorized (I - theta dt S) for the symmetric form S = W^1/2 A W^-1/2.

    Stepping in v = W^1/2 u keeps the solves symmetric positive definite, so
    LDL^T without pivoting is backward stable even when the cell masses span
    many orders of magnitude.
    """

    def __init__(self, op: TridiagonalOperator, dt: float, theta: float):
        self.dt = dt
        self.theta = theta
        self.diag, self.off = op.symmetric_form()
        d = 1.0 - theta * dt * self.diag
        e = -theta * dt * self.off
        d_f, e_f, info = lapack.dpttrf(d, e)
        if info != 0:
            raise ConvergenceError(f"tridiagonal factorization failed (info={info})")
        self._factors = (d_f, e_f)

    def _apply(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def step(self, v: np.ndarray) -> np.ndarray:
        if self.theta < 1.0:
            rhs = v + (1.0 - self.theta) * self.dt * self._apply(v)
        else:
            rhs = v
        x, info = lapack.dpttrs(*self._factors, rhs)
        if info != 0:
            raise ConvergenceError(f"tridiagonal solve failed (info={info})")
        return x


def _run(op, initial, t_final, dt, record=None, startup=STARTUP_HALF_STEPS, finish=0):
    """Integrate to t_final; optionally call record(time, values) after every step."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    if not t_final >= dt * (1 - 1e-9):
        raise DomainError("t_final must be at least dt")
    u = np.array(initial, dtype=float)
    if u.shape != (op.grid.n,) or not np.all(np.isfinite(u)):
        raise DomainError("initial data must be a finite vector with one value per cell")
    steps = int(round(t_final / dt))
    if abs(steps * dt - t_final) > 1e-9 * t_final:
        raise DomainError("t_final must be an integer multiple of dt")

    sqrt_w = np.sqrt(op.grid.weights)
    u = u * sqrt_w
    t = 0.0
    done = 0
    if startup and steps > 0:
        euler = _Stepper(op, 0.5 * dt, 1.0)
        n_startup = min(startup // 2, steps)
        for _ in range(n_startup):
            u = euler.step(euler.step(u))
            done += 1
            t = done * dt
            if record is not None:
                record(t, u / sqrt_w)
    n_finish = min(finish // 2, steps - done)
    cn = _Stepper(op, dt, 0.5)
    for _ in range(done, steps - n_finish):
        u = cn.step(u)
        done += 1
        t = done * dt
        if record is not None:
            record(t, u / sqrt_w)
    if n_finish:
        euler = _Stepper(op, 0.5 * dt, 1.0)
        for _ in range(n_finish):
            u = euler.step(euler.step(u))
            done += 1
            t = done * dt
            if record is not None:
                record(t, u / sqrt_w)
    return EvolutionState(op.grid, t, u / sqrt_w)


def evolve(
    spec: ModelSpec,
    R: float,
    n: int,
    initial,
    t_final: float,
    dt: float,
    boundary_mode: str = "dirichlet",
    startup: int = STARTUP_HALF_STEPS,
) -> EvolutionState:
    """Evolve cell values ``initial`` under the discrete generator up to ``t_final``."""
    op = discretize(build_grid(spec, R, n), boundary_mode)
    return _run(op, initial, t_final, dt, startup=startup)


def source_cell(grid: Grid, r_source: float) -> int:
    if not 0 <= r_source <= grid.R:
        raise DomainError(f"source must lie in [0, {grid.R}]")
    return min(int(r_source / grid.h), grid.n - 1)


def heat_kernel_fd(
    spec: ModelSpec,
    R: float,
    n: int,
    t: float,
    r_source: float,
    dt: float | None = None,
    boundary_mode: str = "dirichlet",
) -> np.ndarray:
    """Kernel column q(t, r_source, r_i) from an evolved normalized cell indicator."""
    dt = default_dt(R) if dt is None else dt
    if t < 100 * dt * (1 - 1e-9):
        raise DomainError("heat_kernel_fd needs t >= 100 dt")
    grid = build_grid(spec, R, n)
    u0 = np.zeros(grid.n)
    i = source_cell(grid, r_source)
    u0[i] = 1.0 / grid.weights[i]
    op = discretize(grid, boundary_mode)
    return _run(op, u0, t, dt, finish=FINISH_HALF_STEPS).values


def interpolate_cells(grid: Grid, values: np.ndarray, r, boundary_value: float | None = 0.0):
    """Piecewise-linear value at r; constant left of the first centre, ``boundary_value`` at R."""
    xs, ys = grid.centers, values
    if boundary_value is not None:
        xs = np.append(xs, grid.R)
        ys = np.append(ys, boundary_value)
    out = np.interp(np.asarray(r, dtype=float), xs, ys)
    return float(out) if np.ndim(out) == 0 else out


def survival_curve(
    spec: ModelSpec,
    R: float,
    n: int,
    r0: float,
    times,
    dt: float | None = None,
) -> np.ndarray:
    """P(tau_R > t) for each t in ``times`` (multiples of dt), started at r0."""
    dt = default_dt(R) if dt is None else dt
    grid = build_grid(spec, R, n)
    if not 0 <= r0 < grid.R:
        raise DomainError(f"starting point must lie in [0, {grid.R})")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise DomainError("times must be non-negative")
    out = np.ones(len(times))
    wanted = {}
    for j, t in enumerate(times):
        if t > 0:
            steps = int(round(t / dt))
            if abs(steps * dt - t) > 1e-9 * max(t, dt):
                raise DomainError(f"time {t} is not a multiple of dt={dt}")
            wanted.setdefault(steps, []).append(j)
    if not wanted:
        return out
    op = discretize(grid, "dirichlet")
    counter = {"step": 0}

    def record(t, u):
        counter["step"] += 1
        for j in wanted.get(counter["step"], ()):
            out[j] = interpolate_cells(grid, u, r0)

    _run(op, np.ones(grid.n), max(wanted) * dt, dt, record=record)
    return np.clip(out, 0.0, 1.0)


def survival_probability(
    spec: ModelSpec,
    R: float,
    n: int,
    r0: float,
    t: float,
    dt: float | None = None,
) -> float:
    return float(survival_curve(spec, R, n, r0, [t], dt)[0])


def mean_exit_time(
    spec: ModelSpec,
    R: float,
    n: int = DEFAULT_N,
    r0: float = 0.0,
    dt: float | None = None,
    tail_tol: float = 1e-9,
) -> float:
    """Integral of the survival probability over [0, infinity).

    Integrates by the trapezoidal rule up to the time T at which the survival
    drops below ``tail_tol`` and adds the tail S(T)/lambda_1.
    """
    dt = default_dt(R) if dt is None else dt
    lam1 = cheng_lambda1(spec, R, n).value
    t_max = math.log(1.0 / tail_tol) / lam1 + 0.5
    steps = int(math.ceil(t_max / dt))
    grid = build_grid(spec, R, n)
    op = discretize(grid, "dirichlet")
    samples = np.empty(steps + 1)
    samples[0] = 1.0
    counter = {"step": 0}

    def record(t, u):
        counter["step"] += 1
        samples[counter["step"]] = interpolate_cells(grid, u, r0)

    _run(op, np.ones(grid.n), steps * dt, dt, record=record)
    integral = dt * (samples.sum() - 0.5 * (samples[0] + samples[-1]))
    return float(integral + samples[-1] / lam1)
