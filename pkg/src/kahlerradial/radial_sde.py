"""Monte Carlo simulation of the radial comparison diffusions.

The process solves ``d rho = drift(rho) dt + sqrt(2) d beta`` started at
``r0`` and is absorbed at level ``R``.  Away from the origin each step is a
plain Euler-Maruyama increment.  Within a few standard deviations of the
origin, where the drift behaves like (d-1)/rho, the singular part is stepped
exactly as the norm of a d-dimensional Gaussian increment (d the real
dimension) and only the smooth remainder of the drift is treated by Euler.
Absorption between grid times is accounted for by the Brownian-bridge
crossing probability.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DomainError, SimulationError
from .model_geometry import ModelSpec
from .rng import counter_normal_pair, counter_uniform

# Normal-pair streams of the counter-based generator (pair stream j draws on
# uniform streams 2j and 2j+1); the bridge test uses a raw uniform stream.
_STREAM_ORIGIN = 0
_STREAM_TRANSVERSE = 1
_STREAM_BULK = 2
_STREAM_BRIDGE = 63
_MAX_PAIRS = 64

_ORIGIN_WIDTH = 8.0  # near-origin zone is rho < _ORIGIN_WIDTH * sqrt(2 dt)
_DRIFT_FLOOR = 1e-8
_CAP_MARGIN = 1e-8


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_paths: int
    dt: float
    t_final: float
    absorb_at: float

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.t_final >= self.dt * (1 - 1e-12):
            raise DomainError("t_final must be at least dt")
        if not self.absorb_at > 0:
            raise DomainError("absorption level must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    config: SimConfig
    spec: ModelSpec
    r0: float
    final_positions: np.ndarray  # NaN where absorbed
    absorption_times: np.ndarray  # NaN where alive at t_final

    @property
    def absorbed(self) -> np.ndarray:
        return ~np.isnan(self.absorption_times)

    @property
    def n_paths(self) -> int:
        return len(self.absorption_times)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["path_id", "absorption_time", "final_position"])
        for i, (tau, pos) in enumerate(zip(self.absorption_times, self.final_positions)):
            writer.writerow(
                [i, "" if math.isnan(tau) else f"{tau:.17g}", "" if math.isnan(pos) else f"{pos:.17g}"]
            )
        return buf.getvalue()

    def same_as(self, other: "PathEnsemble") -> bool:
        """Bitwise equality of the simulated data (NaNs compare equal)."""
        return (
            self.config == other.config
            and self.spec == other.spec
            and self.r0 == other.r0
            and np.array_equal(self.final_positions, other.final_positions, equal_nan=True)
            and np.array_equal(self.absorption_times, other.absorption_times, equal_nan=True)
        )


@njit(cache=True, inline="always")
def _F(k, r):
    if k > 0.0:
        sk = math.sqrt(k)
        return sk / math.tan(sk * r)
    if k < 0.0:
        sk = math.sqrt(-k)
        return sk / math.tanh(sk * r)
    return 1.0 / r


@njit(cache=True, inline="always")
def _F_minus_pole(k, r):
    """F(k, r) - 1/r, without cancellation for small |k| r^2."""
    x = k * r * r
    if abs(x) < 1e-2:
        return -r * (x / 3.0 + x * x / 45.0 + 2.0 * x**3 / 945.0 + x**4 / 4725.0)
    return _F(k, r) - 1.0 / r


@njit(cache=True)
def _simulate_paths(a, b, k, dim, R, r0, dt, n_steps, seed, path_start, cap, out_pos, out_tau):
    sigma = math.sqrt(2.0 * dt)
    var = 2.0 * dt
    origin_zone = _ORIGIN_WIDTH * sigma
    seed = np.uint64(seed)
    s_origin = np.uint64(_STREAM_ORIGIN)
    s_transverse = np.uint64(_STREAM_TRANSVERSE)
    s_bulk = np.uint64(_STREAM_BULK)
    s_bridge = np.uint64(_STREAM_BRIDGE)
    n_transverse_pairs = (dim - 1) // 2
    for p in range(out_pos.shape[0]):
        path = np.uint64(path_start + p)
        x = r0
        tau = np.nan
        spare = 0.0
        have_spare = False
        for s in range(n_steps):
            step = np.uint64(s)
            if x < origin_zone:
                # norm of x e_1 plus a dim-dimensional Gaussian increment
                z1, z2 = counter_normal_pair(seed, s_origin, path, step)
                lead = x + sigma * z1
                acc = lead * lead + var * z2 * z2
                for j in range(n_transverse_pairs):
                    c = step * np.uint64(_MAX_PAIRS) + np.uint64(j)
                    w1, w2 = counter_normal_pair(seed, s_transverse, path, c)
                    acc += var * w1 * w1
                    if 2 * j + 3 < dim:
                        acc += var * w2 * w2
                xs = max(x, _DRIFT_FLOOR)
                smooth = a * _F_minus_pole(k, xs) + b * _F_minus_pole(k, 2.0 * xs)
                y = math.sqrt(acc) + smooth * dt
                have_spare = False
            else:
                if have_spare and s % 2 == 1:
                    z = spare
                    have_spare = False
                else:
                    z1, z2 = counter_normal_pair(seed, s_bulk, path, step >> np.uint64(1))
                    if s % 2 == 0:
                        z, spare, have_spare = z1, z2, True
                    else:
                        z = z2
                        have_spare = False
                y = x + (a * _F(k, x) + b * _F(k, 2.0 * x)) * dt + sigma * z
            if y < 0.0:
                y = -y
            if not math.isfinite(y):
                return p
            if y >= R:
                tau = (s + 1) * dt
                break
            gap = (R - x) * (R - y) / dt
            if gap < 40.0:
                u = counter_uniform(seed, s_bridge, path, step)
                if u < math.exp(-gap):
                    tau = (s + 1) * dt
                    break
            if y > cap:
                y = cap
            x = y
        out_tau[p] = tau
        out_pos[p] = np.nan if tau == tau else x
    return -1


def simulate_radial(spec: ModelSpec, r0: float, config: SimConfig, path_start: int = 0) -> PathEnsemble:
    """Simulate ``config.n_paths`` absorbed radial paths started at ``r0``."""
    R = float(config.absorb_at)
    if R > spec.domain_max * (1 + 1e-12):
        raise DomainError(f"absorption level {R} beyond the radial domain of {spec.label()}")
    if not 0 <= r0 < R:
        raise DomainError(f"starting point must lie in [0, {R})")
    a, b = spec.drift_coefficients
    cap = spec.domain_max - _CAP_MARGIN if spec.k > 0 else math.inf
    pos = np.empty(config.n_paths)
    tau = np.empty(config.n_paths)
    bad = _simulate_paths(
        a, b, spec.k, spec.real_dimension, R, float(r0), float(config.dt), config.n_steps,
        np.uint64(int(config.seed)), int(path_start), cap, pos, tau,
    )
    if bad >= 0:
        raise SimulationError(
            f"non-finite state in path {path_start + bad} for {spec.label()} (dt={config.dt})"
        )
    return PathEnsemble(config, spec, float(r0), pos, tau)


def _binomial(hits: int, n: int) -> tuple[float, float]:
    p = hits / n
    return p, math.sqrt(p * (1.0 - p) / n)


def exit_probability_mc(ensemble: PathEnsemble, t: float) -> tuple[float, float]:
    """Fraction of paths absorbed by time t, with its binomial standard error."""
    if t > ensemble.config.t_final * (1 + 1e-12):
        raise DomainError("t beyond the simulated horizon")
    if t <= 0:
        return 0.0, 0.0
    tau = ensemble.absorption_times
    hits = int(np.count_nonzero(tau <= t * (1 + 1e-12)))
    return _binomial(hits, ensemble.n_paths)


def empirical_cdf(ensemble: PathEnsemble, t: float, s: float) -> tuple[float, float]:
    """P(rho_t < s, t < tau_R), estimated at the final time of the ensemble."""
    cfg = ensemble.config
    if abs(t - cfg.t_final) > 1e-12 * max(1.0, cfg.t_final):
        raise DomainError("positions are recorded at t_final only")
    if not 0 <= s <= cfg.absorb_at:
        raise DomainError("s must lie in [0, R]")
    pos = ensemble.final_positions
    alive = ~np.isnan(pos)
    if s >= cfg.absorb_at:
        hits = int(np.count_nonzero(alive))
    else:
        hits = int(np.count_nonzero(alive & (pos < s)))
    return _binomial(hits, ensemble.n_paths)


def mean_absorption_time(ensemble: PathEnsemble) -> tuple[float, float]:
    """Sample mean and standard error of the absorption time; every path must be absorbed."""
    tau = ensemble.absorption_times
    if np.any(np.isnan(tau)):
        raise DomainError(
            f"{int(np.isnan(tau).sum())} paths survived to t_final; extend the horizon"
        )
    if len(tau) < 2:
        return float(tau.mean()), math.inf
    return float(tau.mean()), float(tau.std(ddof=1) / math.sqrt(len(tau)))
