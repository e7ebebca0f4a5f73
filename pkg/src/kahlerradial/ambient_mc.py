"""Brownian motion on S^{2m+1} and S^{4m+3}, projected to the radial part of CP^m / HP^m.

The sphere process has generator the Laplace-Beltrami operator (not half of
it).  Its image under the Hopf fibration is Brownian motion on the projective
space, and the distance from the base point is

    r = arctan( sqrt(1 - |z_{m+1}|^2) / |z_{m+1}| )

where z_{m+1} is the last complex (resp. quaternionic) coordinate.  Real
coordinates are laid out as (Re z_1, Im z_1, ..., Re z_{m+1}, Im z_{m+1}) and
the four real components of each quaternion are consecutive.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import stats

from .errors import DomainError
from .model_geometry import ModelFamily, ModelSpec
from .rng import counter_normal_pair
from .sturm_liouville import decomposition_for_time, kernel_cdf

_STREAM_SPHERE = 8
_MAX_PAIRS = 64
_POLE_GUARD = 1e-14


def ambient_dimension(family, m: int) -> int:
    family = ModelFamily.parse(family)
    return 2 * m + 2 if family is ModelFamily.KAHLER else 4 * m + 4


def _fiber_width(family) -> int:
    return 2 if ModelFamily.parse(family) is ModelFamily.KAHLER else 4


def north_pole(family, m: int) -> np.ndarray:
    d = ambient_dimension(family, m)
    p = np.zeros(d)
    p[d - _fiber_width(family)] = 1.0
    return p


@dataclass(frozen=True, eq=False)
class SphereState:
    ambient_dim: int
    point: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        pt = np.asarray(self.point, dtype=float)
        if pt.shape != (self.ambient_dim,):
            raise DomainError(f"point must have {self.ambient_dim} coordinates")
        norm = np.linalg.norm(pt)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"point is not on the unit sphere (|x| = {norm})")
        object.__setattr__(self, "point", pt)


def sphere_bm_step(state: SphereState, dt: float, noise) -> SphereState:
    """One projection-and-renormalize step with variance 2 dt per tangent direction."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    x = state.point
    z = np.asarray(noise, dtype=float)
    tangent = z - (x @ z) * x
    y = x + math.sqrt(2.0 * dt) * tangent
    y /= np.linalg.norm(y)
    return SphereState(state.ambient_dim, y, state.time + dt)


def _radial_from_fiber_norm2(a2):
    a2 = np.clip(a2, 0.0, 1.0)
    a = np.sqrt(a2)
    tiny = a < _POLE_GUARD
    out = np.arctan2(np.sqrt(1.0 - a2), np.where(tiny, 1.0, a))
    return np.where(tiny, 0.5 * math.pi - _POLE_GUARD, out)


def _project(points, width):
    pts = np.asarray(points, dtype=float)
    if isinstance(points, SphereState):
        pts = points.point
    a2 = np.sum(pts[..., -width:] ** 2, axis=-1)
    out = _radial_from_fiber_norm2(a2)
    return float(out) if np.ndim(out) == 0 else out


def project_radial_kahler(state) -> float | np.ndarray:
    """Distance in CP^m from the image of the north pole; accepts a state or an (N, 2m+2) array."""
    return _project(state.point if isinstance(state, SphereState) else state, 2)


def project_radial_quaternion(state) -> float | np.ndarray:
    """Distance in HP^m from the image of the north pole; accepts a state or an (N, 4m+4) array."""
    return _project(state.point if isinstance(state, SphereState) else state, 4)


@njit(cache=True)
def _sphere_paths(start, dt, n_steps, seed, path_start, out):
    dim = start.shape[0]
    sigma = math.sqrt(2.0 * dt)
    pairs = (dim + 1) // 2
    stream = np.uint64(_STREAM_SPHERE)
    seed = np.uint64(seed)
    z = np.empty(dim)
    x = np.empty(dim)
    for p in range(out.shape[0]):
        path = np.uint64(path_start + p)
        for i in range(dim):
            x[i] = start[i]
        for s in range(n_steps):
            base = np.uint64(s) * np.uint64(_MAX_PAIRS)
            for j in range(pairs):
                z1, z2 = counter_normal_pair(seed, stream, path, base + np.uint64(j))
                z[2 * j] = z1
                if 2 * j + 1 < dim:
                    z[2 * j + 1] = z2
            dot = 0.0
            for i in range(dim):
                dot += x[i] * z[i]
            norm2 = 0.0
            for i in range(dim):
                x[i] += sigma * (z[i] - dot * x[i])
                norm2 += x[i] * x[i]
            inv = 1.0 / math.sqrt(norm2)
            for i in range(dim):
                x[i] *= inv
        for i in range(dim):
            out[p, i] = x[i]


def simulate_sphere(
    start: np.ndarray,
    dt: float,
    t_final: float,
    n_paths: int,
    seed: int,
    path_start: int = 0,
) -> np.ndarray:
    """Endpoints at ``t_final`` of ``n_paths`` sphere Brownian paths from ``start``."""
    start = SphereState(len(start), start).point
    if len(start) > 2 * _MAX_PAIRS:
        raise DomainError("ambient dimension too large for the generator layout")
    if not dt > 0 or not t_final >= dt * (1 - 1e-12):
        raise DomainError("need dt > 0 and t_final >= dt")
    n_steps = int(round(t_final / dt))
    out = np.empty((int(n_paths), len(start)))
    _sphere_paths(start, float(dt), n_steps, np.uint64(int(seed)), int(path_start), out)
    return out


def radial_samples(
    family,
    m: int,
    t: float,
    n_paths: int,
    dt: float,
    seed: int,
    start: np.ndarray | None = None,
) -> np.ndarray:
    """Samples of r_t for the projective model (k = 1) via the sphere."""
    family = ModelFamily.parse(family)
    if start is None:
        start = north_pole(family, m)
    pts = simulate_sphere(start, dt, t, n_paths, seed)
    if family is ModelFamily.KAHLER:
        return project_radial_kahler(pts)
    return project_radial_quaternion(pts)


def samples_to_csv(samples: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["path_id", "radius"])
    for i, r in enumerate(samples):
        writer.writerow([i, f"{r:.17g}"])
    return buf.getvalue()


def spectral_radial_cdf(family, m: int, t: float, n: int = 4096):
    """CDF of r_t on the compact model from the closed-mode spectral kernel."""
    spec = ModelSpec(family, m, 1.0)
    dec = decomposition_for_time(spec, spec.domain_max, t, n, "closed")
    return lambda s: kernel_cdf(dec, t, np.clip(s, 0.0, spec.domain_max))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical_1pct: float
    pvalue: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_1pct


def ks_against_spectral(samples: np.ndarray, family, m: int, t: float, n: int = 4096) -> KSResult:
    cdf = spectral_radial_cdf(family, m, t, n)
    res = stats.kstest(samples, cdf)
    crit = float(stats.kstwo.ppf(0.99, len(samples)))
    return KSResult(float(res.statistic), crit, float(res.pvalue))
