"""Dirichlet spectra and heat kernels of the radial comparison operators.

The operator ``L = d^2/dr^2 + drift d/dr`` on ``[0, R]`` is written in flux
form ``(1/rho) (rho u')'`` with ``rho`` the measure density and discretized by
finite volumes on a uniform cell-centred grid.  The left endpoint is natural
(``rho(0) = 0``), so no boundary condition is imposed there.  At ``R`` either a
Dirichlet condition (``u(R) = 0``) or zero flux ("closed", only meaningful when
``R`` is the cut-locus distance of a compact model) is used.

The discrete operator ``A`` is self-adjoint for the weights ``w_i = mu(cell i)``,
so ``W^{1/2} A W^{-1/2}`` is a symmetric tridiagonal matrix whose lowest
eigenpairs are computed by LAPACK bisection and inverse iteration.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DomainError
from .model_geometry import ModelFamily, ModelSpec, measure_density

FORMAT_VERSION = 1
DEFAULT_N = 4096
_QUAD_NODES = 8
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Grid:
    spec: ModelSpec
    R: float
    n: int
    h: float
    centers: np.ndarray
    faces: np.ndarray
    weights: np.ndarray
    face_density: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


def build_grid(spec: ModelSpec, R: float, n: int = DEFAULT_N) -> Grid:
    """Uniform cell-centred grid on [0, R] with exact-to-quadrature cell masses."""
    R = spec.check_radius(R)
    if int(n) != n or n < 16:
        raise DomainError(f"grid needs at least 16 cells, got n={n}")
    n = int(n)
    h = R / n
    faces = np.linspace(0.0, R, n + 1)
    faces[-1] = R
    centers = (np.arange(n) + 0.5) * h
    x, wq = np.polynomial.legendre.leggauss(_QUAD_NODES)
    pts = centers[:, None] + 0.5 * h * x[None, :]
    weights = 0.5 * h * (measure_density(spec, pts) @ wq)
    if not np.all(weights > 0):
        raise DomainError("non-positive cell mass; grid too coarse or radius invalid")
    face_density = measure_density(spec, faces)
    face_density[0] = 0.0
    return Grid(spec, R, n, h, centers, faces, weights, face_density)


def _is_closed_radius(spec: ModelSpec, R: float) -> bool:
    return spec.k > 0 and abs(R - spec.domain_max) <= 1e-12 * spec.domain_max


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Discrete generator: (A u)_i = lower_i u_{i-1} + diag_i u_i + upper_i u_{i+1}."""

    grid: Grid
    boundary_mode: str
    lower: np.ndarray  # lower[i] couples i+1 -> i, length n-1
    diag: np.ndarray
    upper: np.ndarray  # upper[i] couples i -> i+1, length n-1
    fluxes: np.ndarray = field(repr=False)  # rho_{i+1/2} / h at the n-1 interior faces

    def apply(self, u: np.ndarray) -> np.ndarray:
        """A u in flux-difference form, so constants are annihilated exactly in closed mode."""
        u = np.asarray(u, dtype=float)
        g = self.grid
        flow = self.fluxes * np.diff(u)
        net = np.zeros_like(u)
        net[:-1] += flow
        net[1:] -= flow
        if self.boundary_mode == "dirichlet":
            net[-1] -= 2.0 * g.face_density[-1] / g.h * u[-1]
        return net / g.weights

    def symmetric_form(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of W^{1/2} A W^{-1/2}."""
        w = self.grid.weights
        off = self.fluxes / np.sqrt(w[:-1] * w[1:])
        return self.diag.copy(), off


def discretize(grid: Grid, boundary_mode: str = "dirichlet") -> TridiagonalOperator:
    if boundary_mode not in ("dirichlet", "closed"):
        raise ValueError(f"unknown boundary mode {boundary_mode!r}")
    if boundary_mode == "closed" and not _is_closed_radius(grid.spec, grid.R):
        raise DomainError("closed mode requires k > 0 and R equal to the cut-locus distance")
    h, w = grid.h, grid.weights
    flux = grid.face_density[1:-1] / h
    coupling_right = np.append(flux, 0.0)
    coupling_left = np.insert(flux, 0, 0.0)
    diag = -(coupling_right + coupling_left)
    if boundary_mode == "dirichlet":
        # u(R) = 0 imposed half a cell beyond the last centre
        diag[-1] -= 2.0 * grid.face_density[-1] / h
    diag /= w
    upper = flux / w[:-1]
    lower = flux / w[1:]
    return TridiagonalOperator(grid, boundary_mode, lower, diag, upper, flux)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    grid: Grid
    boundary_mode: str
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # shape (count, n); rows w-orthonormal

    @property
    def spec(self) -> ModelSpec:
        return self.grid.spec

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def values_at(self, r) -> np.ndarray:
        """Eigenfunctions at radii ``r`` by piecewise-linear interpolation, shape (count, len(r)).

        Left of the first centre the even extension makes them constant; right
        of the last centre they are interpolated to 0 at R (Dirichlet) or held
        constant (closed).
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        g = self.grid
        if np.any(r < 0) or np.any(r > g.R * (1 + 1e-12)):
            raise DomainError(f"radii must lie in [0, {g.R}]")
        xs = g.centers
        phi = self.eigenfunctions
        if self.boundary_mode == "dirichlet":
            xs = np.append(xs, g.R)
            phi = np.hstack([phi, np.zeros((phi.shape[0], 1))])
        # the last interval (centre to R) is half a cell wide
        pos = np.interp(r, xs, np.arange(len(xs), dtype=float))
        i0 = np.minimum(np.floor(pos).astype(int), len(xs) - 2)
        frac = pos - i0
        return phi[:, i0] * (1.0 - frac) + phi[:, i0 + 1] * frac

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "format": "kahlerradial.spectral_decomposition",
            "version": FORMAT_VERSION,
            "spec": {"family": s.family.value, "m": s.m, "k": s.k},
            "R": self.grid.R,
            "n": self.grid.n,
            "boundary_mode": self.boundary_mode,
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenfunctions": self.eigenfunctions.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralDecomposition":
        if data.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported decomposition format version {data.get('version')!r}")
        s = data["spec"]
        spec = ModelSpec(ModelFamily.parse(s["family"]), s["m"], s["k"])
        grid = build_grid(spec, data["R"], data["n"])
        return cls(
            grid,
            data["boundary_mode"],
            np.asarray(data["eigenvalues"], dtype=float),
            np.asarray(data["eigenfunctions"], dtype=float).reshape(len(data["eigenvalues"]), grid.n),
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectralDecomposition":
        return cls.from_dict(json.loads(text))


def dirichlet_eigen(
    spec: ModelSpec,
    R: float,
    n: int = DEFAULT_N,
    count: int = 8,
    boundary_mode: str = "dirichlet",
) -> SpectralDecomposition:
    """Lowest ``count`` eigenpairs of -L on [0, R] (eigenvalues ascending)."""
    grid = build_grid(spec, R, n)
    if count < 1 or count > grid.n // 4:
        raise DomainError(f"count must be in [1, n/4], got {count}")
    op = discretize(grid, boundary_mode)
    d, e = op.symmetric_form()
    lam, vecs = eigh_tridiagonal(
        -d, -e, select="i", select_range=(0, count - 1), lapack_driver="stebz"
    )
    # residual of the symmetric problem relative to its norm
    scale = np.max(np.abs(d)) + 2.0 * np.max(np.abs(e))
    resid = -d[:, None] * vecs - lam[None, :] * vecs
    resid[:-1] -= e[:, None] * vecs[1:]
    resid[1:] -= e[:, None] * vecs[:-1]
    worst = float(np.max(np.linalg.norm(resid, axis=0))) / scale
    if worst > _RESIDUAL_TOL:
        raise ConvergenceError(f"eigensolver residual {worst:.3e} exceeds {_RESIDUAL_TOL:g}")
    phi = (vecs / np.sqrt(grid.weights)[:, None]).T
    # deterministic signs: positive value in the first cell
    signs = np.where(phi[:, 0] < 0, -1.0, 1.0)
    phi *= signs[:, None]
    if boundary_mode == "closed":
        lam[0] = max(lam[0], 0.0)
    return SpectralDecomposition(grid, boundary_mode, lam, phi)


@dataclass(frozen=True)
class EigenEstimate:
    value: float
    error: float
    coarse: float
    fine: float


def richardson_eigenvalues(
    spec: ModelSpec,
    R: float,
    n: int = DEFAULT_N,
    count: int = 1,
    boundary_mode: str = "dirichlet",
) -> list[EigenEstimate]:
    """Second-order Richardson extrapolation of the lowest eigenvalues from grids n and 2n."""
    coarse = dirichlet_eigen(spec, R, n, count, boundary_mode).eigenvalues
    fine = dirichlet_eigen(spec, R, 2 * n, count, boundary_mode).eigenvalues
    out = []
    for lc, lf in zip(coarse, fine):
        out.append(EigenEstimate((4.0 * lf - lc) / 3.0, abs(lf - lc) / 3.0, float(lc), float(lf)))
    return out


def cheng_lambda1(spec: ModelSpec, R: float, n: int = DEFAULT_N) -> EigenEstimate:
    """First Dirichlet eigenvalue lambda_1(m, k, R) of the model operator on [0, R]."""
    return richardson_eigenvalues(spec, R, n, 1, "dirichlet")[0]


def heat_kernel_spectral(decomp: SpectralDecomposition, t: float, r1, r2):
    """Heat kernel q(t, r1, r2) w.r.t. the radial measure, from the eigen-expansion.

    ``r1`` and ``r2`` may be scalars or arrays (broadcast against each other).
    """
    if not t > 0:
        raise DomainError("heat kernel requires t > 0")
    lam = decomp.eigenvalues
    tail = math.exp(-(lam[-1] - lam[0]) * t)
    if tail >= 1e-14:
        warnings.warn(
            f"spectral truncation tail {tail:.2e} >= 1e-14 at t={t}; use more eigenpairs",
            RuntimeWarning,
            stacklevel=2,
        )
    r1b, r2b = np.broadcast_arrays(np.asarray(r1, dtype=float), np.asarray(r2, dtype=float))
    shape = r1b.shape
    p1 = decomp.values_at(r1b.ravel())
    p2 = decomp.values_at(r2b.ravel())
    decay = np.exp(-lam * t)
    # p1 * p2 first, so swapping r1 and r2 gives bitwise-identical sums
    out = (decay @ (p1 * p2)).reshape(shape)
    return float(out) if out.ndim == 0 else out


def kernel_column(decomp: SpectralDecomposition, t: float, source: float) -> np.ndarray:
    """q(t, source, r_i) at every cell centre."""
    lam = decomp.eigenvalues
    ps = decomp.values_at(source)[:, 0]
    return (np.exp(-lam * t) * ps) @ decomp.eigenfunctions


def eigenpairs_for_time(lambda_1: float, t: float) -> float:
    """Eigenvalue cut-off needed for a 1e-14 relative truncation tail at time t."""
    return lambda_1 + math.log(1e14) / t


def decomposition_for_time(
    spec: ModelSpec,
    R: float,
    t_min: float,
    n: int = DEFAULT_N,
    boundary_mode: str = "dirichlet",
    start_count: int = 32,
) -> SpectralDecomposition:
    """Decomposition with enough eigenpairs for the truncation contract down to ``t_min``."""
    count = start_count
    while True:
        count = min(count, n // 4)
        dec = dirichlet_eigen(spec, R, n, count, boundary_mode)
        lam = dec.eigenvalues
        if lam[-1] >= eigenpairs_for_time(lam[0], t_min) or count == n // 4:
            return dec
        count *= 2


def kernel_mass(decomp: SpectralDecomposition, t: float, source: float = 0.0) -> float:
    """Integral of q(t, source, r) over [0, R] w.r.t. the radial measure."""
    return float(decomp.grid.weights @ kernel_column(decomp, t, source))


def kernel_cdf(decomp: SpectralDecomposition, t: float, s, source: float = 0.0):
    """mu-integral of q(t, source, .) over [0, s], interpolated linearly between cell faces."""
    col = kernel_column(decomp, t, source)
    cum = np.concatenate([[0.0], np.cumsum(decomp.grid.weights * col)])
    out = np.interp(np.asarray(s, dtype=float), decomp.grid.faces, cum)
    return float(out) if np.ndim(out) == 0 else out
