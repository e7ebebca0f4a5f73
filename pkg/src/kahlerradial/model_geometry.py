"""Closed-form layer for the Kahler and quaternion-Kahler model spaces.

Every model is identified by a :class:`ModelSpec` (family, dimension ``m``,
curvature parameter ``k``).  The radial generator of the model is

    L = d^2/dr^2 + drift(r) d/dr

and it is symmetric with respect to ``measure_density(spec, r) dr``.  For
``k`` in {-1, 0, 1} these are the radial Laplacians of CP^m, C^m, CH^m
(Kahler) and HP^m, H^m, HH^m (quaternion-Kahler); any other ``k`` is a
rescaling of one of them by ``sqrt(|k|)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

# Below these thresholds F(k, r) is evaluated from its Laurent series.
_SMALL_ARG = 1e-4
_SMALL_KR2 = 1e-12


class ModelFamily(enum.Enum):
    KAHLER = "kahler"
    QUATERNION = "quaternion"

    @classmethod
    def parse(cls, value: "str | ModelFamily") -> "ModelFamily":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "kahler": cls.KAHLER,
            "k": cls.KAHLER,
            "complex": cls.KAHLER,
            "quaternion": cls.QUATERNION,
            "quaternionkahler": cls.QUATERNION,
            "quaternion-kahler": cls.QUATERNION,
            "qk": cls.QUATERNION,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown model family {value!r}") from None


@dataclass(frozen=True)
class ModelSpec:
    family: ModelFamily
    m: int
    k: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", ModelFamily.parse(self.family))
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"dimension m must be an integer >= 1, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "k", float(self.k))
        if not math.isfinite(self.k):
            raise DomainError(f"curvature parameter must be finite, got {self.k!r}")

    @property
    def real_dimension(self) -> int:
        return 2 * self.m if self.family is ModelFamily.KAHLER else 4 * self.m

    @property
    def domain_max(self) -> float:
        """Distance to the cut locus: pi/(2 sqrt(k)) for k > 0, infinity otherwise."""
        if self.k > 0:
            return math.pi / (2.0 * math.sqrt(self.k))
        return math.inf

    @property
    def drift_coefficients(self) -> tuple[float, float]:
        """(a, b) such that drift(r) = a F(k, r) + b F(k, 2r)."""
        if self.family is ModelFamily.KAHLER:
            return 2.0 * self.m - 2.0, 2.0
        return 4.0 * self.m - 4.0, 6.0

    def with_k(self, k: float) -> "ModelSpec":
        return ModelSpec(self.family, self.m, k)

    def label(self) -> str:
        return f"{self.family.value}(m={self.m}, k={self.k:g})"

    def check_radius(self, R: float) -> float:
        R = float(R)
        if not R > 0:
            raise DomainError(f"radius must be positive, got {R}")
        if R > self.domain_max * (1 + 1e-12):
            raise DomainError(
                f"radius {R} exceeds the cut-locus distance {self.domain_max} of {self.label()}"
            )
        return min(R, self.domain_max)


@dataclass(frozen=True)
class RadialLaw:
    """Drift, invariant density and radial domain of a comparison diffusion."""

    spec: ModelSpec
    drift: Callable
    density: Callable
    domain_max: float


def radial_law(spec: ModelSpec) -> RadialLaw:
    return RadialLaw(
        spec=spec,
        drift=lambda r: radial_drift(spec, r),
        density=lambda r: measure_density(spec, r),
        domain_max=spec.domain_max,
    )


def _as_output(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def _series_F(k, r):
    return 1.0 / r - k * r / 3.0 - k * k * r**3 / 45.0


def comparison_F(k: float, r):
    """Comparison function sqrt(k) cot(sqrt(k) r), 1/r or sqrt(|k|) coth(sqrt(|k|) r).

    Accepts a scalar or an array ``r``.  Near ``r = 0`` and near ``k = 0`` the
    three-term Laurent series is used so that the function is continuous in
    ``k`` and accurate for tiny ``r``.
    """
    k = float(k)
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("comparison_F requires r > 0")
    if k > 0 and np.any(r >= math.pi / math.sqrt(k)):
        raise DomainError(f"comparison_F requires r < pi/sqrt(k) = {math.pi / math.sqrt(k)}")

    sk = math.sqrt(abs(k))
    use_series = (abs(k) * r * r < _SMALL_KR2) | (r < _SMALL_ARG / math.sqrt(max(abs(k), 1.0)))
    out = np.empty_like(r)
    out[use_series] = _series_F(k, r[use_series])
    rest = ~use_series
    if k > 0:
        out[rest] = sk / np.tan(sk * r[rest])
    elif k < 0:
        out[rest] = sk / np.tanh(sk * r[rest])
    else:
        out[rest] = 1.0 / r[rest]
    return _as_output(out, scalar)


def _check_open(spec: ModelSpec, r: np.ndarray) -> None:
    if np.any(~(r > 0)) or np.any(r >= spec.domain_max):
        raise DomainError(f"r must lie in (0, {spec.domain_max}) for {spec.label()}")


def radial_drift(spec: ModelSpec, r):
    """Drift of the radial comparison generator at distance ``r``."""
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    _check_open(spec, r)
    a, b = spec.drift_coefficients
    if a == 0.0:
        out = b * comparison_F(spec.k, 2.0 * r)
    else:
        out = a * comparison_F(spec.k, r) + b * comparison_F(spec.k, 2.0 * r)
    return _as_output(np.asarray(out, dtype=float), scalar)


def normalization_constant(spec: ModelSpec) -> float:
    """Prefactor of the radial measure for the unit-curvature or flat model.

    For k != 0 the measure additionally carries the factor |k|^{-(d-1)/2},
    d the real dimension; see :func:`measure_density`.
    """
    m = spec.m
    if spec.family is ModelFamily.KAHLER:
        if spec.k == 0:
            return 2.0 * math.pi**m / math.factorial(m - 1)
        return math.pi**m / math.factorial(m - 1)
    if spec.k == 0:
        return 2.0 * math.pi ** (2 * m) / math.factorial(2 * m - 1)
    return math.pi ** (2 * m) / (4.0 * math.factorial(2 * m - 1))


def measure_density(spec: ModelSpec, r):
    """Density of the radial measure (mu_k or its quaternionic analogue) w.r.t. dr."""
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(~(r >= 0)) or np.any(r > spec.domain_max):
        raise DomainError(f"r must lie in [0, {spec.domain_max}] for {spec.label()}")
    m, k = spec.m, spec.k
    c = normalization_constant(spec)
    kahler = spec.family is ModelFamily.KAHLER
    if k == 0:
        out = c * r ** (2 * m - 1 if kahler else 4 * m - 1)
    else:
        sk = math.sqrt(abs(k))
        if k > 0:
            s1, s2 = np.sin(sk * r), np.sin(2.0 * sk * r)
        else:
            s1, s2 = np.sinh(sk * r), np.sinh(2.0 * sk * r)
        if kahler:
            out = c / abs(k) ** (m - 0.5) * s1 ** (2 * m - 2) * s2
        else:
            out = c / abs(k) ** (2 * m - 0.5) * s1 ** (4 * m - 4) * s2**3
        if k > 0:
            # sin(pi) is not exactly zero in floating point
            out = np.where(r >= spec.domain_max, 0.0, out)
    return _as_output(np.asarray(out, dtype=float), scalar)


def measure_mass(spec: ModelSpec, a: float, b: float, nodes: int = 32) -> float:
    """mu([a, b]) by composite Gauss-Legendre quadrature."""
    if b < a:
        raise DomainError("measure_mass requires a <= b")
    if b > spec.domain_max * (1 + 1e-12):
        raise DomainError(f"b={b} beyond the radial domain of {spec.label()}")
    b = min(b, spec.domain_max)
    x, w = np.polynomial.legendre.leggauss(nodes)
    pieces = 16
    edges = np.linspace(a, b, pieces + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = mid[:, None] + half[:, None] * x[None, :]
    return float(np.sum(half[:, None] * w[None, :] * measure_density(spec, pts)))


def small_ball_volume(spec: ModelSpec, s: float) -> float:
    """Leading term of the Euclidean ball volume: pi^m/m! s^2m (resp. pi^2m/(2m)! s^4m)."""
    m = spec.m
    if spec.family is ModelFamily.KAHLER:
        return math.pi**m / math.factorial(m) * s ** (2 * m)
    return math.pi ** (2 * m) / math.factorial(2 * m) * s ** (4 * m)


def total_mass(spec: ModelSpec) -> float:
    """Volume of the compact model (k > 0): pi^m/m! resp. pi^2m/(2m+1)!, scaled by k."""
    if spec.k <= 0:
        raise DomainError("total mass is finite only for k > 0")
    m, k = spec.m, spec.k
    if spec.family is ModelFamily.KAHLER:
        return math.pi**m / math.factorial(m) / k**m
    return math.pi ** (2 * m) / math.factorial(2 * m + 1) / k ** (2 * m)


def model_spectrum(family, m: int, level: int) -> float:
    """Closed-form eigenvalue number ``level`` of CP^m or HP^m (k = 1)."""
    family = ModelFamily.parse(family)
    if int(level) != level or level < 1:
        raise DomainError(f"spectral level must be an integer >= 1, got {level!r}")
    if int(m) != m or m < 1:
        raise DomainError(f"dimension m must be an integer >= 1, got {m!r}")
    if family is ModelFamily.KAHLER:
        return 4.0 * level * (level + m)
    return 4.0 * level * (level + 2 * m + 1)


def curvature_constants(spec: ModelSpec) -> tuple[float, float]:
    """(H, Ric_perp) for Kahler models, (Q, Ric_perp) for quaternion-Kahler models."""
    if spec.k not in (-1.0, 0.0, 1.0):
        raise DomainError("curvature constants are tabulated for k in {-1, 0, 1} only")
    k, m = spec.k, spec.m
    if spec.family is ModelFamily.KAHLER:
        return 4.0 * k + 0.0, (2 * m - 2) * k + 0.0
    return 12.0 * k + 0.0, (4 * m - 4) * k + 0.0


def rescale(spec: ModelSpec) -> tuple[ModelSpec, float]:
    """Unit-curvature model and length scale s with drift(r) = s * drift_unit(s r)."""
    if spec.k == 0:
        raise DomainError("the flat model has no curvature scale")
    return spec.with_k(math.copysign(1.0, spec.k)), math.sqrt(abs(spec.k))
