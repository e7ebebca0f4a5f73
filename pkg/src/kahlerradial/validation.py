"""Validation suite: exact model-space statements and cross-route consistency.

Each check returns a :class:`CheckResult` carrying the measured error and the
tolerance it was held to.  ``level="full"`` uses the production resolutions
and tolerances; ``level="quick"`` shrinks grids and path counts (tolerances
are widened only where the coarser resolution requires it; each check lists
its quick-level setting in ``QUICK_NOTES``).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

from . import __version__
from .ambient_mc import ks_against_spectral, radial_samples
from .model_geometry import (
    ModelFamily,
    ModelSpec,
    measure_density,
    measure_mass,
    model_spectrum,
    radial_drift,
    small_ball_volume,
    total_mass,
)
from .pde_evolver import heat_kernel_fd, mean_exit_time, survival_curve
from .radial_sde import SimConfig, exit_probability_mc, mean_absorption_time, simulate_radial
from .sturm_liouville import (
    build_grid,
    cheng_lambda1,
    decomposition_for_time,
    kernel_column,
    richardson_eigenvalues,
)

KAHLER = ModelFamily.KAHLER
QUATERNION = ModelFamily.QUATERNION
COMPACT_CASES = [(KAHLER, 1), (KAHLER, 2), (KAHLER, 3), (QUATERNION, 1), (QUATERNION, 2)]

LEVELS = {
    "full": {
        "spectral_n": 4096,
        "flat_n": 4096,
        "heat_n": 4096,
        "heat_dt": 1e-4,
        "exit_paths": 100_000,
        "exit_dt": 1e-4,
        "pde_n": 4096,
        "ambient_paths": 100_000,
        "ambient_dt": 5e-4,
    },
    "quick": {
        "spectral_n": 1024,
        "flat_n": 2048,
        "heat_n": 1024,
        "heat_dt": 2e-4,
        "exit_paths": 10_000,
        "exit_dt": 2e-4,
        "pde_n": 1024,
        "ambient_paths": 20_000,
        "ambient_dt": 1e-3,
    },
}

QUICK_NOTES = {
    "compact_spectra_level1": "Richardson pair (1024, 2048); same tolerance",
    "compact_spectra_levels23": "Richardson pair (1024, 2048); same tolerance",
    "flat_dirichlet_lambda1": "Richardson pair (2048, 4096); same tolerance",
    "heat_kernel_dual_route": "n=1024, dt=2e-4; same tolerance",
    "mean_exit_times": "1e4 paths, dt=2e-4; 3 standard errors",
    "exit_probabilities": "1e4 paths, dt=2e-4, t in {0.1, 0.3}, one m per family; 3 standard errors",
    "ambient_ks": "2e4 paths, dt=1e-3 and 5e-4; 1% KS critical value",
}


@dataclass
class CheckResult:
    name: str
    target: str
    measured_error: float
    tolerance: float
    passed: bool
    runtime: float = 0.0
    details: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    checks: list[CheckResult]
    seed: int
    toolkit_version: str = __version__
    level: str = "full"

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "toolkit_version": self.toolkit_version,
            "level": self.level,
            "seed": self.seed,
            "status": "pass" if self.passed else "fail",
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ValidationReport":
        data = json.loads(text)
        checks = [CheckResult(**c) for c in data["checks"]]
        return cls(checks, data["seed"], data["toolkit_version"], data["level"])

    def to_text(self) -> str:
        lines = [f"kahlerradial {self.toolkit_version} validation (level={self.level}, seed={self.seed})"]
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(
                f"  [{flag}] {c.name}: error {c.measured_error:.3e} / tol {c.tolerance:.1e}"
                f"  ({c.runtime:.1f} s)  {c.target}"
            )
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _timed(fn: Callable[..., CheckResult]) -> Callable[..., CheckResult]:
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def bessel_j0_first_zero() -> float:
    """First positive zero of J_0 by bracketing root search (independent of the eigensolver)."""
    return optimize.brentq(special.j0, 2.0, 3.0, xtol=1e-15, rtol=1e-15)


# --- individual checks -------------------------------------------------------


def _compact_spectra(level: str, levels: tuple[int, ...], tol: float, name: str) -> CheckResult:
    n = LEVELS[level]["spectral_n"]
    worst = 0.0
    details = {}
    for family, m in COMPACT_CASES:
        spec = ModelSpec(family, m, 1.0)
        est = richardson_eigenvalues(spec, spec.domain_max, n, max(levels) + 1, "closed")
        for lv in levels:
            exact = model_spectrum(family, m, lv)
            err = abs(est[lv].value - exact) / exact
            details[f"{family.value}_m{m}_level{lv}"] = est[lv].value
            worst = max(worst, err)
    target = "closed-mode eigenvalues of CP^m / HP^m equal 4l(l+m) / 4l(l+2m+1)"
    return CheckResult(name, target, worst, tol, worst <= tol, details=details)


@_timed
def check_compact_spectra_level1(level: str = "full", seed: int = 0) -> CheckResult:
    return _compact_spectra(level, (1,), 1e-4, "compact_spectra_level1")


@_timed
def check_compact_spectra_levels23(level: str = "full", seed: int = 0) -> CheckResult:
    return _compact_spectra(level, (2, 3), 5e-4, "compact_spectra_levels23")


@_timed
def check_flat_dirichlet(level: str = "full", seed: int = 0) -> CheckResult:
    j01 = bessel_j0_first_zero()
    est = cheng_lambda1(ModelSpec(KAHLER, 1, 0.0), 1.0, LEVELS[level]["flat_n"])
    err = abs(est.value - j01**2) / j01**2
    return CheckResult(
        "flat_dirichlet_lambda1",
        "lambda_1(m=1, k=0, R=1) = j_{0,1}^2",
        err,
        1e-5,
        err <= 1e-5,
        details={"lambda1": est.value, "j01_squared": j01**2},
    )


@_timed
def check_rescaling(level: str = "full", seed: int = 0) -> CheckResult:
    n = LEVELS[level]["spectral_n"]
    worst = 0.0
    details = {}
    for m, k, R in [(2, 4.0, 0.3), (2, -9.0, 0.4), (1, 0.25, 1.0)]:
        lhs = cheng_lambda1(ModelSpec(KAHLER, m, k), R, n).value
        rhs = abs(k) * cheng_lambda1(ModelSpec(KAHLER, m, math.copysign(1.0, k)), math.sqrt(abs(k)) * R, n).value
        err = abs(lhs - rhs) / abs(rhs)
        details[f"m{m}_k{k:g}_R{R:g}"] = [lhs, rhs]
        worst = max(worst, err)
    return CheckResult(
        "rescaling_law",
        "lambda_1(m,k,R) = |k| lambda_1(m, sign k, sqrt|k| R)",
        worst,
        1e-6,
        worst <= 1e-6,
        details=details,
    )


def log_density_derivative(spec: ModelSpec, r: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Five-point centred difference of log(density)."""
    f = lambda x: np.log(measure_density(spec, x))  # noqa: E731
    return (8.0 * (f(r + h) - f(r - h)) - (f(r + 2 * h) - f(r - 2 * h))) / (12.0 * h)


@_timed
def check_drift_duality(level: str = "full", seed: int = 0) -> CheckResult:
    worst = 0.0
    for family in (KAHLER, QUATERNION):
        for k in (-1.0, 0.0, 1.0):
            for m in (1, 2, 3):
                spec = ModelSpec(family, m, k)
                R = spec.domain_max if k > 0 else 1.0
                r = np.linspace(0.05 * R, 0.95 * R, 181)
                err = np.max(np.abs(radial_drift(spec, r) - log_density_derivative(spec, r)))
                worst = max(worst, float(err))
    return CheckResult(
        "drift_measure_duality",
        "drift = d/dr log(density) on [0.05R, 0.95R], 18 models",
        worst,
        1e-8,
        worst <= 1e-8,
    )


@_timed
def check_heat_kernel_dual_route(level: str = "full", seed: int = 0) -> CheckResult:
    n, dt = LEVELS[level]["heat_n"], LEVELS[level]["heat_dt"]
    worst = 0.0
    details = {}
    for family in (KAHLER, QUATERNION):
        for k in (-1.0, 0.0, 1.0):
            spec = ModelSpec(family, 2, k)
            dec = decomposition_for_time(spec, 1.0, 0.1, n)
            for t in (0.1, 0.5):
                spectral = kernel_column(dec, t, 0.0)
                fd = heat_kernel_fd(spec, 1.0, n, t, 0.0, dt)
                err = float(np.max(np.abs(spectral - fd)) / np.max(np.abs(spectral)))
                details[f"{family.value}_k{k:g}_t{t:g}"] = err
                worst = max(worst, err)
    return CheckResult(
        "heat_kernel_dual_route",
        "spectral vs Crank-Nicolson kernel q(t,0,.), m=2, R=1, t in {0.1, 0.5}",
        worst,
        1e-3,
        worst <= 1e-3,
        details=details,
    )


def _exit_horizon(spec: ModelSpec, R: float, n: int) -> float:
    lam1 = cheng_lambda1(spec, R, min(n, 1024)).value
    return math.ceil((30.0 / lam1) * 100) / 100


@_timed
def check_mean_exit_times(level: str = "full", seed: int = 7) -> CheckResult:
    p = LEVELS[level]
    R = 1.0
    cases = [
        (ModelSpec(KAHLER, 1, 0.0), R * R / 4),
        (ModelSpec(KAHLER, 2, 0.0), R * R / 8),
        (ModelSpec(QUATERNION, 1, 0.0), R * R / 8),
        (ModelSpec(QUATERNION, 2, 0.0), R * R / 16),
        (ModelSpec(KAHLER, 1, 1.0), None),
        (ModelSpec(KAHLER, 1, -1.0), None),
        (ModelSpec(QUATERNION, 1, 1.0), None),
        (ModelSpec(QUATERNION, 1, -1.0), None),
    ]
    worst = 0.0
    details = {}
    for idx, (spec, exact) in enumerate(cases):
        if exact is None:
            exact = mean_exit_time(spec, R, p["pde_n"], 0.0)
        t_final = _exit_horizon(spec, R, p["pde_n"])
        cfg = SimConfig(seed + 1000 * idx, p["exit_paths"], p["exit_dt"], t_final, R)
        mean, se = mean_absorption_time(simulate_radial(spec, 0.0, cfg))
        z = abs(mean - exact) / se
        details[spec.label()] = {"mc": mean, "se": se, "target": exact}
        worst = max(worst, z)
    return CheckResult(
        "mean_exit_times",
        "MC mean exit time from the centre vs R^2/(4m), R^2/(8m) and the PDE survival integral",
        worst,
        3.0,
        worst <= 3.0,
        details=details,
    )


@_timed
def check_exit_probabilities(level: str = "full", seed: int = 7) -> CheckResult:
    p = LEVELS[level]
    R, r0, times = 1.0, 0.0, (0.1, 0.3)
    ms = (1, 2) if level == "full" else (1,)
    worst = 0.0
    details = {}
    idx = 0
    for family in (KAHLER, QUATERNION):
        for k in (-1.0, 0.0, 1.0):
            for m in ms:
                spec = ModelSpec(family, m, k)
                cfg = SimConfig(seed + 17 * idx + 3, p["exit_paths"], p["exit_dt"], max(times), R)
                idx += 1
                ens = simulate_radial(spec, r0, cfg)
                surv = survival_curve(spec, R, p["pde_n"], r0, times, p["exit_dt"])
                for t, s in zip(times, surv):
                    est, se = exit_probability_mc(ens, t)
                    z = abs(est - (1.0 - s)) / max(se, 1.0 / p["exit_paths"])
                    details[f"{spec.label()}_t{t:g}"] = {"mc": est, "se": se, "pde": 1.0 - s}
                    worst = max(worst, z)
    return CheckResult(
        "exit_probabilities",
        "MC exit probability vs 1 - PDE survival, t in {0.1, 0.3}",
        worst,
        3.0,
        worst <= 3.0,
        details=details,
    )


@_timed
def check_ambient_ks(level: str = "full", seed: int = 7) -> CheckResult:
    p = LEVELS[level]
    worst = 0.0
    details = {}
    t = 0.2
    for family, m in [(KAHLER, 1), (KAHLER, 2), (QUATERNION, 1)]:
        for factor in (1.0, 0.5):
            dt = p["ambient_dt"] * factor
            samples = radial_samples(family, m, t, p["ambient_paths"], dt, seed + m)
            res = ks_against_spectral(samples, family, m, t)
            ratio = res.statistic / res.critical_1pct
            details[f"{family.value}_m{m}_dt{dt:g}"] = {
                "ks": res.statistic,
                "critical": res.critical_1pct,
                "pvalue": res.pvalue,
            }
            worst = max(worst, ratio)
    return CheckResult(
        "ambient_ks",
        "KS statistic / 1% critical value, sphere radial samples vs spectral CDF (t=0.2)",
        worst,
        1.0,
        worst < 1.0,
        details=details,
    )


@_timed
def check_small_ball(level: str = "full", seed: int = 0) -> CheckResult:
    s = 1e-3
    worst = 0.0
    for family in (KAHLER, QUATERNION):
        for k in (-1.0, 0.0, 1.0):
            for m in (1, 2, 3):
                spec = ModelSpec(family, m, k)
                ratio = measure_mass(spec, 0.0, s) / small_ball_volume(spec, s)
                worst = max(worst, abs(ratio - 1.0))
    return CheckResult(
        "small_ball_normalization",
        "mu_k([0,s]) / (pi^m/m! s^2m) -> 1 (resp. pi^2m/(2m)! s^4m) at s=1e-3",
        worst,
        1e-4,
        worst <= 1e-4,
    )


@_timed
def check_mass_consistency(level: str = "full", seed: int = 0) -> CheckResult:
    worst = 0.0
    n = LEVELS[level]["spectral_n"]
    for family, m in COMPACT_CASES:
        for k in (1.0, 4.0):
            spec = ModelSpec(family, m, k)
            grid = build_grid(spec, spec.domain_max, n)
            worst = max(worst, abs(grid.total_mass / total_mass(spec) - 1.0))
    return CheckResult(
        "mass_consistency",
        "total radial mass of CP^m, HP^m equals pi^m/m!, pi^2m/(2m+1)! (scaled by k)",
        worst,
        1e-10,
        worst <= 1e-10,
    )


ALL_CHECKS = [
    check_compact_spectra_level1,
    check_compact_spectra_levels23,
    check_flat_dirichlet,
    check_rescaling,
    check_drift_duality,
    check_heat_kernel_dual_route,
    check_mean_exit_times,
    check_exit_probabilities,
    check_ambient_ks,
    check_small_ball,
    check_mass_consistency,
]


def run_validation(level: str = "quick", seed: int = 7, checks=None, progress=None) -> ValidationReport:
    if level not in LEVELS:
        raise ValueError(f"unknown validation level {level!r}")
    results = []
    for fn in checks or ALL_CHECKS:
        res = fn(level=level, seed=seed)
        if progress is not None:
            progress(res)
        results.append(res)
    return ValidationReport(results, seed, __version__, level)
