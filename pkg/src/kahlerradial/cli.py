"""Command-line interface: ``kahlerradial {tables,eigs,heat,sde,validate}``.

Settings are resolved as command-line flags, then a ``--config`` file of
``key = value`` lines (``#`` starts a comment; keys are the long flag names
with dashes or underscores), then built-in defaults.  Serialized spectral
decompositions are cached in the directory named by ``KAHLERRADIAL_CACHE``
when that variable is set.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConvergenceError, DomainError, SimulationError
from .model_geometry import (
    ModelFamily,
    ModelSpec,
    curvature_constants,
    measure_density,
    model_spectrum,
    radial_drift,
)
from .pde_evolver import default_dt, heat_kernel_fd, interpolate_cells, survival_curve
from .radial_sde import SimConfig, empirical_cdf, exit_probability_mc, simulate_radial
from .sturm_liouville import (
    DEFAULT_N,
    SpectralDecomposition,
    decomposition_for_time,
    heat_kernel_spectral,
    kernel_cdf,
    kernel_column,
    richardson_eigenvalues,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_VALIDATION = 4

CACHE_ENV = "KAHLERRADIAL_CACHE"


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return "%.17g" % x


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise ValueError(f"expected an integer >= 1, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise ValueError(f"expected a positive number, got {text}")
    return value


def _family(text):
    return ModelFamily.parse(text).value


def _bool(text):
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text}")


# name -> (converter, default); a default of None means the setting is required
SETTINGS = {
    "tables": {"family": (_family, None), "m": (_positive_int, None), "points": (_positive_int, 15)},
    "eigs": {
        "family": (_family, None),
        "m": (_positive_int, None),
        "k": (float, 0.0),
        "R": (_positive_float, None),
        "n": (_positive_int, DEFAULT_N),
        "count": (_positive_int, 4),
        "closed": (_bool, False),
    },
    "heat": {
        "family": (_family, None),
        "m": (_positive_int, None),
        "k": (float, 0.0),
        "R": (_positive_float, None),
        "t": (_positive_float, None),
        "source": (float, 0.0),
        "n": (_positive_int, DEFAULT_N),
        "dt": (_positive_float, None),
        "points": (_positive_int, 201),
        "plot_data": (str, None),
    },
    "sde": {
        "family": (_family, None),
        "m": (_positive_int, None),
        "k": (float, 0.0),
        "R": (_positive_float, None),
        "r0": (float, 0.0),
        "t": (_positive_float, None),
        "paths": (_positive_int, 10_000),
        "seed": (int, 0),
        "dt": (_positive_float, 1e-4),
        "n": (_positive_int, 2048),
        "probes": (_positive_int, 4),
    },
    "validate": {
        "level": (str, "quick"),
        "seed": (int, 7),
        "json": (str, None),
    },
}
OPTIONAL = {"dt", "plot_data", "json"}


def read_config(path: str) -> dict[str, str]:
    """Parse a ``key = value`` file into a dict of raw strings."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_settings(command: str, args: argparse.Namespace) -> dict:
    config = read_config(args.config) if getattr(args, "config", None) else {}
    settings = {}
    for name, (conv, default) in SETTINGS[command].items():
        value = getattr(args, name, None)
        if value is None and name in config:
            try:
                value = conv(config[name])
            except ValueError as exc:
                raise UsageError(f"config key {name}: {exc}") from None
        if value is None:
            value = default
        if value is None and name not in OPTIONAL:
            raise UsageError(f"missing required setting --{name.replace('_', '-')}")
        settings[name] = value
    return settings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kahlerradial", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value settings file (flags take precedence)")
        p.add_argument("--output", "-o", help="write the main output here instead of stdout")
        for setting, (conv, default) in SETTINGS[name].items():
            flag = "--" + setting.replace("_", "-")
            if conv is _bool:
                p.add_argument(flag, action="store_const", const=True, default=None)
            else:
                p.add_argument(flag, type=conv, default=None, help=f"default: {default}")
        return p

    add("tables", "drifts, densities, curvature constants and spectra of a model family")
    add("eigs", "lowest eigenvalues on [0, R] with Richardson error estimates")
    add("heat", "heat kernel q(t, source, .) by the spectral and Crank-Nicolson routes")
    add("sde", "Monte Carlo exit probabilities and CDF probes against the PDE")
    add("validate", "run the validation suite")
    return parser


# --- decomposition cache -----------------------------------------------------


def _cache_path(spec: ModelSpec, R: float, n: int, mode: str, t_min: float) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    key = f"{spec.family.value}|{spec.m}|{spec.k!r}|{R!r}|{n}|{mode}|{t_min!r}|{__version__}"
    digest = hashlib.sha256(key.encode()).hexdigest()[:24]
    return Path(root) / f"decomposition-{digest}.json"


def cached_decomposition(spec, R, t_min, n, mode="dirichlet") -> SpectralDecomposition:
    path = _cache_path(spec, R, n, mode, t_min)
    if path is not None and path.exists():
        try:
            return SpectralDecomposition.from_json(path.read_text())
        except (ValueError, KeyError):
            pass  # stale or corrupt entry: recompute
    dec = decomposition_for_time(spec, R, t_min, n, mode)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(dec.to_json())
        tmp.replace(path)
    return dec


# --- commands ----------------------------------------------------------------


def cmd_tables(s: dict) -> str:
    family = ModelFamily.parse(s["family"])
    m = s["m"]
    curv = "H" if family is ModelFamily.KAHLER else "Q"
    lines = [f"# {family.value} model spaces, m = {m}", "", "[curvature]"]
    for k in (-1.0, 0.0, 1.0):
        sec, ric = curvature_constants(ModelSpec(family, m, k))
        lines.append(f"k={fmt(k)}: ({curv}, Ric⊥) = ({fmt(sec)}, {fmt(ric)})")
    lines += ["", "[spectrum k=1]"]
    for level in range(1, 5):
        lines.append(f"level {level}: {fmt(model_spectrum(family, m, level))}")
    lines += ["", "[radial grid]"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "r", "drift", "density"])
    r = np.linspace(0.1, 1.5, s["points"])
    for k in (-1.0, 0.0, 1.0):
        spec = ModelSpec(family, m, k)
        for ri, di, mi in zip(r, radial_drift(spec, r), measure_density(spec, r)):
            writer.writerow([fmt(k), fmt(ri), fmt(di), fmt(mi)])
    return "\n".join(lines) + "\n" + buf.getvalue()


def _closed_radius(spec: ModelSpec, R: float) -> float:
    if spec.k <= 0:
        raise DomainError("--closed needs k > 0")
    if abs(R - spec.domain_max) > 1e-6 * spec.domain_max:
        raise DomainError(f"--closed needs R = pi/(2 sqrt k) = {spec.domain_max!r}, got {R}")
    return spec.domain_max


def cmd_eigs(s: dict) -> str:
    spec = ModelSpec(s["family"], s["m"], s["k"])
    R = spec.check_radius(s["R"])
    mode = "dirichlet"
    first_level = 1
    if s["closed"]:
        R, mode, first_level = _closed_radius(spec, R), "closed", 0
    estimates = richardson_eigenvalues(spec, R, s["n"], s["count"], mode)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["level", "eigenvalue", "error_estimate"])
    for j, est in enumerate(estimates):
        writer.writerow([first_level + j, fmt(est.value), fmt(est.error)])
    return buf.getvalue()


def cmd_heat(s: dict) -> tuple[str, str | None, str]:
    """Kernel table, optional plot data and a one-line mass summary."""
    spec = ModelSpec(s["family"], s["m"], s["k"])
    R = spec.check_radius(s["R"])
    t, source, n = s["t"], s["source"], s["n"]
    dt = s["dt"] if s["dt"] is not None else default_dt(R)
    if not 0 <= source < R:
        raise DomainError(f"source must lie in [0, {R})")
    steps = round(t / dt)
    if abs(steps * dt - t) > 1e-9 * t:
        raise DomainError(f"t={t} is not a multiple of dt={dt}")

    dec = cached_decomposition(spec, R, t, n)
    fd_col = heat_kernel_fd(spec, R, n, t, source, dt)
    spec_col = kernel_column(dec, t, source)
    grid = dec.grid
    mass_spectral = float(grid.weights @ spec_col)
    mass_fd = float(grid.weights @ fd_col)

    r = np.linspace(0.0, R, s["points"])
    q_spec = heat_kernel_spectral(dec, t, source, r)
    q_swap = heat_kernel_spectral(dec, t, r, source)
    q_fd = interpolate_cells(grid, fd_col, r)
    lam1 = dec.eigenvalues[0]
    phi_src = dec.values_at(source)[0, 0]
    phi_r = dec.values_at(r)[0]
    leading = math.exp(-lam1 * t) * phi_src * phi_r
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(leading != 0, q_spec / leading, np.nan)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r", "q_spectral", "q_fd", "difference", "symmetry", "eigen_ratio"])
    for row in zip(r, q_spec, q_fd, q_spec - q_fd, np.abs(q_spec - q_swap), ratio):
        writer.writerow([fmt(x) for x in row])
    plot = "".join(f"{fmt(a)} {fmt(b)} {fmt(c)}\n" for a, b, c in zip(r, q_spec, q_fd))
    summary = (
        f"mass_spectral={fmt(mass_spectral)} mass_fd={fmt(mass_fd)} "
        f"mass_difference={fmt(abs(mass_spectral - mass_fd))} lambda_1={fmt(lam1)}"
    )
    return buf.getvalue(), plot, summary


def _grid_times(t: float, dt: float, fractions) -> list[float]:
    out = []
    for f in fractions:
        steps = max(1, round(f * t / dt))
        out.append(steps * dt)
    return sorted(set(out))


def cmd_sde(s: dict) -> str:
    spec = ModelSpec(s["family"], s["m"], s["k"])
    R = spec.check_radius(s["R"])
    t, dt, r0 = s["t"], s["dt"], s["r0"]
    steps = round(t / dt)
    if steps < 1 or abs(steps * dt - t) > 1e-9 * t:
        raise DomainError(f"t={t} is not a positive multiple of dt={dt}")
    cfg = SimConfig(s["seed"], s["paths"], dt, t, R)
    ens = simulate_radial(spec, r0, cfg)
    times = _grid_times(t, dt, (0.25, 0.5, 0.75, 1.0))
    survival = survival_curve(spec, R, s["n"], r0, times, dt)
    bound = 0.5 / math.sqrt(s["paths"])

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["quantity", "time", "level", "mc", "mc_se", "binomial_bound", "pde", "difference"])
    for ti, surv in zip(times, survival):
        est, se = exit_probability_mc(ens, ti)
        pde = 1.0 - surv
        writer.writerow(
            ["exit_probability", fmt(ti), fmt(R), fmt(est), fmt(se), fmt(bound), fmt(pde), fmt(est - pde)]
        )
    dec = cached_decomposition(spec, R, t, s["n"])
    for j in range(1, s["probes"] + 1):
        level = R * j / (s["probes"] + 1)
        est, se = empirical_cdf(ens, t, level)
        pde = kernel_cdf(dec, t, level, r0)
        writer.writerow(
            ["cdf", fmt(t), fmt(level), fmt(est), fmt(se), fmt(bound), fmt(pde), fmt(est - pde)]
        )
    return buf.getvalue()


def cmd_validate(s: dict):
    from .validation import LEVELS, run_validation

    if s["level"] not in LEVELS:
        raise UsageError(f"--level must be one of {sorted(LEVELS)}")
    return run_validation(s["level"], s["seed"])


def _emit(text: str, target: str | None) -> None:
    if target:
        Path(target).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        s = resolve_settings(args.command, args)
        if args.command == "tables":
            _emit(cmd_tables(s), args.output)
        elif args.command == "eigs":
            _emit(cmd_eigs(s), args.output)
        elif args.command == "heat":
            table, plot, summary = cmd_heat(s)
            _emit(table, args.output)
            if s["plot_data"]:
                Path(s["plot_data"]).write_text(plot)
            print(summary, file=sys.stderr)
        elif args.command == "sde":
            _emit(cmd_sde(s), args.output)
        elif args.command == "validate":
            report = cmd_validate(s)
            _emit(report.to_text() + "\n", args.output)
            if s["json"]:
                Path(s["json"]).write_text(report.to_json() + "\n")
            return EXIT_OK if report.passed else EXIT_VALIDATION
    except UsageError as exc:
        print(f"kahlerradial: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SimulationError, ConvergenceError) as exc:
        print(f"kahlerradial: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
