import numpy as np
import pytest

from kahlerradial import DomainError
from kahlerradial.model_geometry import ModelFamily, ModelSpec
from kahlerradial.pde_evolver import (
    default_dt,
    evolve,
    heat_kernel_fd,
    interpolate_cells,
    mean_exit_time,
    source_cell,
    survival_curve,
    survival_probability,
)
from kahlerradial.sturm_liouville import (
    build_grid,
    decomposition_for_time,
    dirichlet_eigen,
    kernel_column,
)

K, Q = ModelFamily.KAHLER, ModelFamily.QUATERNION


def test_zero_stays_zero():
    state = evolve(ModelSpec(K, 2, 0.0), 1.0, 128, np.zeros(128), 0.1, 1e-3)
    assert np.all(state.values == 0.0)
    assert state.time == pytest.approx(0.1)


def test_closed_constant_preserved():
    spec = ModelSpec(Q, 1, 1.0)
    state = evolve(spec, spec.domain_max, 256, np.full(256, 0.7), 0.5, 1e-3, "closed")
    assert np.allclose(state.values, 0.7, rtol=1e-12)


def test_eigenfunction_decay():
    spec = ModelSpec(K, 1, 0.0)
    dec = dirichlet_eigen(spec, 1.0, 1024, 1)
    phi, lam = dec.eigenfunctions[0], dec.eigenvalues[0]
    state = evolve(spec, 1.0, 1024, phi, 0.5, 1e-4)
    assert np.max(np.abs(state.values - np.exp(-lam * 0.5) * phi)) <= 1e-5 * np.max(np.abs(phi))


def test_mass_non_increasing_and_max_principle():
    spec = ModelSpec(K, 2, -1.0)
    g = build_grid(spec, 1.0, 256)
    rng = np.random.default_rng(3)
    u0 = rng.uniform(0, 1, 256)
    masses = [g.weights @ u0]
    for t in (0.01, 0.05, 0.2):
        u = evolve(spec, 1.0, 256, u0, t, 1e-3).values
        assert np.all(u >= -1e-12) and np.all(u <= 1 + 1e-12)
        masses.append(g.weights @ u)
    assert all(a >= b for a, b in zip(masses, masses[1:]))


def test_bad_inputs():
    spec = ModelSpec(K, 1, 0.0)
    with pytest.raises(DomainError):
        evolve(spec, 1.0, 64, np.zeros(64), 0.1, 0.0)
    with pytest.raises(DomainError):
        evolve(spec, 1.0, 64, np.zeros(63), 0.1, 1e-3)
    with pytest.raises(DomainError):
        evolve(spec, 1.0, 64, np.full(64, np.nan), 0.1, 1e-3)
    with pytest.raises(DomainError):
        heat_kernel_fd(spec, 1.0, 64, 0.001, 0.0, 1e-4)


def test_kernel_sub_markov():
    col = heat_kernel_fd(ModelSpec(Q, 2, 1.0), 1.0, 512, 0.1, 0.0, 1e-3)
    g = build_grid(ModelSpec(Q, 2, 1.0), 1.0, 512)
    assert 0 < g.weights @ col <= 1


def test_kernel_matches_spectral():
    spec = ModelSpec(K, 2, -1.0)
    fd = heat_kernel_fd(spec, 1.0, 4096, 0.5, 0.0, 1e-4)
    dec = decomposition_for_time(spec, 1.0, 0.5, 4096)
    sp = kernel_column(dec, 0.5, 0.0)
    assert np.max(np.abs(fd - sp)) / np.max(np.abs(sp)) <= 1e-3


def test_time_step_convergence():
    spec = ModelSpec(K, 1, 1.0)
    n = 512
    dec = decomposition_for_time(spec, 1.0, 0.2, n)
    src = dec.grid.centers[source_cell(dec.grid, 0.3)]  # on a centre: no spatial source offset
    ref = kernel_column(dec, 0.2, src)
    errs = [np.max(np.abs(heat_kernel_fd(spec, 1.0, n, 0.2, src, dt) - ref)) for dt in (2e-3, 1e-3)]
    assert errs[0] / errs[1] >= 3.5


def test_kernel_symmetry_two_sources():
    spec = ModelSpec(K, 1, 0.0)
    g = build_grid(spec, 1.0, 1024)
    a, b = 0.2, 0.6
    qa = heat_kernel_fd(spec, 1.0, 1024, 0.1, a, 1e-4)
    qb = heat_kernel_fd(spec, 1.0, 1024, 0.1, b, 1e-4)
    ab = interpolate_cells(g, qa, g.centers[source_cell(g, b)])
    ba = interpolate_cells(g, qb, g.centers[source_cell(g, a)])
    assert abs(ab - ba) <= 1e-4 * max(abs(ab), abs(ba))


def test_survival_properties():
    spec = ModelSpec(K, 2, 1.0)
    times = [0.01, 0.05, 0.1, 0.2, 0.3]
    s0 = survival_curve(spec, 1.0, 512, 0.0, times, 1e-3)
    s1 = survival_curve(spec, 1.0, 512, 0.5, times, 1e-3)
    assert np.all((s0 >= 0) & (s0 <= 1))
    assert np.all(np.diff(s0) <= 0)
    assert np.all(s1 <= s0 + 1e-12)
    assert survival_probability(spec, 1.0, 512, 0.0, 0.001, 1e-4) == pytest.approx(1.0, abs=1e-9)
    assert survival_curve(spec, 1.0, 64, 0.0, [0.0])[0] == 1.0
    with pytest.raises(DomainError):
        survival_curve(spec, 1.0, 64, 1.0, [0.1])


@pytest.mark.parametrize("fam, m, target", [(K, 1, 0.25), (K, 2, 0.125), (Q, 1, 0.125)])
def test_flat_mean_exit_time(fam, m, target):
    assert mean_exit_time(ModelSpec(fam, m, 0.0), 1.0, 1024, 0.0, 1e-3) == pytest.approx(target, abs=1e-3)


def test_default_dt():
    assert default_dt(0.5) == 1e-4
    assert default_dt(3.0) == pytest.approx(9e-4)
