import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kahlerradial import DomainError
from kahlerradial.model_geometry import ModelFamily, ModelSpec, model_spectrum
from kahlerradial.sturm_liouville import (
    SpectralDecomposition,
    build_grid,
    cheng_lambda1,
    decomposition_for_time,
    dirichlet_eigen,
    discretize,
    heat_kernel_spectral,
    kernel_cdf,
    kernel_column,
    kernel_mass,
    richardson_eigenvalues,
)

K, Q = ModelFamily.KAHLER, ModelFamily.QUATERNION

# mpmath.besseljzero(0, 1) and J_0(j01 r) at 30 digits
J01 = 2.4048255576957728
J0_AT = {0.25: 0.9116586745799117, 0.5: 0.6699297389845395, 0.75: 0.3378816957701682}


def test_grid_mass_flat_disk():
    g = build_grid(ModelSpec(K, 1, 0.0), 1.0, 1000)
    assert g.total_mass == pytest.approx(math.pi, abs=1e-10)


def test_grid_mass_cp2():
    g = build_grid(ModelSpec(K, 2, 1.0), math.pi / 2, 1000)
    assert g.total_mass == pytest.approx(math.pi**2 / 2, rel=1e-12)


def test_grid_layout():
    g = build_grid(ModelSpec(Q, 3, -1.0), 2.0, 16)
    assert np.all(g.weights > 0)
    assert np.all(np.diff(g.centers) > 0)
    assert 0 < g.centers[0] and g.centers[-1] < g.R
    with pytest.raises(DomainError):
        build_grid(ModelSpec(K, 1, 1.0), 2.0, 64)
    with pytest.raises(DomainError):
        build_grid(ModelSpec(K, 1, 0.0), 1.0, 8)


def test_closed_constant_in_kernel():
    spec = ModelSpec(K, 2, 1.0)
    op = discretize(build_grid(spec, spec.domain_max, 256), "closed")
    assert np.max(np.abs(op.apply(np.ones(256)))) == 0.0


def test_closed_mode_requires_cut_locus():
    with pytest.raises(DomainError):
        discretize(build_grid(ModelSpec(K, 2, 1.0), 1.0, 64), "closed")
    with pytest.raises(DomainError):
        discretize(build_grid(ModelSpec(K, 2, 0.0), 1.0, 64), "closed")


@given(seed=st.integers(0, 2**32 - 1), mode=st.sampled_from(["dirichlet", "closed"]))
@settings(max_examples=20, deadline=None)
def test_operator_self_adjoint(seed, mode):
    spec = ModelSpec(Q, 1, 1.0)
    g = build_grid(spec, spec.domain_max, 200)
    op = discretize(g, mode)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal(200), rng.standard_normal(200)
    lhs = np.sum(g.weights * op.apply(u) * v)
    rhs = np.sum(g.weights * u * op.apply(v))
    scale = np.sum(g.weights * np.abs(op.apply(u) * v)) + np.sum(g.weights * np.abs(u * op.apply(v)))
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_flat_stencil_on_quadratic():
    g = build_grid(ModelSpec(K, 1, 0.0), 1.0, 400)
    op = discretize(g)
    out = op.apply(1.0 - g.centers**2)
    assert np.allclose(out[5:-5], -4.0, rtol=1e-3)


def test_flat_disk_eigenvalue():
    est = cheng_lambda1(ModelSpec(K, 1, 0.0), 1.0, 2048)
    assert est.value == pytest.approx(J01**2, rel=1e-6)
    est2 = cheng_lambda1(ModelSpec(K, 1, 0.0), 2.0, 2048)
    assert est2.value == pytest.approx(J01**2 / 4, rel=1e-6)


@pytest.mark.parametrize("fam, m, target", [(K, 2, 12.0), (Q, 1, 16.0)])
def test_closed_first_level(fam, m, target):
    spec = ModelSpec(fam, m, 1.0)
    est = richardson_eigenvalues(spec, spec.domain_max, 1024, 2, "closed")
    assert est[0].value == pytest.approx(0.0, abs=1e-8)
    assert est[1].value == pytest.approx(target, rel=1e-6)


def test_closed_levels_match_model():
    for fam, m in [(K, 1), (K, 3), (Q, 2)]:
        spec = ModelSpec(fam, m, 1.0)
        est = richardson_eigenvalues(spec, spec.domain_max, 1024, 4, "closed")
        for level in (1, 2, 3):
            assert est[level].value == pytest.approx(model_spectrum(fam, m, level), rel=1e-4)


def test_decomposition_invariants():
    spec = ModelSpec(K, 2, -1.0)
    dec = dirichlet_eigen(spec, 1.0, 512, 10)
    w = dec.grid.weights
    gram = (dec.eigenfunctions * w) @ dec.eigenfunctions.T
    assert np.allclose(gram, np.eye(10), atol=1e-10)
    assert np.all(dec.eigenvalues > 0)
    assert np.all(np.diff(dec.eigenvalues) > 0)
    assert np.all(dec.eigenfunctions[0] > 0)


def test_closed_ground_state_constant():
    spec = ModelSpec(Q, 1, 1.0)
    dec = dirichlet_eigen(spec, spec.domain_max, 512, 3, "closed")
    phi0 = dec.eigenfunctions[0]
    assert np.allclose(phi0, phi0[0], rtol=1e-8)
    assert phi0[0] == pytest.approx(1 / math.sqrt(dec.grid.total_mass), rel=1e-8)


def test_count_limit():
    with pytest.raises(DomainError):
        dirichlet_eigen(ModelSpec(K, 1, 0.0), 1.0, 64, 17)


def test_second_order_convergence():
    spec = ModelSpec(K, 2, 1.0)
    lam = [dirichlet_eigen(spec, 1.0, n, 1).eigenvalues[0] for n in (256, 512, 1024)]
    assert abs(lam[0] - lam[1]) / abs(lam[1] - lam[2]) >= 3.5


def test_monotone_in_radius():
    spec = ModelSpec(K, 2, 1.0)
    assert cheng_lambda1(spec, 0.5, 512).value > cheng_lambda1(spec, 1.0, 512).value


def test_rescaling_law():
    lhs = cheng_lambda1(ModelSpec(K, 2, 4.0), 0.3, 2048).value
    rhs = 4 * cheng_lambda1(ModelSpec(K, 2, 1.0), 0.6, 2048).value
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_kernel_symmetry_and_mass():
    spec = ModelSpec(K, 1, 0.0)
    dec = decomposition_for_time(spec, 1.0, 0.05, 512)
    a, b = 0.13, 0.61
    assert heat_kernel_spectral(dec, 0.1, a, b) == heat_kernel_spectral(dec, 0.1, b, a)
    masses = [kernel_mass(dec, t) for t in (0.05, 0.1, 0.2, 0.4)]
    assert all(0 < mm <= 1 for mm in masses)
    assert all(x >= y for x, y in zip(masses, masses[1:]))


def test_kernel_long_time_bessel_profile():
    dec = decomposition_for_time(ModelSpec(K, 1, 0.0), 1.0, 0.05, 2048)
    q0 = heat_kernel_spectral(dec, 3.0, 0.0, 0.0)
    for r, expected in J0_AT.items():
        ratio = heat_kernel_spectral(dec, 3.0, 0.0, r) / q0
        assert ratio == pytest.approx(expected, abs=1e-4)


def test_kernel_vanishes_at_wall():
    dec = dirichlet_eigen(ModelSpec(K, 2, 0.0), 1.0, 256, 8)
    assert heat_kernel_spectral(dec, 1.0, 0.0, 1.0) == 0.0


def test_semigroup_property():
    spec = ModelSpec(K, 2, 1.0)
    dec = decomposition_for_time(spec, 1.0, 0.25, 2000)
    w, r_i = dec.grid.weights, dec.grid.centers
    first = kernel_column(dec, 0.25, 0.0)
    for r in (0.0, 0.2, 0.5, 0.8):
        composed = np.sum(w * first * heat_kernel_spectral(dec, 0.25, r_i, r))
        assert abs(heat_kernel_spectral(dec, 0.5, 0.0, r) - composed) <= 1e-6


def test_truncation_warning():
    dec = dirichlet_eigen(ModelSpec(K, 1, 0.0), 1.0, 256, 4)
    with pytest.warns(RuntimeWarning):
        heat_kernel_spectral(dec, 0.01, 0.0, 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        heat_kernel_spectral(decomposition_for_time(ModelSpec(K, 1, 0.0), 1.0, 0.01, 256), 0.01, 0.0, 0.5)


def test_kernel_cdf_monotone():
    spec = ModelSpec(K, 2, 1.0)
    dec = decomposition_for_time(spec, spec.domain_max, 0.2, 512, "closed")
    s = np.linspace(0, spec.domain_max, 50)
    cdf = kernel_cdf(dec, 0.2, s)
    assert cdf[0] == 0.0
    assert np.all(np.diff(cdf) >= -1e-15)
    assert cdf[-1] == pytest.approx(1.0, abs=1e-10)


def test_json_round_trip():
    dec = dirichlet_eigen(ModelSpec(Q, 2, -1.0), 1.0, 128, 5)
    text = dec.to_json()
    back = SpectralDecomposition.from_json(text)
    assert back.to_json() == text
    assert np.array_equal(back.eigenvalues, dec.eigenvalues)
    assert np.array_equal(back.eigenfunctions, dec.eigenfunctions)
    assert back.boundary_mode == "dirichlet" and back.spec == dec.spec
