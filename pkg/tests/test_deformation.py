import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from tilecocycle.deformation import (ScanConfig, ShapeMatrix, as_shape, eigenvalue_test, epsilon_matrix,
                                     epsilon_sequence, expanding_dimension, lift, random_frequencies, rho_default,
                                     sample_deformations, torus_distance, veech_statistic, verdict_from_epsilon,
                                     weak_mixing_scan)
from tilecocycle.errors import RadiusTooLarge, UsageError


def contracting_point(p, q, r, t, dps):
    """t (1, beta, beta^2) at dps digits, beta the real root of x^3 - p x^2 + q x + r."""
    ctx = mpmath.mp.clone()
    ctx.dps = dps
    beta = ctx.findroot(lambda x: x ** 3 - p * x ** 2 + q * x + r, -0.5)
    return [ctx.mpf(t), t * beta, t * beta ** 2], abs(float(beta))


def pisot_eigenvalue(model):
    """lam with L^T lam = e_1 + (multiple of the contracting eigenvector of M^T)."""
    beta = model.cubic.real_root
    w = np.array([1.0, beta, beta * beta])
    L = model.shape
    # unknowns (lam_x, lam_y, t): L^T lam - t w = e_1
    A = np.column_stack([L.T, -w])
    return np.linalg.solve(A, np.array([1.0, 0.0, 0.0]))[:2]


def test_square_horizontal_integer_lam_is_exact_eigenvalue(square):
    for lam in [(1, 0), (3, 0), (-2, 0)]:
        eps = epsilon_sequence(square.system, lift(square.shape, lam), 200).values
        assert not eps.any()
        assert eigenvalue_test(square.system, None, lam, 200, 1e-3).label == "CandidateEigenvalue"


def test_generic_lam_rejected(k114):
    v = eigenvalue_test(k114.system, None, (0.37, 1.91), 300, 1e-3)
    assert not v.candidate
    assert v.label.startswith("Rejected(")


def test_pisot_eigenvalue_detected_on_short_orbit(k111):
    lam = pisot_eigenvalue(k111)
    assert eigenvalue_test(k111.system, None, lam, 50, 1e-3).candidate
    # the same frequency drifts off in double precision on long orbits
    assert not eigenvalue_test(k111.system, None, lam, 300, 1e-3).candidate


def test_contracting_orbit_decay_rate(k111):
    z, beta = contracting_point(1, 1, 1, 0.1, 80)
    eps = epsilon_sequence(k111.system, z, 200, precision=80).values
    n = np.arange(len(eps))
    rate = math.exp(np.polyfit(n, np.log(eps), 1)[0])
    assert rate == pytest.approx(beta, rel=1e-3)


@pytest.mark.parametrize("name", ["k111", "k114", "square"])
@given(z=st.lists(st.floats(0, 1, exclude_max=True), min_size=3, max_size=3))
def test_epsilon_bounds(request, name, z):
    eps = epsilon_sequence(request.getfixturevalue(name).system, z, 40).values
    assert ((0 <= eps) & (eps <= 0.5)).all()


@given(z=st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_torus_distance_is_distance_to_nearest_integer(z):
    z = np.array(z)
    assert torus_distance(z) == pytest.approx(np.abs(z - np.round(z)).max(), abs=1e-12)


def test_batched_epsilon_matches_single(k114, rng):
    Z = rng.random((6, 3))
    M = epsilon_matrix(k114.system, Z, 60)
    for z, row in zip(Z, M):
        assert np.array_equal(epsilon_sequence(k114.system, z, 60).values, row)


def test_verdict_logic():
    assert verdict_from_epsilon(np.zeros(60), 1e-3).candidate
    decaying = 0.4 * 0.5 ** np.arange(60)
    assert verdict_from_epsilon(decaying, 1e-3).candidate
    noisy = np.full(60, 0.2)
    v = verdict_from_epsilon(noisy, 1e-3)
    assert v.label == "Rejected(40)"
    assert v.min_tail_epsilon == pytest.approx(0.2)


def test_eigenvalue_test_needs_long_orbit(k111):
    with pytest.raises(UsageError):
        eigenvalue_test(k111.system, None, (1, 0), 49, 1e-3)


@pytest.mark.parametrize("name,rho", [("k111", 0.5), ("k114", 2 / 7), ("square", 2 / 7)])
def test_rho_default(request, name, rho):
    assert rho_default(request.getfixturevalue(name).system) == pytest.approx(rho)


@given(rho=st.floats(0.01, 0.5))
def test_veech_statistic_range(rho):
    from tilecocycle.models import kenyon_system
    from tilecocycle.algebra import CubicParams

    sys = kenyon_system(CubicParams(1, 1, 4)).system
    v = veech_statistic(sys, [0.1, 0.2, 0.3], 100, rho)
    assert 0 <= v <= 1


def test_veech_statistic_rejects_rho(k114):
    with pytest.raises(UsageError):
        veech_statistic(k114.system, [0.1, 0.2, 0.3], 100, 0.7)


def test_shape_matrix(k111):
    L = ShapeMatrix.default(k111.system)
    assert (L.d, L.s) == (2, 3)
    assert L.max_minor() > 0
    assert as_shape(None, k111.system).entries.tolist() == L.entries.tolist()
    with pytest.raises(UsageError):
        as_shape(None)
    with pytest.raises(UsageError):
        ShapeMatrix(np.zeros(3))


def test_sample_deformations(k114):
    L0 = as_shape(None, k114.system)
    a = sample_deformations(L0, 0.05, 10, seed=3)
    b = sample_deformations(L0, 0.05, 10, seed=3)
    assert all(np.array_equal(x.entries, y.entries) for x, y in zip(a, b))
    assert all(np.abs(x.entries - L0.entries).max() <= 0.05 for x in a)
    with pytest.raises(RadiusTooLarge):
        sample_deformations(L0, 0.05, 10, seed=3, min_minor=1e9)
    with pytest.raises(UsageError):
        sample_deformations(L0, -1.0, 1, seed=0)


@given(st.integers(0, 2 ** 32 - 1))
def test_random_frequencies_modulus(seed):
    lam = random_frequencies(np.random.default_rng(seed), 50)
    r = np.linalg.norm(lam, axis=1)
    assert ((r >= 0.1 - 1e-12) & (r <= 10 + 1e-12)).all()


def test_expanding_dimension_degenerate():
    from tilecocycle.errors import Degenerate
    from tilecocycle.substitution import SubstitutionSystem

    sys = SubstitutionSystem(name="rot", m=1, s=2, d=1, digits=(((),),), driver=((0, 1), (-1, 0)), theta=1.0,
                             default_shape=((1.0, 0.0),))
    with pytest.raises(Degenerate):
        expanding_dimension(sys)


def test_scan_is_independent_of_jobs(k114):
    cfg = ScanConfig(samples=3, lams_per_sample=4, N=80, seed=42)
    one = weak_mixing_scan(k114.system, None, cfg, jobs=1)
    two = weak_mixing_scan(k114.system, None, cfg, jobs=2)
    assert one == two
    assert len(one) == 12
    assert [r[0] for r in one] == [0] * 4 + [1] * 4 + [2] * 4


def test_scan_fixed_lams(square):
    cfg = ScanConfig(samples=2, radius=0.0, N=60, fixed_lams=((1.0, 0.0), (0.3, 0.7)))
    rows = weak_mixing_scan(square.system, None, cfg)
    assert [r[3] == "CandidateEigenvalue" for r in rows] == [True, False, True, False]
