"""Coherent states over Landau levels: coordinates, overlaps, translations."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latframe.lattice import LatticeParams, Site, build_window
from latframe.magnetic import (
    LaguerreCoords,
    MagneticParams,
    TruncationError,
    bessel_bound,
    chi_coords,
    chi_pointwise,
    choose_truncation,
    coords_pointwise,
    displacement_matrix,
    laguerre_psi,
    overlap,
    overlap_matrix,
    regime,
    reproducing_eval,
    theta3,
    translate_coords,
    window_coords,
)

MP = MagneticParams(ell_b=1.0)


def overlap_quadrature(ga, gb, mp, level_a=0, level_b=0, n_nodes=70):
    """Two-dimensional Gauss-Hermite integral of conj(chi_a) * chi_b.

    Nodes are centered at the midpoint and scaled by ell*sqrt(2), which
    absorbs the shared Gaussian of the two states; the weight function is
    divided back out of the integrand.
    """
    t, wts = np.polynomial.hermite.hermgauss(n_nodes)
    scale = mp.ell_b * math.sqrt(2.0)
    mid = 0.5 * (np.asarray(ga) + np.asarray(gb))
    x = mid[0] + scale * t
    y = mid[1] + scale * t
    xg, yg = np.meshgrid(x, y, indexing="ij")
    pts = np.stack([xg.ravel(), yg.ravel()], axis=-1)
    fa = chi_pointwise(tuple(ga), pts, mp, level=level_a).reshape(n_nodes, n_nodes)
    fb = chi_pointwise(tuple(gb), pts, mp, level=level_b).reshape(n_nodes, n_nodes)
    u = (xg - mid[0]) / scale
    v = (yg - mid[1]) / scale
    integrand = np.conj(fa) * fb * np.exp(u**2 + v**2)
    return complex((integrand * np.outer(wts, wts)).sum() * scale**2)


def test_chi_pointwise_closed_form(rng):
    gamma = (1.3, -0.7)
    pts = rng.normal(scale=2.0, size=(40, 2))
    got = chi_pointwise(gamma, pts, MP)
    g = np.asarray(gamma)
    wedge = g[0] * pts[:, 1] - g[1] * pts[:, 0]
    expected = (
        np.exp(-1j * wedge / 2.0)
        * np.exp(-((pts - g) ** 2).sum(axis=1) / 4.0)
        / math.sqrt(2.0 * math.pi)
    )
    assert np.max(np.abs(got - expected)) < 1e-12


def test_chi_pointwise_peak_value():
    val = chi_pointwise((0.0, 0.0), np.array([[0.0, 0.0]]), MP)[0]
    assert val == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=1e-14)
    mp2 = MagneticParams(ell_b=2.0)
    val2 = chi_pointwise((0.0, 0.0), np.array([[0.0, 0.0]]), mp2)[0]
    assert val2 == pytest.approx(1.0 / (2.0 * math.sqrt(2.0 * math.pi)), abs=1e-14)


def test_chi_normalized_all_levels():
    for level in (0, 1, 2):
        val = overlap_quadrature((0.4, 1.1), (0.4, 1.1), MP, level, level)
        assert abs(val - 1.0) < 1e-9


def test_overlap_closed_form_vs_quadrature(rng):
    lp = LatticeParams(math.sqrt(math.pi), math.sqrt(math.pi), 12.0)
    w = build_window(lp)
    n = len(w.sites)
    for _ in range(20):
        i, j = rng.integers(0, n, size=2)
        p, q = w.sites[int(i)], w.sites[int(j)]
        closed = overlap(p, q, lp, MP)
        quad = overlap_quadrature(p.gamma(lp), q.gamma(lp), MP)
        assert abs(closed - quad) < 1e-8


def test_overlap_cross_level_orthogonal():
    lp = LatticeParams(1.0, 1.0, 6.0, level_max=1)
    p, q = Site(0, 1, 0), Site(1, 0, 1)
    assert overlap(p, q, lp, MP) == 0.0
    quad = overlap_quadrature(p.gamma(lp), q.gamma(lp), MP, 0, 1)
    assert abs(quad) < 1e-9


def test_overlap_level_one_matches_quadrature(rng):
    lp = LatticeParams(1.4, 1.4, 9.0, level_max=1)
    w = build_window(lp)
    pairs = [(s, t) for s in w.sites for t in w.sites if s.r == t.r == 1]
    for p, q in [pairs[int(k)] for k in rng.integers(0, len(pairs), size=8)]:
        closed = overlap(p, q, lp, MP)
        quad = overlap_quadrature(p.gamma(lp), q.gamma(lp), MP, 1, 1)
        assert abs(closed - quad) < 1e-8


def test_overlap_matrix_consistency():
    lp = LatticeParams(2.0, 2.0, 8.0)
    w = build_window(lp)
    z = overlap_matrix(w, MP)
    assert np.allclose(z, z.conj().T)
    assert np.allclose(np.diag(z), 1.0)
    for a in range(len(w.sites)):
        for b in range(len(w.sites)):
            assert z[a, b] == pytest.approx(overlap(w.sites[a], w.sites[b], lp, MP))


@given(
    st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4)
)
def test_overlap_modulus_and_symmetry(i1, j1, i2, j2):
    lp = LatticeParams(1.2, 0.8, 50.0)
    p, q = Site(0, i1, j1), Site(0, i2, j2)
    z = overlap(p, q, lp, MP)
    assert abs(z) <= 1.0 + 1e-14
    assert overlap(q, p, lp, MP) == pytest.approx(np.conj(z), abs=1e-14)
    assert overlap(p, p, lp, MP) == pytest.approx(1.0, abs=1e-14)


def test_chi_coords_hand_formula():
    gamma = (1.0, 0.5)
    trunc = choose_truncation(math.hypot(*gamma), 1.0)
    c = chi_coords(gamma, 1.0, trunc)
    w = (gamma[0] + 1j * gamma[1]) / math.sqrt(2.0)
    pref = math.exp(-(gamma[0] ** 2 + gamma[1] ** 2) / 4.0)
    for m in range(4):
        expected = pref * w**m / math.sqrt(math.factorial(m))
        assert c.coeffs[m] == pytest.approx(expected, abs=1e-14)
    assert abs(np.vdot(c.coeffs, c.coeffs) - 1.0) < 1e-10


def test_chi_coords_truncation_guard():
    with pytest.raises(TruncationError):
        chi_coords((6.0, 0.0), 1.0, trunc=5)


def test_choose_truncation_tail():
    from scipy.stats import poisson

    for r in (1.0, 5.0, 10.0, 20.0):
        m = choose_truncation(r, 1.0)
        u = r * r / 2.0
        # kept coefficient mass is a Poisson head sum
        assert 1.0 - poisson.cdf(m, u) < 1e-12


def test_coords_inner_product_matches_overlap(rng):
    lp = LatticeParams(1.5, 1.5, 9.0)
    w = build_window(lp)
    trunc, rows = window_coords(w, MP)
    z = overlap_matrix(w, MP)
    got = rows.conj() @ rows.T
    assert np.max(np.abs(got - z)) < 1e-10
    for k, s in enumerate(w.sites):
        c = chi_coords(s.gamma(lp), 1.0, trunc)
        assert np.allclose(rows[k], c.coeffs, atol=1e-14)


def test_coords_pointwise_matches_chi(rng):
    gamma = (2.0, -1.0)
    trunc = choose_truncation(math.hypot(*gamma), 1.0)
    phi = chi_coords(gamma, 1.0, trunc)
    pts = rng.normal(scale=1.5, size=(30, 2))
    direct = chi_pointwise(gamma, pts, MP)
    via_coords = coords_pointwise(phi, pts)
    assert np.max(np.abs(direct - via_coords)) < 1e-9


def test_reproducing_property(rng):
    # a random finite frame combination evaluated two ways
    lp = LatticeParams(1.0, 1.0, 4.0)
    w = build_window(lp)
    trunc, rows = window_coords(w, MP)
    coef = rng.normal(size=len(w.sites)) + 1j * rng.normal(size=len(w.sites))
    phi = LaguerreCoords(level=0, coeffs=(coef[:, None] * rows).sum(axis=0), ell_b=1.0)
    for gamma in [(0.3, -1.2), (2.0, 0.5)]:
        inner, predicted = reproducing_eval(phi, gamma, MP)
        assert inner == pytest.approx(predicted, abs=1e-9)
        pointwise = coords_pointwise(phi, np.array([list(gamma)]))[0]
        assert inner == pytest.approx(
            math.sqrt(2.0 * math.pi) * pointwise, abs=1e-9
        )


def test_theta3_values_and_monotonicity():
    # classical closed form at tau = i: theta3 = pi^(1/4) / Gamma(3/4)
    assert theta3(1.0) == pytest.approx(
        math.pi**0.25 / math.gamma(0.75), abs=1e-12
    )
    assert theta3(1.0) == pytest.approx(1.0864348112133080, abs=1e-12)
    assert theta3(0.5) == pytest.approx(1.4194954880837662, abs=1e-12)
    # brute series
    for tau in (0.25, 0.5, 1.0, 2.0):
        brute = 1.0 + 2.0 * sum(
            math.exp(-math.pi * tau * n * n) for n in range(1, 200)
        )
        assert theta3(tau) == pytest.approx(brute, rel=1e-13)
    assert theta3(0.5) > theta3(1.0) > theta3(2.0) > 1.0
    with pytest.raises(ValueError):
        theta3(0.0)


def test_bessel_bound_brute_series():
    for alpha in (math.sqrt(math.pi), math.sqrt(3 * math.pi / 2), 2.0):
        lp = LatticeParams(alpha, alpha, 10.0)
        got = bessel_bound(lp, MP)
        s = 1.0 + 2.0 * sum(
            math.exp(-(alpha**2) * n * n / 4.0) for n in range(1, 300)
        )
        assert got == pytest.approx(s * s, rel=1e-12)


def test_regime_trichotomy():
    def lp_with_density(delta):
        a = math.sqrt(delta)
        return LatticeParams(a, a, 10.0)

    assert regime(lp_with_density(math.pi), MP) == "overcomplete"
    assert regime(lp_with_density(2.0 * math.pi), MP) == "threshold"
    assert regime(lp_with_density(3.0 * math.pi), MP) == "incomplete"
    # relative tolerance band around the critical density
    assert regime(lp_with_density(2.0 * math.pi * (1 + 1e-12)), MP) == "threshold"
    assert regime(lp_with_density(2.0 * math.pi * (1 + 1e-6)), MP) == "incomplete"


def test_laguerre_psi_orthonormal():
    # radial Gauss-Laguerre style check via dense Gauss-Hermite grid
    t, wts = np.polynomial.hermite.hermgauss(80)
    scale = math.sqrt(2.0)
    xg, yg = np.meshgrid(scale * t, scale * t, indexing="ij")
    pts = np.stack([xg.ravel(), yg.ravel()], axis=-1)
    w2 = np.outer(wts, wts).ravel() * scale**2
    rescale = np.exp(((xg / scale) ** 2 + (yg / scale) ** 2)).ravel()
    vals = {}
    for n1, n2 in [(0, 0), (0, 1), (1, 1), (1, 2)]:
        vals[(n1, n2)] = laguerre_psi(n1, n2, pts, 1.0)
    for a in vals:
        for b in vals:
            inner = np.sum(np.conj(vals[a]) * vals[b] * rescale * w2)
            expected = 1.0 if a == b else 0.0
            assert abs(inner - expected) < 1e-8


def test_displacement_composition_phase(rng):
    trunc = 80
    g1 = (0.6, -0.3)
    g2 = (-0.2, 0.8)
    g12 = (g1[0] + g2[0], g1[1] + g2[1])
    vec = chi_coords((0.1, 0.2), 1.0, trunc).coeffs
    d1 = displacement_matrix(g1, 1.0, trunc)
    d2 = displacement_matrix(g2, 1.0, trunc)
    d12 = displacement_matrix(g12, 1.0, trunc)
    wedge = g1[0] * g2[1] - g1[1] * g2[0]
    phase = np.exp(1j * wedge / 2.0)
    lhs = d12 @ vec
    rhs = phase * (d1 @ (d2 @ vec))
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_displacement_identity_and_column():
    trunc = 60
    d0 = displacement_matrix((0.0, 0.0), 1.0, trunc)
    assert np.allclose(d0, np.eye(trunc + 1), atol=1e-14)
    gamma = (1.2, 0.4)
    d = displacement_matrix(gamma, 1.0, trunc)
    c = chi_coords(gamma, 1.0, trunc)
    assert np.max(np.abs(d[:, 0] - c.coeffs)) < 1e-12
    # unitarity on the retained block, up to truncation leakage
    assert np.max(np.abs((d.conj().T @ d - np.eye(trunc + 1))[:10, :10])) < 1e-10


def test_translate_coords_matches_matrix():
    trunc = 70
    phi = chi_coords((0.5, 0.5), 1.0, trunc)
    gamma = (0.8, -0.6)
    via_fn = translate_coords(gamma, phi)
    via_mat = displacement_matrix(gamma, 1.0, trunc) @ phi.coeffs
    assert np.max(np.abs(via_fn.coeffs - via_mat)) < 1e-12
    # translating the origin state lands on the coherent state at gamma
    origin = chi_coords((0.0, 0.0), 1.0, trunc)
    moved = translate_coords(gamma, origin)
    target = chi_coords(gamma, 1.0, trunc)
    assert np.max(np.abs(moved.coeffs - target.coeffs)) < 1e-12


def test_window_coords_truncation_matches_radius():
    lp = LatticeParams(1.0, 1.0, 5.0)
    w = build_window(lp)
    trunc, rows = window_coords(w, MP)
    rmax = max(math.hypot(*s.gamma(lp)) for s in w.sites)
    assert trunc == choose_truncation(rmax, 1.0)
    assert rows.shape == (len(w.sites), trunc + 1)


def test_magnetic_params_validation():
    with pytest.raises(ValueError):
        MagneticParams(ell_b=1.0, laguerre_trunc=-1)
    with pytest.raises(ValueError):
        MagneticParams(ell_b=0.0)
    mp = MagneticParams(ell_b=2.0)
    assert mp.level_spacing == pytest.approx(0.25)  # default gap 1/ell^2
    assert MagneticParams(ell_b=2.0, eps_b=3.0).level_spacing == 3.0
