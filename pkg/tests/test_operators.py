"""Gauge transformation, effective potentials, first-order operator."""

import math

import numpy as np
import pytest

from helitube.geometry import HelixSpec, metric_h, v_curv
from helitube.operators import (
    PHI,
    PSI,
    GaugeMismatch,
    WaveField,
    apply_laplace_beltrami,
    apply_transformed_operator,
    effective_params,
    laplace_beltrami_expanded,
    normalize,
    random_band_limited,
    spectral_derivative,
    v1_apply,
    v1_multiplicative,
    v_eff,
    v_kin,
    wave_field,
    wavefield_norm,
)

FIG3 = HelixSpec(kappa=1.0, tau=1.0, rho0=0.1)


def l2(values):
    return float(np.linalg.norm(values.ravel()))


# ------------------------------------------------------------------- params


def test_effective_params():
    p = effective_params(HelixSpec(kappa=1.0, tau=1.0, rho0=0.1))
    assert p.a == (100.0 + 1.0) / 4.0
    assert p.epsilon == pytest.approx(0.1)
    assert p.k_eff_sq(2.0) == pytest.approx(p.a + 2.0)
    cyl = effective_params(HelixSpec(kappa=0.0, tau=1.0, rho0=2.0))
    assert cyl.a == pytest.approx(1.0 / 16.0)


# ----------------------------------------------------------- wavefield admin


def test_gauge_validation_and_norms():
    spec = FIG3
    rng = np.random.default_rng(0)
    psi = random_band_limited(spec, 16, 16, rng, gauge=PSI)
    assert wavefield_norm(spec, psi) == pytest.approx(1.0, abs=1e-12)
    phi = random_band_limited(spec, 16, 16, rng, gauge=PHI)
    assert wavefield_norm(spec, phi) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(GaugeMismatch):
        apply_laplace_beltrami(spec, phi)
    with pytest.raises(GaugeMismatch):
        apply_transformed_operator(spec, psi)
    with pytest.raises(GaugeMismatch):
        v1_apply(spec, psi)
    with pytest.raises(ValueError):
        WaveField(np.ones((4, 4)), 1.0, 1.0, "XXX")


def test_normalize_weighted_vs_flat():
    # PSI norm carries the h weight; h > 1 on the outer rim changes the norm
    spec = FIG3
    vals = np.ones((12, 12), dtype=complex)
    psi = normalize(spec, wave_field(spec, vals, PSI))
    phi = normalize(spec, wave_field(spec, vals, PHI))
    assert wavefield_norm(spec, psi) == pytest.approx(1.0, abs=1e-12)
    assert wavefield_norm(spec, phi) == pytest.approx(1.0, abs=1e-12)
    # cell average of h is 1, so the constant field has identical norms
    np.testing.assert_allclose(psi.values, phi.values, rtol=1e-12)


def test_spectral_derivative_exact_on_modes():
    n, period = 32, 2 * math.pi
    x = np.arange(n) * (period / n)
    f = np.exp(1j * 3 * x)[:, None] * np.ones((1, 4))
    df = spectral_derivative(f, 0, period)
    np.testing.assert_allclose(df, 3j * f, atol=1e-12)
    d2 = spectral_derivative(f, 0, period, 2)
    np.testing.assert_allclose(d2, -9.0 * f, atol=1e-11)


# -------------------------------------------------------- Laplace-Beltrami


def test_laplacian_constant_straight_tube():
    spec = HelixSpec(kappa=0.0, tau=1.0, rho0=1.0)
    psi = wave_field(spec, np.ones((8, 8), dtype=complex), PSI)
    out = apply_laplace_beltrami(spec, psi)
    np.testing.assert_allclose(out.values, 0.0, atol=1e-13)


def test_laplacian_cylinder_eigenfunction():
    spec = HelixSpec(kappa=0.0, tau=1.0, rho0=0.5)
    n_s, n_phi = 8, 16
    varphi = -0.5 * spec.varphi_period + np.arange(n_phi) * (
        spec.varphi_period / n_phi
    )
    for n in (1, 2, -3):
        vals = np.ones((n_s, 1)) * np.exp(1j * n * varphi / spec.rho0)[None, :]
        out = apply_laplace_beltrami(spec, wave_field(spec, vals, PSI))
        np.testing.assert_allclose(out.values, (n / spec.rho0) ** 2 * vals, atol=1e-10)


def test_laplacian_metric_vs_expanded_form():
    spec = FIG3
    rng = np.random.default_rng(42)
    for _ in range(5):
        psi = random_band_limited(spec, 64, 64, rng, gauge=PSI)
        a = apply_laplace_beltrami(spec, psi)
        b = laplace_beltrami_expanded(spec, psi)
        assert l2(a.values - b.values) <= 1e-8 * l2(psi.values)


# -------------------------------------------------------------------- v_kin


def test_v_kin_straight_tube_zero():
    spec = HelixSpec(kappa=0.0, tau=2.0, rho0=0.3)
    s = np.linspace(0, 3, 7)
    assert np.all(v_kin(spec, s, 0.7) == 0.0)


def test_v_kin_against_finite_differences_of_h():
    # independent route: numerical h-derivatives in the same closed formula
    spec = FIG3
    d = 1e-4  # balances FD truncation against roundoff in the 2nd differences
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = rng.uniform(0, 2 * math.pi)
        phi = rng.uniform(-math.pi, math.pi)

        def h(ss, pp):
            return metric_h(spec, ss, pp)

        h0 = h(s, phi)
        h_s = (h(s + d, phi) - h(s - d, phi)) / (2 * d)
        h_ss = (h(s + d, phi) - 2 * h0 + h(s - d, phi)) / d**2
        # varphi derivative = (1/rho0) * phi derivative
        h_v = (h(s, phi + d) - h(s, phi - d)) / (2 * d * spec.rho0)
        h_vv = (h(s, phi + d) - 2 * h0 + h(s, phi - d)) / (d * spec.rho0) ** 2
        expect = (
            0.5 * h_vv / h0
            - 0.25 * h_v**2 / h0**2
            + 0.5 * h_ss / h0**3
            - 1.25 * h_s**2 / h0**4
        )
        assert v_kin(spec, s, phi) == pytest.approx(expect, abs=1e-6, rel=1e-6)


def test_gauge_identity_on_random_fields():
    # sqrt(h)*(-Lap)(Phi/sqrt(h)) == -d_s(h^-2 d_s Phi) - Phi_vv + V_kin Phi
    spec = FIG3
    rng = np.random.default_rng(123)
    n = 64
    S, V = np.meshgrid(
        np.arange(n) * (spec.s_period / n),
        -0.5 * spec.varphi_period + np.arange(n) * (spec.varphi_period / n),
        indexing="ij",
    )
    h = metric_h(spec, S, V / spec.rho0)
    vk = v_kin(spec, S, V / spec.rho0)
    for _ in range(20):
        fld = random_band_limited(spec, n, n, rng, gauge=PHI)
        psi = WaveField(fld.values / np.sqrt(h), fld.period_s, fld.period_varphi, PSI)
        lhs = np.sqrt(h) * apply_laplace_beltrami(spec, psi).values
        ds = lambda v, o=1: spectral_derivative(v, 0, fld.period_s, o)
        flux = -ds(ds(fld.values) / h**2)
        vv = spectral_derivative(fld.values, 1, fld.period_varphi, 2)
        rhs = flux - vv + vk * fld.values
        assert l2(lhs - rhs) <= 1e-8 * l2(fld.values)


# -------------------------------------------------------------------- v_eff


def test_v_eff_cylinder():
    spec = HelixSpec(kappa=0.0, tau=1.0, rho0=1.0)
    vals = v_eff(spec, np.linspace(0, 5, 7), 0.4)
    np.testing.assert_allclose(vals, -0.25, atol=1e-15)


def test_v_eff_outer_inner_inequality_sweep():
    # v_eff(s0, 0) < v_eff(s0, pi) across the eps sweep, kappa = tau = 1
    for j in range(1, 18):
        eps = 0.05 * j
        spec = HelixSpec(kappa=1.0, tau=1.0, rho0=eps)
        assert v_eff(spec, spec.s0, 0.0) < v_eff(spec, spec.s0, math.pi)


def test_v_eff_ridge_minimum_torsion_dominated():
    # unit-cell argmin sits on theta(s) + phi = 0 for every s row
    spec = HelixSpec(kappa=0.1, tau=1.0, rho0=1.0)
    n = 32
    from helitube.geometry import sample_field

    f = sample_field(spec, "v_eff", n, n)
    for i in range(n):
        jmin = int(np.argmin(f.values[i]))
        # theta + phi = 0 at varphi_j = tau*s_i (rho0 = 1): j = (i + n/2) mod n
        assert jmin == (i + n // 2) % n


# ------------------------------------------------- transformed operator


def test_transformed_operator_cylinder_closed_form():
    spec = HelixSpec(kappa=0.0, tau=1.0, rho0=0.5)
    n_s, n_phi = 16, 16
    s = np.arange(n_s) * (spec.s_period / n_s)
    varphi = -0.5 * spec.varphi_period + np.arange(n_phi) * (
        spec.varphi_period / n_phi
    )
    for n, m in ((0, 0), (1, 2), (-2, 1)):
        k = m * spec.tau  # on-grid longitudinal mode
        vals = np.exp(1j * (n * varphi / spec.rho0)[None, :] + 1j * (k * s)[:, None])
        out = apply_transformed_operator(spec, wave_field(spec, vals, PHI))
        expect = (k**2 + (n / spec.rho0) ** 2 - 0.25 / spec.rho0**2) * vals
        np.testing.assert_allclose(out.values, expect, atol=1e-10)


def test_transformed_operator_hermitian_flat():
    spec = FIG3
    rng = np.random.default_rng(9)
    for _ in range(5):
        f1 = random_band_limited(spec, 48, 48, rng)
        f2 = random_band_limited(spec, 48, 48, rng)
        o1 = apply_transformed_operator(spec, f1).values
        o2 = apply_transformed_operator(spec, f2).values
        lhs = np.vdot(f1.values, o2)
        rhs = np.vdot(o1, f2.values)
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) / scale < 1e-10


def test_gauge_equivalence_of_operators():
    # O_PHI(sqrt(h) Psi) = sqrt(h) ( -Lap Psi + V_curv Psi )
    spec = FIG3
    rng = np.random.default_rng(77)
    n = 64
    S, V = np.meshgrid(
        np.arange(n) * (spec.s_period / n),
        -0.5 * spec.varphi_period + np.arange(n) * (spec.varphi_period / n),
        indexing="ij",
    )
    h = metric_h(spec, S, V / spec.rho0)
    vc = v_curv(spec, S, V / spec.rho0)
    for _ in range(5):
        psi = random_band_limited(spec, n, n, rng, gauge=PSI)
        phi = WaveField(np.sqrt(h) * psi.values, psi.period_s, psi.period_varphi, PHI)
        lhs = apply_transformed_operator(spec, phi).values
        rhs = np.sqrt(h) * (
            apply_laplace_beltrami(spec, psi).values + vc * psi.values
        )
        assert l2(lhs - rhs) <= 1e-8 * l2(phi.values)


# ------------------------------------------------------------ first order


def test_v1_zero_curvature_vanishes():
    spec = HelixSpec(kappa=0.0, tau=1.0, rho0=0.2)
    rng = np.random.default_rng(1)
    fld = random_band_limited(spec, 16, 16, rng)
    out = v1_apply(spec, fld)
    np.testing.assert_allclose(out.values, 0.0, atol=1e-15)


def test_v1_constant_field_is_pure_multiplication():
    spec = FIG3
    n = 32
    fld = wave_field(spec, np.ones((n, n), dtype=complex), PHI)
    out = v1_apply(spec, fld)
    S, V = np.meshgrid(
        np.arange(n) * (spec.s_period / n),
        -0.5 * spec.varphi_period + np.arange(n) * (spec.varphi_period / n),
        indexing="ij",
    )
    expect = v1_multiplicative(spec, S, V / spec.rho0)
    np.testing.assert_allclose(out.values, expect, atol=1e-12)


def test_v1_multiplicative_supported_on_single_ray():
    # 2-d Fourier coefficients vanish off the (j, -j) ray
    spec = HelixSpec(kappa=1.0, tau=1.0, rho0=0.05)
    n = 32
    S, V = np.meshgrid(
        np.arange(n) * (spec.s_period / n),
        -0.5 * spec.varphi_period + np.arange(n) * (spec.varphi_period / n),
        indexing="ij",
    )
    vals = v1_multiplicative(spec, S, V / spec.rho0)
    coef = np.fft.fft2(vals) / vals.size
    ms = np.fft.fftfreq(n, 1.0 / n).astype(int)
    bound = 1e-12 * spec.epsilon * spec.kappa**2
    on_ray_power = 0.0
    for i, mi in enumerate(ms):
        for j, mj in enumerate(ms):
            # x = tau s - varphi/rho0 has grid signature (m_s, m_phi) = (m, -m)
            if mi == -mj:
                on_ray_power += abs(coef[i, j]) ** 2
            else:
                assert abs(coef[i, j]) <= bound
    assert on_ray_power > 0.0


def _v1_true_action(spec, fld):
    """Measured O(eps) expansion of the full flat-gauge operator.

    eps [ (kappa^2 - tau^2)/2 cos(xb) + 2 cos(xb) d_s^2 + 2 tau sin(xb) d_s ]
    with xb = theta(s) + phi; used as the order-2 reference below.
    """
    from helitube.geometry import rotation_angle

    n_s, n_phi = fld.values.shape
    S, V = np.meshgrid(
        np.arange(n_s) * (fld.period_s / n_s),
        -0.5 * fld.period_varphi + np.arange(n_phi) * (fld.period_varphi / n_phi),
        indexing="ij",
    )
    xb = rotation_angle(spec, S) + V / spec.rho0
    f_s = spectral_derivative(fld.values, 0, fld.period_s)
    f_ss = spectral_derivative(fld.values, 0, fld.period_s, 2)
    return spec.epsilon * (
        0.5 * (spec.kappa**2 - spec.tau**2) * np.cos(xb) * fld.values
        + 2.0 * np.cos(xb) * f_ss
        + 2.0 * spec.tau * np.sin(xb) * f_s
    )


def _first_order_residual(v1_fn, eps, values):
    """L2 norm of (full operator - flat Laplacian + a) Phi - v1_fn(Phi)."""
    spec = HelixSpec(kappa=1.0, tau=1.0, rho0=eps)
    a = effective_params(spec).a
    fld = wave_field(spec, values, PHI)
    full = apply_transformed_operator(spec, fld).values
    flat = (
        -spectral_derivative(values, 0, fld.period_s, 2)
        - spectral_derivative(values, 1, fld.period_varphi, 2)
    )
    first = v1_fn(spec, fld)
    return l2(full - flat + a * values - first) / l2(values)


def _band_limited_values(n, seed):
    rng = np.random.default_rng(seed)
    coef = np.zeros((n, n), dtype=complex)
    m = np.fft.fftfreq(n, 1.0 / n).astype(int)
    keep = (np.abs(m)[:, None] <= 3) & (np.abs(m)[None, :] <= 3)
    amp = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    coef[keep] = amp[keep]
    v = np.fft.ifft2(coef)
    return v / np.linalg.norm(v)


@pytest.mark.xfail(
    strict=True,
    reason="stated first-order form leaves an O(eps) remainder; see the"
    " companion test for the measured expansion",
)
def test_v1_expansion_order_as_stated():
    values = _band_limited_values(32, 2024)
    err = {
        eps: _first_order_residual(lambda s, f: v1_apply(s, f).values, eps, values)
        for eps in (0.02, 0.04)
    }
    order = math.log2(err[0.04] / err[0.02])
    assert order >= 1.8


def test_v1_expansion_order_measured_form():
    values = _band_limited_values(32, 2024)
    err = {
        eps: _first_order_residual(_v1_true_action, eps, values)
        for eps in (0.02, 0.04)
    }
    order = math.log2(err[0.04] / err[0.02])
    assert order >= 1.8
    # and the remainder really is small at eps = 0.02
    assert err[0.02] < 0.05


def test_v1_linear_in_eps():
    n = 24
    values = _band_limited_values(n, 7)
    outs = {}
    for eps in (0.02, 0.04):
        spec = HelixSpec(kappa=1.0, tau=1.0, rho0=eps)
        fld = wave_field(spec, values, PHI)
        outs[eps] = v1_apply(spec, fld).values
    np.testing.assert_allclose(outs[0.04], 2.0 * outs[0.02], rtol=1e-12)
