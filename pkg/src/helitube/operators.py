"""Surface Schrodinger operators in the two gauges.

Two equivalent pictures of the same eigenproblem are implemented:

* PSI gauge: the raw surface wavefunction with weighted norm
  integral |Psi|^2 h ds dvarphi and kinetic operator -Laplace-Beltrami.
* PHI gauge: Phi = sqrt(h) Psi with the flat norm, where the operator
  becomes -d_s(h^-2 d_s .) - d_varphi^2 + V_eff and V_eff = V_kin + V_curv
  collects all metric derivatives into a multiplicative potential.

All derivatives are trigonometric-spectral on the periodic unit cell, so the
operators are exact on band-limited fields; finite differences live only in
the independent grid oracle.  The first-order (in eps = rho0*kappa) potential
is operator-valued: its action on a field is primary, the multiplicative part
is exposed separately for plotting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HelixSpec, ScalarField2D, rotation_angle, v_curv

__all__ = [
    "GaugeMismatch",
    "PSI",
    "PHI",
    "WaveField",
    "EffectiveParams",
    "effective_params",
    "wave_field",
    "wavefield_norm",
    "normalize",
    "random_band_limited",
    "spectral_derivative",
    "apply_laplace_beltrami",
    "laplace_beltrami_expanded",
    "v_kin",
    "v_eff",
    "apply_transformed_operator",
    "v1_multiplicative",
    "v1_apply",
]

PSI = "PSI"
PHI = "PHI"


class GaugeMismatch(ValueError):
    """Operation received a field in the wrong gauge."""


@dataclass
class WaveField:
    """Complex samples of a wavefunction over one periodic unit cell.

    gauge is PSI for the surface wavefunction (weighted norm with h) or PHI
    for sqrt(h)-rescaled values (flat norm).  Node layout matches
    ScalarField2D.
    """

    values: np.ndarray
    period_s: float
    period_varphi: float
    gauge: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        if self.gauge not in (PSI, PHI):
            raise ValueError(f"gauge must be PSI or PHI, got {self.gauge!r}")

    @property
    def n_s(self) -> int:
        return self.values.shape[0]

    @property
    def n_phi(self) -> int:
        return self.values.shape[1]

    def real_field(self) -> ScalarField2D:
        return ScalarField2D(
            self.n_s, self.n_phi, self.period_s, self.period_varphi,
            self.values.real.copy(),
        )

    def imag_field(self) -> ScalarField2D:
        return ScalarField2D(
            self.n_s, self.n_phi, self.period_s, self.period_varphi,
            self.values.imag.copy(),
        )

    def like(self, values: np.ndarray, gauge: str | None = None) -> "WaveField":
        return WaveField(values, self.period_s, self.period_varphi,
                         gauge if gauge is not None else self.gauge)


@dataclass(frozen=True)
class EffectiveParams:
    """Spectral offset a and expansion parameter of one problem instance."""

    a: float
    epsilon: float

    def k_eff_sq(self, energy: float) -> float:
        """Effective squared wavenumber a + E (natural units)."""
        return self.a + energy


def effective_params(spec: HelixSpec) -> EffectiveParams:
    # a = (1/rho0^2 + kappa^2)/4; (1/rho0)**2 keeps round decimals exact
    return EffectiveParams(
        a=((1.0 / spec.rho0) ** 2 + spec.kappa**2) / 4.0, epsilon=spec.epsilon
    )


def wave_field(
    spec: HelixSpec,
    values: np.ndarray,
    gauge: str,
    s_period: float | None = None,
) -> WaveField:
    """Wrap raw values with the cell periods of spec."""
    if s_period is None:
        s_period = spec.s_period
    return WaveField(values, float(s_period), spec.varphi_period, gauge)


def _grid(spec: HelixSpec, n_s: int, n_phi: int, period_s: float):
    s = np.arange(n_s) * (period_s / n_s)
    varphi = -0.5 * spec.varphi_period + np.arange(n_phi) * (spec.varphi_period / n_phi)
    return np.meshgrid(s, varphi, indexing="ij")


def _h_grid(spec: HelixSpec, field: WaveField) -> np.ndarray:
    S, V = _grid(spec, field.n_s, field.n_phi, field.period_s)
    th = rotation_angle(spec, S)
    return 1.0 + spec.epsilon * np.cos(th + V / spec.rho0)


def wavefield_norm(spec: HelixSpec, field: WaveField) -> float:
    """L2 norm in the field's own gauge (h-weighted for PSI, flat for PHI)."""
    w = np.abs(field.values) ** 2
    if field.gauge == PSI:
        w = w * _h_grid(spec, field)
    cell = (field.period_s / field.n_s) * (field.period_varphi / field.n_phi)
    return float(np.sqrt(np.sum(w) * cell))


def normalize(spec: HelixSpec, field: WaveField) -> WaveField:
    """Scale to unit norm in the field's gauge."""
    nrm = wavefield_norm(spec, field)
    if nrm == 0.0:
        raise ValueError("cannot normalize a zero field")
    return field.like(field.values / nrm)


def spectral_derivative(
    values: np.ndarray, axis: int, period: float, order: int = 1
) -> np.ndarray:
    """Trigonometric derivative along one periodic axis.

    Exact on grid modes; the Nyquist mode is dropped for odd orders where its
    derivative is not representable on the grid.
    """
    n = values.shape[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=period / n)
    if order % 2 == 1 and n % 2 == 0:
        k = k.copy()
        k[n // 2] = 0.0  # Nyquist has no odd-order spectral image
    shape = [1, 1]
    shape[axis] = n
    mult = (1j * k.reshape(shape)) ** order
    return np.fft.ifft(np.fft.fft(values, axis=axis) * mult, axis=axis)


def apply_laplace_beltrami(spec: HelixSpec, psi: WaveField) -> WaveField:
    """-Laplace-Beltrami of a PSI-gauge field, in metric form.

    -(1/h) d_s((1/h) d_s Psi) - (1/h) d_varphi(h d_varphi Psi), with spectral
    derivatives.  Self-adjoint under the h-weighted inner product.
    """
    if psi.gauge != PSI:
        raise GaugeMismatch(f"expected PSI-gauge input, got {psi.gauge}")
    h = _h_grid(spec, psi)
    ds = lambda v: spectral_derivative(v, 0, psi.period_s)
    dv = lambda v: spectral_derivative(v, 1, psi.period_varphi)
    out = -ds(ds(psi.values) / h) / h - dv(h * dv(psi.values)) / h
    return psi.like(out)


def _h_derivatives(spec: HelixSpec, s, phi):
    """Analytic h and its first/second derivatives in s and varphi."""
    x = rotation_angle(spec, s) + np.asarray(phi, dtype=float)
    eps, tau, rho0 = spec.epsilon, spec.tau, spec.rho0
    c, sn = np.cos(x), np.sin(x)
    h = 1.0 + eps * c
    h_s = eps * tau * sn
    h_ss = -eps * tau**2 * c
    h_v = -(eps / rho0) * sn
    h_vv = -(eps / rho0**2) * c
    return h, h_s, h_ss, h_v, h_vv


def laplace_beltrami_expanded(spec: HelixSpec, psi: WaveField) -> WaveField:
    """-Laplacian in expanded coefficient form; cross-check of the metric form.

    -(1/h^2) Psi_ss + (h_s/h^3) Psi_s - Psi_vv - (h_v/h) Psi_v with analytic
    metric derivatives.
    """
    if psi.gauge != PSI:
        raise GaugeMismatch(f"expected PSI-gauge input, got {psi.gauge}")
    S, V = _grid(spec, psi.n_s, psi.n_phi, psi.period_s)
    h, h_s, _, h_v, _ = _h_derivatives(spec, S, V / spec.rho0)
    f = psi.values
    f_s = spectral_derivative(f, 0, psi.period_s)
    f_ss = spectral_derivative(f, 0, psi.period_s, 2)
    f_v = spectral_derivative(f, 1, psi.period_varphi)
    f_vv = spectral_derivative(f, 1, psi.period_varphi, 2)
    out = -f_ss / h**2 + (h_s / h**3) * f_s - f_vv - (h_v / h) * f_v
    return psi.like(out)


def v_kin(spec: HelixSpec, s, phi):
    """Gauge-transformation potential picked up by Phi = sqrt(h) Psi.

    (1/2) h_vv/h - (1/4) h_v^2/h^2 + (1/2) h_ss/h^3 - (5/4) h_s^2/h^4 with
    analytic derivatives of the metric factor; vanishes for a straight tube.
    """
    h, h_s, h_ss, h_v, h_vv = _h_derivatives(spec, s, phi)
    return (
        0.5 * h_vv / h
        - 0.25 * h_v**2 / h**2
        + 0.5 * h_ss / h**3
        - 1.25 * h_s**2 / h**4
    )


def v_eff(spec: HelixSpec, s, phi):
    """Full effective potential v_kin + v_curv (natural units)."""
    return v_kin(spec, s, phi) + v_curv(spec, s, phi)


def apply_transformed_operator(spec: HelixSpec, phi_field: WaveField) -> WaveField:
    """Flat-gauge Hamiltonian action -d_s(h^-2 d_s Phi) - Phi_vv + V_eff Phi.

    The s-part is kept in flux (Sturm-Liouville) form, which is identical to
    the expanded -(1/h^2) d_s^2 + 2(h_s/h^3) d_s and manifestly symmetric
    under the flat inner product.
    """
    if phi_field.gauge != PHI:
        raise GaugeMismatch(f"expected PHI-gauge input, got {phi_field.gauge}")
    h = _h_grid(spec, phi_field)
    S, V = _grid(spec, phi_field.n_s, phi_field.n_phi, phi_field.period_s)
    f = phi_field.values
    ds = lambda v: spectral_derivative(v, 0, phi_field.period_s)
    flux = -ds(ds(f) / h**2)
    f_vv = spectral_derivative(f, 1, phi_field.period_varphi, 2)
    pot = v_eff(spec, S, V / spec.rho0)
    return phi_field.like(flux - f_vv + pot * f)


def _phase_x(spec: HelixSpec, s, phi):
    """Ray phase x = tau(s - s0) - varphi/rho0 of the first-order potential."""
    return spec.tau * (np.asarray(s, dtype=float) - spec.s0) - np.asarray(
        phi, dtype=float
    )


def v1_multiplicative(spec: HelixSpec, s, phi):
    """Multiplicative part of the first-order potential.

    eps * (kappa^2/2) [cos x + cos^2 x - cos^3 x] with x = tau(s-s0) - phi;
    the derivative terms of the first-order operator are not included here.
    """
    c = np.cos(_phase_x(spec, s, phi))
    return spec.epsilon * 0.5 * spec.kappa**2 * (c + c**2 - c**3)


def v1_apply(spec: HelixSpec, phi_field: WaveField) -> WaveField:
    """Action of the operator-valued first-order potential on a PHI field.

    eps { (kappa^2/2)[cos x + cos^2 x - cos^3 x] + cos x d_s^2
          - tau sin x d_s },  x = tau(s - s0) - varphi/rho0,
    with spectral derivatives.  Linear in eps by construction.
    """
    if phi_field.gauge != PHI:
        raise GaugeMismatch(f"expected PHI-gauge input, got {phi_field.gauge}")
    S, V = _grid(spec, phi_field.n_s, phi_field.n_phi, phi_field.period_s)
    x = _phase_x(spec, S, V / spec.rho0)
    f = phi_field.values
    f_s = spectral_derivative(f, 0, phi_field.period_s)
    f_ss = spectral_derivative(f, 0, phi_field.period_s, 2)
    mult = v1_multiplicative(spec, S, V / spec.rho0)
    out = mult * f + spec.epsilon * (
        np.cos(x) * f_ss - spec.tau * np.sin(x) * f_s
    )
    return phi_field.like(out)


def random_band_limited(
    spec: HelixSpec,
    n_s: int,
    n_phi: int,
    rng: np.random.Generator,
    gauge: str = PHI,
    max_mode_s: int | None = None,
    max_mode_phi: int | None = None,
    s_period: float | None = None,
) -> WaveField:
    """Random complex field with spectral support on low modes only.

    Modes up to n/4 by default, so products with smooth metric factors stay
    alias-free at the working grid.  Unit flat norm.
    """
    if max_mode_s is None:
        max_mode_s = max(1, n_s // 4)
    if max_mode_phi is None:
        max_mode_phi = max(1, n_phi // 4)
    if s_period is None:
        s_period = spec.s_period
    coef = np.zeros((n_s, n_phi), dtype=complex)
    ms = np.fft.fftfreq(n_s, 1.0 / n_s).astype(int)
    mp = np.fft.fftfreq(n_phi, 1.0 / n_phi).astype(int)
    keep = (np.abs(ms)[:, None] <= max_mode_s) & (np.abs(mp)[None, :] <= max_mode_phi)
    amp = rng.standard_normal((n_s, n_phi)) + 1j * rng.standard_normal((n_s, n_phi))
    coef[keep] = amp[keep]
    values = np.fft.ifft2(coef)
    fld = WaveField(values, float(s_period), spec.varphi_period, gauge)
    return normalize(spec, fld)
