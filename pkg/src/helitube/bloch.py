"""Plane-wave analysis of the periodic first-order potential.

The potential on the tube surface is periodic in (s, varphi) and all of its
Fourier weight sits on integer multiples of the single reciprocal vector
K1 = (tau, -1/rho0).  This module builds the coupling amplitudes between
plane-wave components, solves the resulting two-component secular problem
near a zone boundary, and derives the quantities that follow from it: the
band gap, its scaling with the bending parameter, the effective-mass tensor,
and the straight-tube reference spectrum.

Because the first-order potential contains s-derivatives, a coupling
amplitude depends on the longitudinal wavenumber of the component it acts
on.  Every product of the form U^2 therefore pairs the amplitude evaluated
at the source wavenumber with the reverse amplitude at the shifted
wavenumber; the pairing makes U^2 real and non-negative on the ray.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .geometry import DegeneratePeriod, HelixSpec
from .operators import effective_params


class NearResonance(ValueError):
    """Perturbative denominator too small; use the two-band treatment."""


class OutOfValidity(ValueError):
    """Requested point lies outside the expansion's validity window."""


class SingularMass(ValueError):
    """Band Hessian is numerically singular; no finite mass tensor."""


SOURCE_TAGS = frozenset(
    {"TWO_BAND", "FIRST_ORDER", "ORACLE_PERTURBED", "ORACLE_FULL"}
)


@dataclass(frozen=True)
class ReciprocalVector:
    """Integer lattice point (m_s, m_phi) with components (m_s tau, m_phi/rho0)."""

    m_s: int
    m_phi: int

    def components(self, spec: HelixSpec) -> np.ndarray:
        return np.array([self.m_s * spec.tau, self.m_phi / spec.rho0])

    @property
    def on_ray(self) -> bool:
        """True when the vector is a nonzero multiple of K1 = (tau, -1/rho0)."""
        return self.m_phi == -self.m_s and self.m_s != 0

    def __neg__(self) -> "ReciprocalVector":
        return ReciprocalVector(-self.m_s, -self.m_phi)


K1 = ReciprocalVector(1, -1)


@dataclass(frozen=True)
class BlochVector:
    """Quasi-momentum k_s in the first zone plus an exact transverse integer n."""

    k_s: float
    n_transverse: int = 0

    def components(self, spec: HelixSpec) -> np.ndarray:
        return np.array([self.k_s, self.n_transverse / spec.rho0])


def bloch_vector(spec: HelixSpec, k_s: float, n_transverse: int = 0) -> BlochVector:
    """Reduce k_s to the first zone [-|tau|/2, |tau|/2)."""
    t = abs(spec.tau)
    if t == 0.0:
        raise DegeneratePeriod("tau = 0 leaves no longitudinal zone to reduce into")
    k = math.remainder(k_s, t)
    if k >= t / 2:
        k -= t
    return BlochVector(k, n_transverse)


def zone_boundary_k(spec: HelixSpec, m: ReciprocalVector = K1) -> np.ndarray:
    """The k-point -K_m/2 where the free bands connected by K_m cross."""
    return -0.5 * m.components(spec)


def _kvec(spec: HelixSpec, k) -> np.ndarray:
    if isinstance(k, BlochVector):
        return k.components(spec)
    kv = np.asarray(k, dtype=float)
    if kv.shape != (2,):
        raise ValueError("k must be a BlochVector or a pair (k_s, k_varphi)")
    return kv


# --------------------------------------------------------------------------
# coupling amplitudes


@dataclass(frozen=True)
class CouplingTable:
    """Ray harmonics of the first-order potential for one source wavenumber.

    entries maps the ray multiple j in {-3..3} \\ {0} to the amplitude of the
    e^{i j (tau s - varphi/rho0)} response; diagonal is the j = 0 shift.
    """

    epsilon: float
    q_s: float
    diagonal: float
    entries: dict = field(default_factory=dict)

    def amplitude(self, j: int) -> complex:
        if j == 0:
            return self.diagonal
        return self.entries.get(j, 0.0)


def _ray_amplitude(spec: HelixSpec, j: int, q_s: float) -> complex:
    """Amplitude of the j-th ray harmonic acting on a plane wave exp(i q_s s).

    Closed forms come from writing cos x, cos^2 x, cos^3 x as exponentials
    (x is the helical phase) and replacing d/ds by i q_s in the derivative
    part.  An s0 offset only rotates the j-th harmonic by exp(-i j tau s0).
    """
    eps = spec.epsilon
    k2 = spec.kappa**2
    aj = abs(j)
    if aj == 0:
        return eps * k2 / 4
    if aj == 1:
        base = eps * (k2 / 16 - q_s**2 / 2 - j * spec.tau * q_s / 2)
    elif aj == 2:
        base = eps * k2 / 8
    elif aj == 3:
        base = -eps * k2 / 16
    else:
        return 0.0
    if spec.s0 == 0.0:
        return base
    return base * cmath.exp(-1j * j * spec.tau * spec.s0)


def coupling_coefficients(spec: HelixSpec, q_s: float) -> CouplingTable:
    """Resolve the first-order potential's action on exp(i q_s s) into ray harmonics."""
    entries = {
        j: _ray_amplitude(spec, j, q_s) for j in (-3, -2, -1, 1, 2, 3)
    }
    return CouplingTable(
        epsilon=spec.epsilon,
        q_s=q_s,
        diagonal=spec.epsilon * spec.kappa**2 / 4,
        entries=entries,
    )


def first_order_u(
    spec: HelixSpec,
    k,
    m: ReciprocalVector,
    energy: float,
    delta: float | None = None,
) -> complex:
    """Leading mixing coefficient of the k+K_m component into the k state."""
    kv = _kvec(spec, k)
    K = m.components(spec)
    k_eff_sq = effective_params(spec).k_eff_sq(energy)
    denom = k_eff_sq - float((kv + K) @ (kv + K))
    if delta is None:
        delta = 1e-6 * spec.tau**2
    if abs(denom) <= delta:
        raise NearResonance(
            f"denominator {denom:.3e} within {delta:.3e} of zero; "
            "the state is degenerate with its shifted partner"
        )
    if not m.on_ray:
        return 0.0
    return _ray_amplitude(spec, m.m_s, kv[0]) / denom


# --------------------------------------------------------------------------
# two-band secular problem


def _u_squared(spec: HelixSpec, kv: np.ndarray, m: ReciprocalVector) -> float:
    """U^2 pairing the forward amplitude at q0 = k_s with the reverse one at q1."""
    j = m.m_s
    a_fwd = _ray_amplitude(spec, j, kv[0])
    a_rev = _ray_amplitude(spec, -j, kv[0] + j * spec.tau)
    return float(np.real(a_fwd * a_rev))


def two_band_energies(spec: HelixSpec, k, m: ReciprocalVector = K1):
    """Both roots of the 2x2 secular problem coupling k and k+K_m.

    Returns (E1, E2) with E1 <= E2.  At epsilon = 0 the roots are the free
    values k^2 - a and (k+K_m)^2 - a; the j = 0 harmonic adds a constant
    shift eps kappa^2/4 to both roots.
    """
    if not m.on_ray:
        raise ValueError("coupling vector must be a nonzero multiple of (1, -1)")
    kv = _kvec(spec, k)
    K = m.components(spec)
    a = effective_params(spec).a
    lower = float(kv @ kv) - a
    upper = float((kv + K) @ (kv + K)) - a
    u2 = _u_squared(spec, kv, m)
    shift = spec.epsilon * spec.kappa**2 / 4
    mid = shift + 0.5 * (lower + upper)
    disc = math.sqrt(max(0.25 * (upper - lower) ** 2 + u2, 0.0))
    return mid - disc, mid + disc


def two_band_gap(spec: HelixSpec, m: ReciprocalVector = K1) -> float:
    """Band gap 2|U| opened at the zone boundary -K_m/2."""
    e1, e2 = two_band_energies(spec, tuple(zone_boundary_k(spec, m)), m)
    return e2 - e1


def near_boundary_expansion(spec: HelixSpec, G: float, m: ReciprocalVector = K1):
    """Quadratic expansion of the two bands at displacement G along the ray.

    Valid while K_m^2 G^2 < 0.1 U^2; at G = 0 it reproduces the two-band
    roots, and the gap, exactly.
    """
    if not m.on_ray:
        raise ValueError("coupling vector must be a nonzero multiple of (1, -1)")
    K = m.components(spec)
    K2 = float(K @ K)
    kb = -0.5 * K
    u2 = _u_squared(spec, kb, m)
    if not K2 * G**2 < 0.1 * u2:
        raise OutOfValidity(
            f"K^2 G^2 = {K2 * G**2:.3e} not small against U^2 = {u2:.3e}"
        )
    u_abs = math.sqrt(abs(u2))
    a = effective_params(spec).a
    shift = spec.epsilon * spec.kappa**2 / 4
    base = shift - a + G**2 + K2 / 4
    corr = u_abs + K2 * G**2 / (2 * u_abs)
    return base - corr, base + corr


# --------------------------------------------------------------------------
# gap scaling


@dataclass(frozen=True)
class GapScaling:
    """Least-squares fit of the boundary gap against eps kappa^2/4."""

    slope: float
    residual: float
    r_squared: float
    eps_values: np.ndarray
    x_values: np.ndarray
    gaps: np.ndarray


def gap_scaling(spec_family: Sequence[HelixSpec]) -> GapScaling:
    """Fit gap(eps) = slope * (eps kappa^2/4) over a family of tube shapes."""
    if len(spec_family) < 4:
        raise ValueError("need at least 4 members to fit a slope")
    eps = np.array([s.epsilon for s in spec_family])
    if np.any(eps > 0.1):
        raise ValueError("family must stay in the thin-tube window eps <= 0.1")
    gaps = np.array([two_band_gap(s) for s in spec_family])
    x = eps * np.array([s.kappa**2 for s in spec_family]) / 4
    sxx = float(x @ x)
    slope = float(x @ gaps) / sxx if sxx > 0 else 0.0
    resid = gaps - slope * x
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((gaps - gaps.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return GapScaling(
        slope=slope,
        residual=math.sqrt(ss_res),
        r_squared=r_squared,
        eps_values=eps,
        x_values=x,
        gaps=gaps,
    )


# --------------------------------------------------------------------------
# effective mass


def _invert_hessian(hess: np.ndarray, tau: float) -> np.ndarray:
    det = float(np.linalg.det(hess))
    if abs(det) < 1e-12 * tau**4:
        raise SingularMass(f"band Hessian determinant {det:.3e} below cutoff")
    return 2.0 * np.linalg.inv(hess)


def effective_mass(
    spec: HelixSpec,
    k,
    band: int,
    m: ReciprocalVector = K1,
    step: float | None = None,
) -> np.ndarray:
    """Mass tensor 2 [d2E/dk dk]^{-1} of a two-band branch, in units of mu.

    Central finite differences of the band energy with one Richardson
    extrapolation; band 0 is the lower branch, band 1 the upper.
    """
    if band not in (0, 1):
        raise ValueError("band must be 0 (lower) or 1 (upper)")
    kv = _kvec(spec, k)
    if step is None:
        if spec.tau == 0.0:
            raise ValueError("default step needs tau != 0; pass step explicitly")
        step = 1e-4 * abs(spec.tau)

    def energy(dk_s: float, dk_v: float) -> float:
        return two_band_energies(spec, (kv[0] + dk_s, kv[1] + dk_v), m)[band]

    def second_differences(h: float) -> np.ndarray:
        e0 = energy(0.0, 0.0)
        d = np.empty((2, 2))
        d[0, 0] = (energy(h, 0.0) - 2 * e0 + energy(-h, 0.0)) / h**2
        d[1, 1] = (energy(0.0, h) - 2 * e0 + energy(0.0, -h)) / h**2
        mixed = (
            energy(h, h) - energy(h, -h) - energy(-h, h) + energy(-h, -h)
        ) / (4 * h**2)
        d[0, 1] = d[1, 0] = mixed
        return d

    hess = (4.0 * second_differences(step / 2) - second_differences(step)) / 3.0
    return _invert_hessian(hess, spec.tau)


def _u_squared_polynomial(spec: HelixSpec, m: ReciprocalVector) -> Polynomial:
    """U^2 as a polynomial in the longitudinal wavenumber q0 = k_s."""
    j = m.m_s
    eps = spec.epsilon
    k2 = spec.kappa**2
    if abs(j) == 1:
        fwd = Polynomial([eps * k2 / 16, -eps * j * spec.tau / 2, -eps / 2])
        rev = Polynomial([eps * k2 / 16, eps * j * spec.tau / 2, -eps / 2])
        return fwd * rev(Polynomial([j * spec.tau, 1.0]))
    if abs(j) == 2:
        return Polynomial([(eps * k2 / 8) ** 2])
    if abs(j) == 3:
        return Polynomial([(eps * k2 / 16) ** 2])
    return Polynomial([0.0])


def two_band_hessian(
    spec: HelixSpec, k, band: int, m: ReciprocalVector = K1
) -> np.ndarray:
    """Closed-form Hessian d2E/dk dk of a two-band branch.

    The branch is shift + |k|^2 + K.k + K^2/2 - a -+ f with
    f = sqrt(D^2 + U^2(q0)), D = K.k + K^2/2, so the Hessian is
    2 I -+ f'' with f'' assembled from D, U^2 and its q0-derivatives.
    """
    if band not in (0, 1):
        raise ValueError("band must be 0 (lower) or 1 (upper)")
    if not m.on_ray:
        raise ValueError("coupling vector must be a nonzero multiple of (1, -1)")
    kv = _kvec(spec, k)
    K = m.components(spec)
    D = float(K @ kv) + 0.5 * float(K @ K)
    w_poly = _u_squared_polynomial(spec, m)
    q0 = kv[0]
    w = float(w_poly(q0))
    wp = float(w_poly.deriv(1)(q0))
    wpp = float(w_poly.deriv(2)(q0))
    f_sq = D * D + w
    if f_sq <= 0.0:
        raise SingularMass("bands touch at this k; Hessian undefined")
    f = math.sqrt(f_sq)
    grad = D * K + 0.5 * np.array([wp, 0.0])
    curv = np.outer(K, K)
    curv[0, 0] += 0.5 * wpp
    f_hess = curv / f - np.outer(grad, grad) / f**3
    sign = -1.0 if band == 0 else 1.0
    return 2.0 * np.eye(2) + sign * f_hess


# --------------------------------------------------------------------------
# straight-tube reference


def cylinder_limit_energies(spec: HelixSpec, n: int, l: int, L: float) -> float:
    """Closed spectrum (n^2 - 1/4)/rho0^2 + (l pi/L)^2 of the straight tube."""
    if spec.kappa != 0.0:
        raise ValueError("closed cylinder spectrum requires kappa = 0")
    if l < 1:
        raise ValueError("longitudinal index l must be a positive integer")
    if not L > 0:
        raise ValueError("tube length L must be positive (math.inf allowed)")
    return (n * n - 0.25) * (1.0 / spec.rho0) ** 2 + (l * math.pi / L) ** 2


# --------------------------------------------------------------------------
# band containers


@dataclass
class BandStructure:
    """Sorted energies per k-point along a path, tagged with their source."""

    kpath: Sequence[BlochVector]
    energies: np.ndarray
    source: str

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        if self.energies.ndim != 2 or self.energies.shape[0] != len(self.kpath):
            raise ValueError("energies must be (n_k, n_bands) matching the path")
        if not np.all(np.isfinite(self.energies)):
            raise ValueError("energies must be finite")
        if np.any(np.diff(self.energies, axis=1) < 0):
            raise ValueError("energies must be sorted ascending per k-point")
        if self.source not in SOURCE_TAGS:
            raise ValueError(f"unknown source tag {self.source!r}")
