"""Geometry of a tube surface wrapped around a circular helix.

The base curve is the constant-curvature, constant-torsion helix embedded as

    x(s) = (R cos(alpha s), R sin(alpha s), p alpha s),

with R = kappa/(kappa^2 + tau^2), p = tau/(kappa^2 + tau^2) and
alpha = sqrt(kappa^2 + tau^2), parametrized by arclength s.  The tube of
radius rho0 is swept along x(s) using the rotation-minimizing frame (t, N, B),
obtained from the Frenet frame (t, n, b) by a rotation through
theta(s) = -tau (s - s0) about the tangent.  In that frame the induced metric
is diagonal with a single nontrivial factor

    h(s, phi) = 1 + rho0 kappa cos(theta(s) + phi),

and the principal curvatures, mean/Gauss curvatures and the attractive
curvature potential all have closed forms evaluated here.

Energies are in natural units 2*mu*E/hbar^2 (dimension 1/length^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegenerateCurve",
    "DegeneratePeriod",
    "EmbeddingViolation",
    "HelixSpec",
    "FrameSample",
    "SurfaceSample",
    "ScalarField2D",
    "rotation_angle",
    "frenet_frame",
    "rotated_frame",
    "surface_point",
    "metric_h",
    "weingarten",
    "principal_curvatures",
    "v_curv",
    "surface_sample",
    "sample_field",
]


class DegenerateCurve(ValueError):
    """Base curve has kappa = tau = 0: no Frenet frame exists."""


class DegeneratePeriod(ValueError):
    """tau = 0: the metric has no finite s-period of its own."""


class EmbeddingViolation(ValueError):
    """rho0*kappa >= 1: the tube surface would self-intersect (h <= 0)."""


@dataclass(frozen=True)
class HelixSpec:
    """Physical parameters of one helical-tube problem instance.

    Parameters
    ----------
    kappa : float
        Curvature of the base curve, >= 0 [1/length].
    tau : float
        Torsion; any sign (handedness) [1/length].
    rho0 : float
        Tube radius, > 0 [length].
    s0 : float
        Reference arclength where the rotated frame coincides with the
        Frenet frame [length].
    """

    kappa: float
    tau: float
    rho0: float
    s0: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "tau", "rho0", "s0"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.rho0 <= 0.0:
            raise ValueError(f"rho0 must be > 0, got {self.rho0!r}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa!r}")
        if self.epsilon >= 1.0:
            raise EmbeddingViolation(
                f"rho0*kappa = {self.epsilon!r} >= 1: tube is not embedded"
            )

    @property
    def epsilon(self) -> float:
        """Dimensionless tube parameter rho0*kappa < 1."""
        return self.rho0 * self.kappa

    @property
    def alpha(self) -> float:
        # alpha = 1/sqrt(R^2 + p^2) collapses to sqrt(kappa^2 + tau^2)
        a2 = self.kappa**2 + self.tau**2
        if a2 == 0.0:
            raise DegenerateCurve("kappa = tau = 0 has no frame")
        return math.sqrt(a2)

    @property
    def helix_radius(self) -> float:
        """R = kappa/(kappa^2 + tau^2)."""
        return self.kappa / self.alpha**2

    @property
    def pitch(self) -> float:
        """p = tau/(kappa^2 + tau^2)."""
        return self.tau / self.alpha**2

    @property
    def s_period(self) -> float:
        """Period 2*pi/|tau| of the metric along s."""
        if self.tau == 0.0:
            raise DegeneratePeriod("tau = 0: metric is s-independent")
        return 2.0 * math.pi / abs(self.tau)

    @property
    def varphi_period(self) -> float:
        """Transverse circumference 2*pi*rho0."""
        return 2.0 * math.pi * self.rho0


@dataclass
class FrameSample:
    """Orthonormal frames of the base curve at one arclength."""

    s: float
    t: np.ndarray
    n: np.ndarray
    b: np.ndarray
    theta: float | None = None
    N: np.ndarray | None = None
    B: np.ndarray | None = None


@dataclass
class SurfaceSample:
    """All pointwise geometric quantities at one (s, phi)."""

    s: float
    phi: float
    varphi: float
    point: np.ndarray
    h: float
    kappa1: float
    kappa2: float
    M: float
    K: float
    v_curv: float


@dataclass
class ScalarField2D:
    """Real samples of a quantity over one periodic (s, varphi) unit cell.

    Node (i, j) sits at (i*period_s/n_s, -pi*rho0 + j*period_varphi/n_phi);
    both directions are half-open so no periodic edge is duplicated.
    """

    n_s: int
    n_phi: int
    period_s: float
    period_varphi: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_s < 2 or self.n_phi < 2:
            raise ValueError("grid must be at least 2x2")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n_s, self.n_phi):
            raise ValueError(
                f"values shape {self.values.shape} != ({self.n_s}, {self.n_phi})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def s_nodes(self) -> np.ndarray:
        return np.arange(self.n_s) * (self.period_s / self.n_s)

    def varphi_nodes(self) -> np.ndarray:
        return (
            -0.5 * self.period_varphi
            + np.arange(self.n_phi) * (self.period_varphi / self.n_phi)
        )


def rotation_angle(spec: HelixSpec, s):
    """Frame rotation angle theta(s) = -tau*(s - s0)."""
    return -spec.tau * (np.asarray(s, dtype=float) - spec.s0)


def _frame_arrays(spec: HelixSpec, s):
    """Frenet (t, n, b) with shape s.shape + (3,); analytic, vectorized."""
    a = spec.alpha
    R = spec.helix_radius
    p = spec.pitch
    s = np.asarray(s, dtype=float)
    c, sn = np.cos(a * s), np.sin(a * s)
    zero = np.zeros_like(s)
    t = np.stack([-a * R * sn, a * R * c, a * p * np.ones_like(s)], axis=-1)
    n = np.stack([-c, -sn, zero], axis=-1)
    b = np.stack([a * p * sn, -a * p * c, a * R * np.ones_like(s)], axis=-1)
    return t, n, b


def frenet_frame(spec: HelixSpec, s: float) -> FrameSample:
    """Analytic Frenet frame (t, n, b) of the base helix at arclength s.

    Satisfies t' = kappa n, n' = -kappa t + tau b, b' = -tau n.  Raises
    DegenerateCurve when kappa = tau = 0.
    """
    t, n, b = _frame_arrays(spec, float(s))
    return FrameSample(s=float(s), t=t, n=n, b=b)


def rotated_frame(spec: HelixSpec, s: float) -> FrameSample:
    """Rotation-minimizing frame (t, N, B) at arclength s.

    N and B are the Frenet normals rotated through theta(s) about t, chosen
    so the frame never twists about the tangent:

        N = cos(theta) n + sin(theta) b,   B = -sin(theta) n + cos(theta) b.
    """
    fr = frenet_frame(spec, s)
    th = float(rotation_angle(spec, s))
    c, sn = math.cos(th), math.sin(th)
    fr.theta = th
    fr.N = c * fr.n + sn * fr.b
    fr.B = -sn * fr.n + c * fr.b
    return fr


def _base_point(spec: HelixSpec, s):
    a = spec.alpha
    R = spec.helix_radius
    p = spec.pitch
    s = np.asarray(s, dtype=float)
    return np.stack([R * np.cos(a * s), R * np.sin(a * s), p * a * s], axis=-1)


def surface_point(spec: HelixSpec, s, phi) -> np.ndarray:
    """Embedded surface point X(s, phi) = x(s) - rho0 (sin(phi) B + cos(phi) N).

    Broadcasts over s and phi; the 3-vector sits on the last axis.
    """
    s = np.asarray(s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s, phi = np.broadcast_arrays(s, phi)
    t, n, b = _frame_arrays(spec, s)
    th = rotation_angle(spec, s)[..., None]
    N = np.cos(th) * n + np.sin(th) * b
    B = -np.sin(th) * n + np.cos(th) * b
    x = _base_point(spec, s)
    return x - spec.rho0 * (np.sin(phi)[..., None] * B + np.cos(phi)[..., None] * N)


def metric_h(spec: HelixSpec, s, phi):
    """Metric factor h(s, phi) = 1 + rho0*kappa*cos(theta(s) + phi); h > 0."""
    th = rotation_angle(spec, s)
    return 1.0 + spec.epsilon * np.cos(th + np.asarray(phi, dtype=float))


def weingarten(spec: HelixSpec, s: float, phi: float) -> np.ndarray:
    """Shape operator in the (varphi, s) tangent basis: diag(1/rho0, kappa2)."""
    k2 = spec.kappa * math.cos(float(rotation_angle(spec, s)) + phi) / float(
        metric_h(spec, s, phi)
    )
    return np.array([[1.0 / spec.rho0, 0.0], [0.0, k2]])


def principal_curvatures(spec: HelixSpec, s, phi):
    """Principal, mean and Gauss curvatures at (s, phi).

    Returns
    -------
    (kappa1, kappa2, M, K)
        kappa1 = 1/rho0 (around the tube), kappa2 = kappa*cos(theta+phi)/h
        (along the tube), M = (kappa1+kappa2)/2, K = kappa1*kappa2.

    M is reported with the (kappa1+kappa2)/2 sign convention; the curvature
    potential depends only on (kappa1-kappa2)^2, so the overall sign of the
    shape operator never matters downstream.
    """
    h = metric_h(spec, s, phi)
    th = rotation_angle(spec, s)
    k1 = np.full_like(np.asarray(h, dtype=float), 1.0 / spec.rho0)
    k2 = spec.kappa * np.cos(th + np.asarray(phi, dtype=float)) / h
    return k1, k2, 0.5 * (k1 + k2), k1 * k2


def v_curv(spec: HelixSpec, s, phi):
    """Curvature-induced potential -(M^2 - K) = -1/(4 rho0^2 h^2).

    Always attractive; in natural units of 1/length^2.
    """
    h = metric_h(spec, s, phi)
    return -1.0 / (4.0 * spec.rho0**2 * h**2)


def surface_sample(spec: HelixSpec, s: float, phi: float) -> SurfaceSample:
    """Bundle every pointwise geometric quantity at one (s, phi)."""
    k1, k2, M, K = principal_curvatures(spec, s, phi)
    return SurfaceSample(
        s=float(s),
        phi=float(phi),
        varphi=spec.rho0 * float(phi),
        point=surface_point(spec, s, phi),
        h=float(metric_h(spec, s, phi)),
        kappa1=float(k1),
        kappa2=float(k2),
        M=float(M),
        K=float(K),
        v_curv=float(v_curv(spec, s, phi)),
    )


def grid_nodes(spec: HelixSpec, n_s: int, n_phi: int, s_period: float | None = None):
    """Uniform half-open grid nodes (s_i, varphi_j) of one unit cell."""
    if s_period is None:
        s_period = spec.s_period  # raises DegeneratePeriod for tau = 0
    if s_period <= 0.0:
        raise ValueError(f"s_period must be > 0, got {s_period!r}")
    s = np.arange(n_s) * (s_period / n_s)
    varphi = -math.pi * spec.rho0 + np.arange(n_phi) * (spec.varphi_period / n_phi)
    return s, varphi


def sample_field(
    spec: HelixSpec,
    quantity: str,
    n_s: int,
    n_phi: int,
    s_period: float | None = None,
) -> ScalarField2D:
    """Sample a named scalar quantity over one periodic unit cell.

    Parameters
    ----------
    quantity : {"h", "v_curv", "v_kin", "v_eff", "V1"}
        "V1" is the multiplicative part of the first-order potential.
    n_s, n_phi : int
        Grid sizes, >= 2 each.
    s_period : float, optional
        Explicit s-period; required when tau = 0 (DegeneratePeriod otherwise).
    """
    if n_s < 2 or n_phi < 2:
        raise ValueError("grid must be at least 2x2")
    if spec.tau == 0.0 and s_period is None:
        raise DegeneratePeriod(
            "tau = 0: supply s_period explicitly to sample an s-dependent cell"
        )
    s, varphi = grid_nodes(spec, n_s, n_phi, s_period)
    S, V = np.meshgrid(s, varphi, indexing="ij")
    PHI = V / spec.rho0

    if quantity == "h":
        vals = metric_h(spec, S, PHI)
    elif quantity == "v_curv":
        vals = v_curv(spec, S, PHI)
    elif quantity in ("v_kin", "v_eff", "V1"):
        # operators builds on geometry; import here to keep the layering acyclic
        from . import operators

        fn = {
            "v_kin": operators.v_kin,
            "v_eff": operators.v_eff,
            "V1": operators.v1_multiplicative,
        }[quantity]
        vals = fn(spec, S, PHI)
    else:
        raise ValueError(f"unknown quantity {quantity!r}")

    period_s = spec.s_period if s_period is None else float(s_period)
    return ScalarField2D(
        n_s=n_s,
        n_phi=n_phi,
        period_s=period_s,
        period_varphi=spec.varphi_period,
        values=np.asarray(vals, dtype=float),
    )
