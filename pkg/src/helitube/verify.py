"""Self-verification suite behind the `helitube verify` subcommand.

Each check measures one library invariant and reports the measured value
against its tolerance.  Checks that probe the discretization machinery
(cylinder limit, refinement order) run on fixed internal parameters so
they stay meaningful whatever the configured geometry; the operator and
symmetry checks run on the configured helix.

The vkin_offset configuration key is a negative-control hook: a nonzero
value is added to the gauge potential on one side of the operator
identity only, so any corruption there is caught by the first check.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import HelixSpec, metric_h
from .operators import (
    PHI,
    PSI,
    WaveField,
    apply_laplace_beltrami,
    random_band_limited,
    spectral_derivative,
    v_eff,
    v_kin,
    v1_multiplicative,
)
from .bloch import BlochVector, cylinder_limit_energies
from .oracle import assemble_full, assemble_perturbed, eigensolve

_IDENTITY_FIELDS = 5
_IDENTITY_SEED = 2024


def _check(name, kind, tolerance, measured, **detail) -> dict:
    passed = measured <= tolerance if kind == "max" else measured >= tolerance
    entry = {
        "name": name,
        "kind": kind,
        "tolerance": float(tolerance),
        "measured": float(measured),
        "passed": bool(passed),
    }
    entry.update(detail)
    return entry


def _l2(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def check_operator_identity(cfg) -> dict:
    """sqrt(h)(-Lap)(Phi/sqrt(h)) vs flux form + gauge potential."""
    spec = cfg.spec()
    n_s, n_phi = cfg.n_s, cfg.n_phi
    rng = np.random.default_rng(_IDENTITY_SEED)
    S, V = np.meshgrid(
        np.arange(n_s) * (spec.s_period / n_s),
        -0.5 * spec.varphi_period
        + np.arange(n_phi) * (spec.varphi_period / n_phi),
        indexing="ij",
    )
    h = metric_h(spec, S, V / spec.rho0)
    vk = v_kin(spec, S, V / spec.rho0) + cfg.vkin_offset
    worst = 0.0
    for _ in range(_IDENTITY_FIELDS):
        fld = random_band_limited(spec, n_s, n_phi, rng, gauge=PHI)
        psi = WaveField(
            fld.values / np.sqrt(h), fld.period_s, fld.period_varphi, PSI
        )
        lhs = np.sqrt(h) * apply_laplace_beltrami(spec, psi).values
        d_s = spectral_derivative(fld.values, 0, fld.period_s)
        flux = -spectral_derivative(d_s / h**2, 0, fld.period_s)
        vv = spectral_derivative(fld.values, 1, fld.period_varphi, 2)
        rhs = flux - vv + vk * fld.values
        worst = max(worst, _l2(lhs - rhs) / _l2(fld.values))
    return _check(
        "operator_identity", "max", 1e-8, worst,
        grid=[n_s, n_phi], fields=_IDENTITY_FIELDS,
    )


def check_hermiticity_full(cfg) -> dict:
    """Grid matrix at a generic interior k (complex seam phase)."""
    spec = cfg.spec()
    H = assemble_full(spec, BlochVector(-0.3 * abs(spec.tau), 0), 16, 16).entries
    scale = _l2(H)
    measured = _l2(H - H.conj().T) / scale if scale > 0 else 0.0
    return _check("hermiticity_full", "max", 1e-12, measured, grid=[16, 16])


def check_hermiticity_perturbed(cfg) -> dict:
    """Ray matrix with a probe s0 offset, which makes the entries complex."""
    spec = cfg.spec()
    probe = HelixSpec(
        kappa=spec.kappa, tau=spec.tau, rho0=spec.rho0, s0=0.37
    )
    H = assemble_perturbed(
        probe, (0.21 * abs(spec.tau), 0.0), cfg.n_harmonics
    ).entries
    scale = _l2(H)
    measured = _l2(H - H.conj().T) / scale if scale > 0 else 0.0
    return _check(
        "hermiticity_perturbed", "max", 1e-12, measured,
        n_harmonics=cfg.n_harmonics,
    )


def check_potential_symmetry(cfg) -> dict:
    """v_eff is even under (s - s0, phi) -> (s0 - s, -phi)."""
    spec = cfg.spec()
    n = 32
    ds = np.linspace(-2.0, 2.0, n)
    phis = np.linspace(-math.pi, math.pi, n)
    a = v_eff(spec, spec.s0 + ds[:, None], phis[None, :])
    b = v_eff(spec, spec.s0 - ds[:, None], -phis[None, :])
    vscale = float(np.max(np.abs(a)))
    measured = float(np.max(np.abs(a - b))) / vscale
    return _check("potential_symmetry", "max", 1e-12, measured)


def check_ray_selection(cfg) -> dict:
    """Multiplicative first-order term has Fourier support on one ray only."""
    spec = cfg.spec()
    n = 64
    s = np.arange(n) * (spec.s_period / n)
    varphi = -0.5 * spec.varphi_period + np.arange(n) * (spec.varphi_period / n)
    grid = v1_multiplicative(spec, s[:, None], (varphi / spec.rho0)[None, :])
    coef = np.fft.fft2(np.broadcast_to(grid, (n, n))) / n**2
    ms = np.fft.fftfreq(n, 1.0 / n).astype(int)
    # the helical phase j(tau s - phi) sits at grid modes (j sgn(tau), -j)
    sgn = 1 if spec.tau > 0 else -1
    on_ray = ms[None, :] == -sgn * ms[:, None]
    off = float(np.max(np.abs(np.where(on_ray, 0.0, coef))))
    tol = 1e-12 * spec.epsilon * spec.kappa**2
    return _check("ray_selection", "max", tol, off, grid=[n, n])


def check_cylinder_limit(cfg) -> dict:
    """Straight-tube spectrum vs closed form on fixed probe parameters."""
    probe = HelixSpec(kappa=0.0, tau=5.0, rho0=1.0)
    exact = sorted(
        cylinder_limit_energies(probe, n, 1, math.inf) for n in range(-2, 3)
    )
    levels = {}
    for g in (16, 32):
        levels[g] = eigensolve(
            assemble_full(probe, BlochVector(0.0, 0), g, g), 5
        ).eigenvalues
    rich = (4.0 * levels[32] - levels[16]) / 3.0
    measured = float(np.max(np.abs(rich - exact) / np.abs(exact)))
    return _check(
        "cylinder_limit", "max", 1e-3, measured,
        grids=[[16, 16], [32, 32]], probe_tau=5.0, probe_rho0=1.0,
    )


def check_refinement_order(cfg) -> dict:
    """Observed s-refinement order of the grid oracle on a fixed probe.

    kappa != tau keeps the leading potential harmonic alive, so the
    longitudinal discretization error is visible above solver noise.
    """
    probe = HelixSpec(kappa=0.1, tau=1.0, rho0=0.5)
    k = BlochVector(0.0, 0)
    lowest = {}
    for n_s in (32, 64, 128):
        lowest[n_s] = eigensolve(
            assemble_full(probe, k, n_s, 24), 1
        ).eigenvalues[0]
    d1 = abs(lowest[32] - lowest[64])
    d2 = abs(lowest[64] - lowest[128])
    order = math.log2(d1 / d2) if d2 > 0 else 2.0
    return _check(
        "refinement_order", "min", 1.8, order,
        grids=[[32, 24], [64, 24], [128, 24]],
    )


_CHECKS = (
    check_operator_identity,
    check_hermiticity_full,
    check_hermiticity_perturbed,
    check_potential_symmetry,
    check_ray_selection,
    check_cylinder_limit,
    check_refinement_order,
)


def run_verification(cfg) -> dict:
    spec = cfg.spec()
    checks = [fn(cfg) for fn in _CHECKS]
    return {
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "config": {
            "kappa": spec.kappa,
            "tau": spec.tau,
            "rho0": spec.rho0,
            "s0": spec.s0,
            "epsilon": spec.epsilon,
            "grid": [cfg.n_s, cfg.n_phi],
            "n_harmonics": cfg.n_harmonics,
            "vkin_offset": cfg.vkin_offset,
        },
    }
