"""Brute-force spectral verification on dense matrices.

Two independent discretizations of the transformed surface problem:

* a second-order flux-form finite-difference operator on the (s, varphi)
  grid of one unit cell, with the Bloch phase applied on stencil entries
  that cross the s seam and plain periodicity across the compact varphi
  seam (a formal transverse Bloch index n would only contribute the
  trivial phase e^{i 2 pi n});
* the plane-wave basis restricted to the coupling ray, which is the
  analytic treatment's own matrix form and serves as its direct check.

The s cell is the minimal period 2 pi/|tau|.  Band structure computed on
any multiple of the cell folds onto the same spectrum, so nothing is lost
by the minimal choice.

Everything here is dense and deterministic: assembly is vectorized numpy,
eigensolves use the LAPACK symmetric/Hermitian drivers, and matrices are
capped at desk scale.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import HelixSpec, metric_h
from .operators import effective_params, v_eff
from .bloch import (
    K1,
    SOURCE_TAGS,
    BandStructure,
    BlochVector,
    NearResonance,
    ReciprocalVector,
    _kvec,
    _ray_amplitude,
    _u_squared,
    two_band_energies,
    zone_boundary_k,
)

GRID_2D = "GRID_2D"
PLANE_WAVE_RAY = "PLANE_WAVE_RAY"

DEFAULT_MAX_DIMENSION = 4096


class ConvergenceFailure(RuntimeError):
    """Eigensolver failed to meet the residual target."""


@dataclass
class DiscretizedHamiltonian:
    """Dense Hermitian matrix plus the metadata needed to interpret it."""

    entries: np.ndarray
    basis: str
    k: object
    n_s: int = 0
    n_phi: int = 0
    n_harmonics: int = 0
    transverse_n: int | None = None

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


@dataclass
class SpectrumResult:
    """Ascending eigenvalues with optional vectors and their residuals."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    residual_norms: np.ndarray | None = None
    iterations: int = 1


def _seam_phase(k_s: float, period: float) -> complex:
    """Bloch factor across the s seam; exactly +-1 at center and boundary."""
    x = k_s * period
    r = x / math.pi
    if abs(r - round(r)) < 1e-12:
        return complex((-1.0) ** (round(r) % 2))
    return cmath.exp(1j * x)


def _k_s_of(k) -> float:
    if isinstance(k, BlochVector):
        return k.k_s
    return float(np.asarray(k, dtype=float)[0])


def assemble_full(
    spec: HelixSpec,
    k,
    n_s: int,
    n_phi: int,
    max_dimension: int = DEFAULT_MAX_DIMENSION,
    transverse_n: int | None = None,
) -> DiscretizedHamiltonian:
    """Flux-form finite differences for the full transformed operator.

    -d_s(h^-2 d_s) - d2_varphi + v_eff on the unit cell, second-order
    centered, with h^-2 sampled at s midpoints so the matrix is Hermitian
    by construction.  With transverse_n set, the operator is projected
    onto the single varphi mode exp(i n varphi/rho0); the projection is a
    genuine subspace restriction and is exact only for a straight tube.
    """
    if n_s < 4 or n_phi < 4:
        raise ValueError("need at least 4 points per direction")
    dim = n_s if transverse_n is not None else n_s * n_phi
    if dim > max_dimension:
        raise ValueError(
            f"matrix dimension {dim} exceeds the desk-scale cap {max_dimension}"
        )
    ds = spec.s_period / n_s
    dv = spec.varphi_period / n_phi
    s = np.arange(n_s) * ds
    varphi = -0.5 * spec.varphi_period + np.arange(n_phi) * dv
    phi = varphi / spec.rho0
    pot = v_eff(spec, s[:, None], phi[None, :])
    flux = metric_h(spec, (s + 0.5 * ds)[:, None], phi[None, :]) ** -2.0

    phase = _seam_phase(_k_s_of(k), spec.s_period)
    dtype = np.float64 if phase.imag == 0.0 else np.complex128
    ph = phase.real if dtype == np.float64 else phase

    if transverse_n is not None:
        # project onto exp(i n varphi/rho0): coefficients average over
        # varphi, the transverse stencil contributes its discrete symbol
        sym = (2.0 - 2.0 * math.cos(2.0 * math.pi * transverse_n / n_phi)) / dv**2
        flux1 = flux.mean(axis=1)
        diag = (flux1 + np.roll(flux1, 1)) / ds**2 + sym + pot.mean(axis=1)
        H = np.zeros((n_s, n_s), dtype=dtype)
        H[np.arange(n_s), np.arange(n_s)] = diag
        hop = -(flux1 / ds**2).astype(dtype)
        hop[-1] *= ph
        rows = np.arange(n_s)
        cols = np.roll(rows, -1)
        H[rows, cols] = hop
        H[cols, rows] = np.conj(hop)
        return DiscretizedHamiltonian(
            H, GRID_2D, k, n_s=n_s, n_phi=n_phi, transverse_n=transverse_n
        )

    idx = np.arange(n_s)[:, None] * n_phi + np.arange(n_phi)[None, :]
    H = np.zeros((dim, dim), dtype=dtype)
    diag = (flux + np.roll(flux, 1, axis=0)) / ds**2 + 2.0 / dv**2 + pot
    H[idx.ravel(), idx.ravel()] = diag.ravel()

    hop_s = -(flux / ds**2).astype(dtype)
    hop_s[-1, :] *= ph
    cols_s = np.roll(idx, -1, axis=0)
    H[idx.ravel(), cols_s.ravel()] = hop_s.ravel()
    H[cols_s.ravel(), idx.ravel()] = np.conj(hop_s).ravel()

    hop_v = -1.0 / dv**2
    cols_v = np.roll(idx, -1, axis=1)
    H[idx.ravel(), cols_v.ravel()] = hop_v
    H[cols_v.ravel(), idx.ravel()] = hop_v
    return DiscretizedHamiltonian(H, GRID_2D, k, n_s=n_s, n_phi=n_phi)


def assemble_perturbed(
    spec: HelixSpec, k, n_harmonics: int
) -> DiscretizedHamiltonian:
    """Central-equation matrix on the coupling ray, j in [-n, n].

    Diagonal entries are the a-shifted free energies plus the constant
    harmonic; off-diagonals are ray amplitudes evaluated at the source
    component's own longitudinal wavenumber, so the matrix is Hermitian.
    """
    if n_harmonics < 3:
        raise ValueError("need n_harmonics >= 3 to cover all couplings")
    kv = _kvec(spec, k)
    a = effective_params(spec).a
    js = np.arange(-n_harmonics, n_harmonics + 1)
    q = kv[0] + js * spec.tau
    free = q**2 + (kv[1] - js / spec.rho0) ** 2 - a
    shift = spec.epsilon * spec.kappa**2 / 4
    dtype = np.float64 if spec.s0 == 0.0 else np.complex128
    dim = js.size
    H = np.zeros((dim, dim), dtype=dtype)
    H[np.arange(dim), np.arange(dim)] = free + shift
    for dj in (1, 2, 3):
        for col in range(dim - dj):
            amp = _ray_amplitude(spec, dj, q[col])
            if dtype == np.float64:
                amp = amp.real if isinstance(amp, complex) else amp
            H[col + dj, col] = amp
            H[col, col + dj] = np.conj(amp)
    return DiscretizedHamiltonian(H, PLANE_WAVE_RAY, k, n_harmonics=n_harmonics)


def eigensolve(
    H: DiscretizedHamiltonian, n_lowest: int, with_vectors: bool = False
) -> SpectrumResult:
    """Lowest eigenvalues of a Hermitian matrix, deterministic dense solve."""
    dim = H.dimension
    if not 1 <= n_lowest <= dim:
        raise ValueError(f"n_lowest must be in [1, {dim}], got {n_lowest}")
    try:
        if with_vectors:
            w, v = np.linalg.eigh(H.entries)
        else:
            w = np.linalg.eigvalsh(H.entries)
            v = None
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"dense eigensolve failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise ConvergenceFailure("eigensolve produced non-finite eigenvalues")
    w = w[:n_lowest]
    if v is None:
        return SpectrumResult(eigenvalues=w)
    v = v[:, :n_lowest]
    scale = float(np.linalg.norm(H.entries))
    residuals = np.linalg.norm(H.entries @ v - v * w[None, :], axis=0)
    if np.any(residuals > 1e-9 * scale):
        raise ConvergenceFailure(
            f"worst residual {residuals.max():.3e} exceeds 1e-9*|H| = {1e-9 * scale:.3e}"
        )
    return SpectrumResult(eigenvalues=w, eigenvectors=v, residual_norms=residuals)


# --------------------------------------------------------------------------
# band sweeps


def _first_order_energies(spec: HelixSpec, k, n_bands: int) -> np.ndarray:
    """Second-order perturbative energies of the ray-shifted free states."""
    kv = _kvec(spec, k)
    a = effective_params(spec).a
    shift = spec.epsilon * spec.kappa**2 / 4
    delta = 1e-6 * spec.tau**2

    def free(j: int) -> float:
        return (kv[0] + j * spec.tau) ** 2 + (kv[1] - j / spec.rho0) ** 2 - a

    energies = []
    for j in range(-4, 5):
        e0 = free(j)
        kv_j = kv + j * K1.components(spec)
        corr = 0.0
        for dj in (-3, -2, -1, 1, 2, 3):
            denom = e0 - free(j + dj)
            if abs(denom) <= delta:
                raise NearResonance(
                    f"states j={j} and j={j + dj} degenerate at this k"
                )
            corr += _u_squared(spec, kv_j, ReciprocalVector(dj, -dj)) / denom
        energies.append(e0 + shift + corr)
    return np.sort(energies)[:n_bands]


def _sweep_one(spec, k, source, n_bands, n_s, n_phi, n_harmonics):
    if source == "TWO_BAND":
        return np.asarray(two_band_energies(spec, k))[:n_bands]
    if source == "FIRST_ORDER":
        return _first_order_energies(spec, k, n_bands)
    if source == "ORACLE_PERTURBED":
        H = assemble_perturbed(spec, k, n_harmonics)
        return eigensolve(H, n_bands).eigenvalues
    H = assemble_full(spec, k, n_s, n_phi)
    return eigensolve(H, n_bands).eigenvalues


def band_sweep(
    spec: HelixSpec,
    kpath,
    source: str,
    n_bands: int = 2,
    n_s: int = 64,
    n_phi: int = 64,
    n_harmonics: int = 7,
) -> BandStructure:
    """Lowest bands along a k-path with the requested method.

    k-point evaluations are independent; HELITUBE_THREADS > 1 runs them in
    a thread pool (the dense solver releases the interpreter lock).
    Output follows the input path order either way.
    """
    if source not in SOURCE_TAGS:
        raise ValueError(f"unknown source tag {source!r}")
    if source == "TWO_BAND" and n_bands > 2:
        raise ValueError("the two-band model has exactly 2 bands")
    half = abs(spec.tau) / 2
    for k in kpath:
        if abs(_k_s_of(k)) > half * (1 + 1e-12):
            raise ValueError(f"k_s = {_k_s_of(k)} outside the first zone")

    def run(k):
        return _sweep_one(spec, k, source, n_bands, n_s, n_phi, n_harmonics)

    workers = int(os.environ.get("HELITUBE_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, kpath))
    else:
        rows = [run(k) for k in kpath]
    return BandStructure(list(kpath), np.vstack(rows), source)


def gap_perturbed(
    spec: HelixSpec, m: ReciprocalVector = K1, n_harmonics: int = 7
) -> float:
    """Splitting of the lowest pair at the crossing point -K_m/2 of the ray.

    The crossing sits at half-integer transverse wavenumber, so this is
    evaluated on the continuous ray rather than at an integer-n BlochVector.
    """
    kb = tuple(zone_boundary_k(spec, m))
    e = eigensolve(assemble_perturbed(spec, kb, n_harmonics), 2).eigenvalues
    return float(e[1] - e[0])
