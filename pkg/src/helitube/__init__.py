"""Quantum mechanics of a particle bound to a helical tube surface.

Modules
-------
geometry   helix frames, tube embedding, metric factor, curvatures
operators  surface Laplacian, gauge transform, effective potential
bloch      folded zone, ray couplings, two-band model, effective mass
oracle     dense finite-difference and plane-wave-ray eigensolvers
cli        deterministic CSV/JSON artifact generation
verify     self-check suite behind `helitube verify`
"""

from .geometry import (
    DegenerateCurve,
    DegeneratePeriod,
    EmbeddingViolation,
    FrameSample,
    HelixSpec,
    ScalarField2D,
    SurfaceSample,
    frenet_frame,
    grid_nodes,
    metric_h,
    principal_curvatures,
    rotated_frame,
    rotation_angle,
    sample_field,
    surface_point,
    surface_sample,
    v_curv,
    weingarten,
)
from .operators import (
    PHI,
    PSI,
    EffectiveParams,
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
from .bloch import (
    K1,
    SOURCE_TAGS,
    BandStructure,
    BlochVector,
    CouplingTable,
    GapScaling,
    NearResonance,
    OutOfValidity,
    ReciprocalVector,
    SingularMass,
    bloch_vector,
    coupling_coefficients,
    cylinder_limit_energies,
    effective_mass,
    first_order_u,
    gap_scaling,
    near_boundary_expansion,
    two_band_energies,
    two_band_gap,
    two_band_hessian,
    zone_boundary_k,
)
from .oracle import (
    GRID_2D,
    PLANE_WAVE_RAY,
    ConvergenceFailure,
    DiscretizedHamiltonian,
    SpectrumResult,
    assemble_full,
    assemble_perturbed,
    band_sweep,
    eigensolve,
    gap_perturbed,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateCurve", "DegeneratePeriod", "EmbeddingViolation",
    "FrameSample", "HelixSpec", "ScalarField2D", "SurfaceSample",
    "frenet_frame", "grid_nodes", "metric_h", "principal_curvatures",
    "rotated_frame", "rotation_angle", "sample_field", "surface_point",
    "surface_sample", "v_curv", "weingarten",
    "PHI", "PSI", "EffectiveParams", "GaugeMismatch", "WaveField",
    "apply_laplace_beltrami", "apply_transformed_operator",
    "effective_params", "laplace_beltrami_expanded", "normalize",
    "random_band_limited", "spectral_derivative", "v1_apply",
    "v1_multiplicative", "v_eff", "v_kin", "wave_field", "wavefield_norm",
    "K1", "SOURCE_TAGS", "BandStructure", "BlochVector", "CouplingTable",
    "GapScaling", "NearResonance", "OutOfValidity", "ReciprocalVector",
    "SingularMass", "bloch_vector", "coupling_coefficients",
    "cylinder_limit_energies", "effective_mass", "first_order_u",
    "gap_scaling", "near_boundary_expansion", "two_band_energies",
    "two_band_gap", "two_band_hessian", "zone_boundary_k",
    "GRID_2D", "PLANE_WAVE_RAY", "ConvergenceFailure",
    "DiscretizedHamiltonian", "SpectrumResult", "assemble_full",
    "assemble_perturbed", "band_sweep", "eigensolve", "gap_perturbed",
    "__version__",
]
