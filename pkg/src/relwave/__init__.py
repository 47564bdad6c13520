"""relwave: spectral toolkit for thin relativistic quantum waveguides.

Computes the discrete spectrum of the two-dimensional Dirac operator with
infinite-mass boundary conditions on a thin tubular neighborhood of a
planar curve, via Rayleigh-Ritz on the quadratic form of the squared
operator, and verifies the thin-width eigenvalue expansion against the
effective 1-d Schrodinger operator driven by the curve's curvature.
"""

from .geometry import (
    CurveProfile,
    CurvePath,
    TubularParams,
    ValidationReport,
    zero_curvature,
    gaussian_bump,
    compact_bump,
    profile_from_samples,
    curvature_from_parametrization,
    epsilon0,
    validate_assumptions,
    tubular_map,
    curvature_primitive,
    read_curve_file,
    read_profile_file,
)
from .transverse import (
    SIGMA1,
    SIGMA2,
    SIGMA3,
    TransverseMode,
    dispersion,
    transverse_root,
    k1_series,
    transverse_energy,
    essential_threshold,
    sigma3_matrix_elements,
    transverse_form_identity_check,
    project_pi_delta,
)
from .forms import DiscretizedForm, write_coordinate_text
from .eigensolve import SpectralResult, lowest_eigenpairs, rayleigh_quotient
from .effective import (
    Grid1D,
    EffectiveSpectrum,
    assemble_qe,
    effective_spectrum,
    shooting_mu1,
    assemble_qe_tilde,
    gauge_transform,
    link_gauge_phases,
    psi_theta_witness,
    qe_pair_value,
    qe_tilde_value,
    gauge_transform_callable,
)
from .strip import (
    StripDiscretization,
    assemble_fqunit,
    assemble_a_pm,
    estimate_sandwich_constant,
    sandwich_constant_breakdown,
)
from .asymptotics import (
    AsymptoticReport,
    dirac_eigenvalues_from_square,
    run_epsilon_sweep,
    sandwich_report,
    emit_report,
    report_from_json,
    default_report_name,
)

__version__ = "0.1.0"
