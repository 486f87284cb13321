"""Thresholding dynamics for multi-phase mean curvature flow on a periodic
grid, with the variational diagnostics (energies, metric slopes, dissipation
ledgers) that certify each step against the underlying minimizing-movements
structure."""
from __future__ import annotations

from .energetics import (
    GAUSSIAN_FIRST_MOMENT,
    commutator,
    dissipation_sq,
    energy_eh,
    interface_measure_zeta,
    localized_energy,
    metric_d,
    monotonicity_check,
    second_moment_functional,
    step_functional,
)
from .errors import KernelResolutionWarning, LedgerInequalityError, ValidationError
from .fileio import read_dump, write_dump, write_pgm, write_png
from .grid import (
    KERNEL_KINDS,
    Grid,
    Partition,
    PhaseField,
    SpectralKernel,
    convolve,
    make_grid,
    phase_values,
)
from .ledger import (
    BrakkeLedgerRow,
    LedgerReport,
    LedgerSettings,
    build_ledger,
    format_g17,
    write_ledger_csv,
)
from .scheme import Trajectory, comparison_fields, mbo_step, run
from .shapes import (
    ShapeSpec,
    ci_scenarios,
    default_phase_count,
    find_junctions,
    interface_area,
    interface_midpoints,
    junction_angles,
    parse_shape,
    rasterize,
)
from .study import StudyConfig, StudyResult, refinement_study, write_study_csv, write_study_summary
from .tensions import (
    SurfaceTensionMatrix,
    read_shockley_sigma,
    sigma_norm_sq,
    sigma_norm_sq_density,
    sigma_preset,
    uniform_sigma,
    validate_sigma,
)
from .testfields import (
    VectorTestField,
    ZetaField,
    build_dictionary,
    constant_vector_field,
    fourier_vector_field,
    radial_vector_field,
    zeta_preset,
)
from .variational import (
    InterpolantCurve,
    InterpolationResult,
    SolverSettings,
    degiorgi_interpolant_curve,
    interpolate,
    log_spaced_times,
    moreau_yosida_value,
    project_simplex,
)
from .variations import (
    CurvatureEstimate,
    SlopeEstimate,
    curvature_rayleigh,
    first_variation_dissipation,
    first_variation_energy,
    first_variation_energy_direct,
    localized_first_variation,
    slope_lower_bound,
)

__version__ = "0.1.0"
