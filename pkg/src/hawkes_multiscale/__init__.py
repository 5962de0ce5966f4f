"""Multivariate Hawkes processes: simulation, non-parametric kernel estimation
through the conditional-law equation on multiscale grids, and causality
analytics for order-book event streams."""

from .analytics import (
    BOOK_LABELS,
    BOOK_PAIRING,
    CausalityReport,
    build_report,
    cumulated_kernels,
    dressed_fractions,
    exogeneity_ratios,
    psi_norms,
    symmetry_report,
    write_report,
)
from .book import BookUpdate, classify_book_events, read_book_updates
from .claw import (
    ConditionalLawMatrix,
    MultiscaleGrid,
    build_multiscale_grid,
    claw_eval,
    claw_integrals,
    claw_stderr,
    estimate_claw,
    estimate_lambda,
    read_claw,
    write_claw,
)
from .errors import (
    CoverageError,
    DataFormatError,
    HawkesError,
    NumericalError,
    ParameterError,
    StabilityError,
)
from .events import (
    EventStream,
    make_stream,
    read_events,
    read_events_binary,
    write_events,
    write_events_binary,
)
from .kernels import (
    ExponentialKernel,
    PowerLawKernel,
    TabulatedKernel,
    kernel_eval,
    kernel_l1_norm,
)
from .model import (
    HawkesModel,
    expected_intensities,
    exponential_claw,
    exponential_claw_total,
    model_hash,
    norm_matrix,
    read_model,
    spectral_radius,
    spectral_radius_check,
    write_model,
)
from .pipeline import PipelineConfig, run_pipeline
from .simulate import simulate_branching, simulate_thinning
from .solver import (
    KernelEstimate,
    QuadratureGrid,
    assemble_adapted_system,
    build_quadrature_grid,
    estimate_mu,
    read_estimate,
    solve_kernels,
    solve_kernels_gauss_logcv,
    write_estimate,
)

__version__ = "0.1.0"
