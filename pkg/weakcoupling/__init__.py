from .potentials import (
    Potential,
    GaussianRadial,
    BallIndicator,
    RadialPowerLaw,
    LogDecay,
    OscillatingSlab,
    GridSampled,
    Mollified,
    NormReport,
    potential_from_dict,
    amalgam_norm,
    check_mixed_exponents,
    dp_norm,
    lp_norm,
    mixed_norm,
    mt_integral,
    mt_norm,
    norm_report
)
from .harmonic import (
    KineticSymbol,
    bessel_j,
    kernel_difference_bound,
    sphere_area,
    surface_measure_ft,
    uniform_decay_bound,
    unit_sphere_ft
)
from .quadrature import (
    ShellFamily,
    SphereQuadrature,
    build_sphere_quadrature,
    gauss_panels,
    gegenbauer_rule,
    shell_grid
)
from .vs_operator import (
    OperatorMatrix,
    SpectralResult,
    assemble_vs,
    funk_hecke_spectrum,
    mollified_limit_check,
    predicted_energy,
    schatten_norm,
    vs_spectrum
)
from .birman_schwinger import (
    BoxGrid,
    BsComponents,
    BsOperator,
    bs_apply,
    bs_dense_oracle,
    bs_eigs_iterative,
    bs_lambda_operator,
    bs_operator_norm,
    bs_split,
    log_weight_integrals,
    spectral_measure_check,
    ws_matrix
)
from .asymptotics import (
    AsymptoticsReport,
    EigenCurve,
    auto_lambda_grid,
    first_order_fit,
    riesz_count,
    second_order_eigenvalues,
    second_order_residual,
    solve_e_for_lambda,
    sweep,
    weak_coupling_report
)
from .trial_functions import (
    CapPacket,
    knapp_packet,
    knapp_quadratic_form,
    knapp_sweep,
    multi_cap_certificate,
    radial_trial_value
)
from .cli import ExperimentConfig, run
from .utils import (
    BranchMismatch,
    ConfigError,
    ContourTooClose,
    ConvergenceFailure,
    DimensionMismatch,
    Divergent,
    GradingInsufficient,
    InvalidExponents,
    NoBoundState,
    NoConvergence,
    NonIntegerRank,
    NonPositiveShift,
    NotRadial,
    NumericalError,
    PlacementFailed,
    ResolutionExceeded,
    RootNotFound,
    ScaleTooLarge,
    SizeExceeded,
    UnsupportedDimension,
    UnsupportedModel
)
