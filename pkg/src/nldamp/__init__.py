"""nldamp: simulation and convergence certification for the optimal
nonlinear damping controller of second-order systems."""

from .errors import (
    DegenerateInput,
    InvalidProfile,
    OutOfDomain,
    ScenarioError,
    SingularInput,
)
from .model import (
    Deriv2,
    ErrorState,
    GainParams,
    Mat2,
    PDGains,
    PlantState,
    control_accel,
    jacobian_tracking,
    rhs_pd,
    rhs_setpoint,
    rhs_tracking,
    signum,
)
from .reference import (
    NoiseChannel,
    NoiseConfig,
    RefProfile,
    Segment,
    make_constant,
    make_slope,
    make_trapezoid,
    noisy_measurement,
)
from .integrator import (
    IntegratorConfig,
    SimOutcome,
    Termination,
    TimeSeries,
    detect_convergence,
    rk4_step,
    simulate,
    verify_step,
)
from .certify import (
    RATE_COEFF_DERIVED,
    RATE_COEFF_LITERAL,
    Certificate,
    ContractionReport,
    PMatrix,
    attractor_slope,
    closed_form_rate,
    contraction_estimate,
    default_grid,
    default_pmatrix,
    demidovich_J,
    eig_sym_2x2,
    energy_rate_grid,
    grid_certificate,
    k_scaling_check,
    logscale_fit,
    lyapunov_V,
    lyapunov_Vdot,
    quadform_along_state,
    select_rate_coefficient,
)

__version__ = "0.1.0"
