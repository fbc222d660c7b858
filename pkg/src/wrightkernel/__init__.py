"""Wright's generalized Bessel kernel: series, integrable form, Fredholm determinants,
gap probabilities and the endpoint PDE/Hamiltonian structure."""

from .errors import (
    DomainError,
    InvalidParameters,
    NearDiagonal,
    NonConvergent,
    QuadratureFailure,
    SingularSystem,
    StepFailure,
    WrightKernelError,
)
from .fredholm import (
    IntervalUnion,
    NystromSystem,
    Resolvent,
    ResolventQuantities,
    fredholm_det,
    gap_probability,
    resolvent_kernel,
    resolvent_quantities,
    small_s_asymptote,
)
from .frobenius import FrobeniusSeries, delta_pow, eval_series, validate_wright_ode, wright_bessel
from .kernel import (
    ConcomitantCoeffs,
    KernelParams,
    b_coeffs,
    kernel_integrable,
    kernel_integral,
    kernel_series,
    kernel_tilde,
    nu_vector,
    phi,
    psi,
)
from .ode_gap import GapState, gap_forms, gap_via_ode, init_state, integrate, ode_rhs
from .pde_verify import CanonicalCoords, hamiltonian, involution_check, pde_residuals

__version__ = "0.1.0"
