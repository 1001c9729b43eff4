"""zenosim: open-system quantum metrology simulation.

Dense operator algebra, a Lindblad master-equation engine with
time-dependent rates, Ramsey frequency-estimation limits under dephasing,
criticality-enhanced sensing in the Rabi normal phase, and classical
emulation of engineered dephasing baths — plus a JSON-config experiment
runner (``zenosim run/validate/list``).
"""

from .bathsim import (
    Ensemble,
    NoiseSynthSpec,
    PhaseDraw,
    StepTooCoarse,
    analytic_correlation,
    analytic_psd,
    beta,
    ensemble_average,
    equivalent_dephasing_profile,
    estimate_correlation,
    make_shape,
    sample_phases,
    scale_map,
    trajectory_evolve,
)
from .criticality import (
    DissipationSpec,
    LadderFrame,
    NegativeEigenvalue,
    QfiScan,
    RabiNormalPhase,
    StepTooLarge,
    ThermalScan,
    TruncationAuditError,
    build_ladder,
    check_ladder,
    dissipative_qfi_scan,
    ladder_gap,
    ladder_qfi_closed_form,
    normal_phase_frame,
    normal_phase_hamiltonian,
    oscillation_period,
    powerlaw_fit,
    qfi_mixed,
    qfi_numeric,
    qfi_pure,
    rabi_hamiltonian,
    rabi_qfi_closed_form,
    thermal_scan,
)
from .lindblad import (
    ClosedFormRate,
    ConstantRate,
    Dissipator,
    LinearRate,
    MasterEqProblem,
    NonConvergence,
    PositivityViolation,
    PositivityWarning,
    StepperConfig,
    TabulatedRate,
    dephasing_analytic,
    integrate,
    line_function,
    lindblad_rhs,
)
from .operators import (
    MAX_DIM,
    HilbertSpec,
    anticommutator,
    basis_ket,
    check_density_matrix,
    check_ket,
    commutator,
    dagger,
    expect,
    fock_ket,
    ghz_state,
    identity,
    is_hermitian,
    ket_to_dm,
    kron,
    kron_all,
    ladder_ops,
    matrix_exp_apply,
    number_op,
    pauli,
    plus_state,
    purity,
    quadrature_p,
    quadrature_x,
    sigma,
)
from .ramsey import (
    Custom,
    Markov,
    NoInteriorOptimum,
    Noiseless,
    NonUnimodal,
    RamseyConfig,
    ScalingCurve,
    ScalingRow,
    Zeno,
    enhancement_ratio,
    error_dynamics_numeric,
    lindblad_rate_profile,
    optimal_time,
    ramsey_error,
    scaling_scan,
)

__version__ = "0.1.0"
