"""Quantum channels from finite weighted Kraus families: ergodic-theoretic
analysis, process simulation, and Lyapunov/entropy estimation.

The hot sampling loops run on a compiled extension when available; see
:mod:`channel_ergodics._kernels` (``KERNEL_BACKEND`` tells which one is
active in this process).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .channel import (
    CompletePositivityCheck,
    KrausAtom,
    KrausMeasure,
    StochasticityCheck,
    apply_channel,
    apply_dual,
    channel_from_dict,
    channel_to_dict,
    choi_matrix,
    complete_positivity_check,
    dual_superoperator_matrix,
    is_stochastic,
    load_channel,
    perturb,
    save_channel,
    superoperator_matrix,
    unvec,
    vec,
)
from .entropy import (
    EntropyReport,
    MarkovSpec,
    channel_entropy,
    classical_markov_entropy,
    entropy_lyapunov_report,
    load_markov_spec,
    markov_channel,
    markov_spec_from_dict,
    stationary_distribution,
)
from .errors import (
    DegenerateStepError,
    EnumerationBudgetError,
    InputValidationError,
    NotIrreducibleError,
    NotStochasticError,
    SpectralError,
)
from .linalg import (
    canonicalize,
    hermitize,
    hs_inner,
    hs_norm,
    proj_distance,
    projector_onto,
    singular_values,
    validate_density,
    validate_projector,
    wedge_norm,
)
from .lyapunov import (
    NEG_INFINITY,
    GapEstimate,
    LyapunovEstimate,
    OracleReport,
    TheoremBDiagnostic,
    estimate_exponents,
    gap_estimate,
    theorem_b_diagnostic,
    wedge_vs_qr_oracle,
)
from .purification import (
    PurificationScan,
    PurifiesResult,
    Wedge2Decay,
    YProcessReport,
    purification_scan,
    purifies_at_depth,
    wedge2_decay,
    y_process_diagnostic,
)
from .spectral import (
    InvariantSubspaceReport,
    IrreducibilityResult,
    SpectralData,
    TemporalMeanResult,
    fixed_point,
    is_irreducible,
    minimal_invariant_subspaces,
    normalize,
    spectral_data,
    temporal_mean,
    trace_positivity_cross_check,
)
from .trajectory import (
    SampleConfig,
    TrajectoryPath,
    dump_paths,
    empirical_barycenter,
    sample_quantum_trajectory,
    sample_word_process,
    sample_x_process,
    step_kernel,
)

__version__ = "0.1.0"
