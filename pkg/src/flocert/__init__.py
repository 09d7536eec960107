"""Fermionic Gaussian-state machinery, FLO simulation and convex-Gaussian
certification."""

from .antisym import (
    BlockDiagonalForm,
    block_diagonalize,
    pfaffian,
    pfaffian_minor,
    random_special_orthogonal,
    so_from_blocks,
)
from .clifford import (
    DensityOperator,
    EvenOperator,
    assemble_even,
    density_operator,
    even_masks,
    expand_even,
    majorana_matrix,
    majorana_operators,
    maximally_mixed,
    parity_operator,
)
from .convex import (
    A8Decomposition,
    BallDecomposition,
    ancilla_a8,
    ball_decomposition,
    decompose_a8,
    depolarized_a8,
    max_overlap_search,
    phi_state,
    witness_value,
    witness_verdict,
)
from .extension import (
    ExtensionCertificate,
    SdpInstance,
    build_basis,
    build_extension_sdp,
    export_sdpa,
    real_embed,
    solve_feasibility,
    verify_extension,
)
from .gaussian import (
    GaussianPureState,
    correlation_matrix,
    dephase,
    flo_unitary,
    gaussian_from_correlation,
    gaussian_symmetric_projector,
    is_gaussian,
    lambda_operator,
    lambda_sandwich_norm,
    random_pure_gaussian,
    wick_expectation,
)
from .simulator import (
    Braid,
    FloCircuit,
    GaussianEnsemble,
    InjectAncilla,
    MeasureMode,
    Rotate,
    apply_rotation,
    braid_rotation,
    exact_distribution,
    inject_ancilla,
    measure_mode,
    run,
    vacuum_correlation,
)

__version__ = "0.1.0"
