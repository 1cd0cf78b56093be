"""Decoy-state security analysis for photon-pair (two-photon DFS) QKD.

The package covers the full pipeline: pair-number statistics of a
phase-randomized down-conversion source (:mod:`pairdecoy.source`), an exact
sparse Fock-state replay of the two-pair splitting attack
(:mod:`pairdecoy.optics`), the lossy-fiber detection model with its closed
forms (:mod:`pairdecoy.channel`), decoy-state bounds on the single-pair
yield and error rate (:mod:`pairdecoy.bounds`), and the GLLP key-rate lower
bound with secure-distance search (:mod:`pairdecoy.keyrate`).  The
:mod:`pairdecoy.cli` module exposes batch sweeps and verification reports.
"""

from .bounds import (
    BoundUnavailableError,
    DecoyBounds,
    DecoyProtocol,
    DegenerateIntensitiesError,
    NO_DECOY,
    THREE_INTENSITY,
    TWO_INTENSITY,
    e1_upper_three,
    e1_upper_two,
    extract_bounds,
    s0_upper_two,
    s1_lower_none,
    s1_lower_three,
    s1_lower_two,
)
from .channel import (
    AS_PRINTED,
    DEFAULT_VARIANT,
    SQUARED_DARK,
    ChannelParams,
    ObservedStatistics,
    YieldTable,
    cross_validate,
    error_yield_n,
    observed_closed_form,
    observed_series,
    vacuum_yield,
    yield_n,
    yield_table,
)
from .discrepancy import DiscrepancyEntry, format_entries, known_reference_deviations
from .keyrate import (
    KeyRatePoint,
    OptimizeResult,
    ProtocolConstants,
    RateValue,
    SecureDistanceResult,
    binary_entropy,
    evaluate_point,
    gllp_rate,
    max_secure_distance,
    optimize_intensities,
    pns_limit_distance,
)
from .optics import (
    AttackTrace,
    CODES,
    DERIVED_STAGE_PROBABILITIES,
    DomainCoverageError,
    FockState,
    Isometry,
    ModeLabel,
    apply_beamsplitter,
    apply_isometry_and_project,
    attack_first_isometry,
    attack_second_isometry,
    creation_monomial,
    encoded_pair_state,
    factorized_reference_state,
    fidelity,
    intermediate_basis_states,
    postselect_one_per_mode,
    run_full_attack,
    single_pair_state,
    split_pair_matrix,
    superpose,
    tensor_product,
)
from .source import (
    DEFAULT_TAIL_BOUND,
    PairDistribution,
    build_distribution,
    pair_probability,
)

__version__ = "0.1.0"
