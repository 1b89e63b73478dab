"""Desk-scale exact simulator for an EPR-keyed channel-encrypting QKD protocol.

A reusable entangled pair encrypts single-qubit transmissions of classical
bits. The package provides the exact state machinery (``qcore``), the
honest protocol (``protocol``), eavesdropping strategies and their
leakage analysis (``attacks``), transit noise and key degradation
(``channels``), Monte Carlo experiments with exact oracles (``harness``),
a fixed-seed claim suite (``verify``) and a CLI (``cli``).
"""

from .attacks import (
    AttackStrategy,
    NoPerfectAttackReport,
    entangle_cnot,
    eve_conditional_states,
    general_unitary_attack,
    intercept_resend,
    verify_no_perfect_attack,
)
from .channels import (
    DegradedKeyModel,
    PauliChannel,
    apply_pauli_channel,
    channel_as_density_map,
    degrade_key,
    failure_probability_bound,
    kraus_unitary_dilation,
)
from .harness import (
    OracleUnavailable,
    RunStats,
    Scenario,
    SweepRow,
    exact_round_statistics,
    mutual_information_bits,
    oracle_qber,
    repetition_decode,
    repetition_encode,
    repetition_logical_error_rate,
    run_scenario,
    second_round_qber_mc,
    sweep,
    wilson_interval,
)
from .protocol import (
    QuantumKey,
    RoundRecord,
    SessionResult,
    SiftingPolicy,
    SiftResult,
    alice_encode,
    bilateral_rotate,
    bob_decode,
    init_key,
    run_round,
    session,
    sift,
)
from .qcore import (
    DensityMatrix,
    PureState,
    RandomStream,
    Unitary,
    apply,
    apply_bilateral,
    cnot_gate,
    epr_phi_minus,
    epr_phi_plus,
    fidelity,
    make_state,
    measure,
    partial_trace,
    pauli_gates,
    random_density,
    random_state,
    random_unitary,
    rotation_gate,
    substream,
    to_density,
    trace_distance,
)
from .verify import ClaimResult, render_claims, run_claims, run_verify
from .wires import CARRIER, INDICATOR, KEY_A, KEY_B, PROBE

__version__ = "0.1.0"
