"""Eavesdropping strategies and their exact information-gain analysis.

Three attack families are modeled, each touching only the carrier in
transit plus Eve-owned wires:

* intercept-resend: measure the carrier, forward either the measured
  particle or a freshly prepared one;
* entangle: CNOT the carrier onto a probe qubit so the probe ends up
  entangled with the shared key;
* general unitary: an arbitrary unitary on (carrier, probe, indicator),
  with the indicator measured as Eve's readout. Any CPTP attack reduces
  to this form through a unitary dilation.

Strategy objects are immutable scenario-level descriptions; a session
instantiates a stateful attacker from them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import qcore
from .qcore import DensityMatrix, PureState, RandomStream, Unitary
from .wires import CARRIER, INDICATOR, KEY_A, KEY_B, PROBE

ATTACK_KINDS = ("none", "intercept_resend", "entangle_cnot", "general_unitary")
RESEND_MODES = ("random", "measured")
ENTANGLE_MODES = ("every", "first_only")


@dataclass(frozen=True)
class AttackStrategy:
    """Immutable description of what Eve does each round."""

    kind: str = "none"
    resend: str = "random"            # intercept_resend: what goes back on the channel
    probe_init: int = 0               # entangle_cnot: probe preparation
    entangle_rounds: str = "every"    # entangle_cnot: re-entangle per round or once
    unitary_seed: int | None = None   # general_unitary: Haar-random source
    unitary_matrix: tuple | None = None  # general_unitary: explicit matrix rows

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.resend not in RESEND_MODES:
            raise ValueError(f"unknown resend mode {self.resend!r}")
        if self.probe_init not in (0, 1):
            raise ValueError("probe_init must be 0 or 1")
        if self.entangle_rounds not in ENTANGLE_MODES:
            raise ValueError(f"unknown entangle_rounds {self.entangle_rounds!r}")
        if self.kind == "general_unitary":
            if (self.unitary_seed is None) == (self.unitary_matrix is None):
                raise ValueError(
                    "general_unitary needs exactly one of unitary_seed / unitary_matrix"
                )

    def has_cross_round_state(self) -> bool:
        """True when the attack leaves state behind that alters later rounds.

        Probe entanglement obviously does; so does the measured-resend
        intercept, whose carrier measurement collapses the shared key (the
        damage surfaces through the next round's rotation). The
        fresh-random resend randomizes the decoded bit unconditionally, so
        its error statistics are the same every round.
        """
        if self.kind == "intercept_resend":
            return self.resend == "measured"
        return self.kind in ("entangle_cnot", "general_unitary")

    def make_attacker(self):
        if self.kind == "none":
            return NoAttacker()
        if self.kind == "intercept_resend":
            return InterceptResendAttacker(self.resend)
        if self.kind == "entangle_cnot":
            return EntangleCnotAttacker(self.probe_init, self.entangle_rounds)
        u = self._unitary()
        return GeneralUnitaryAttacker(u)

    def _unitary(self) -> Unitary:
        if self.unitary_matrix is not None:
            m = np.array(self.unitary_matrix, dtype=complex)
            return Unitary(round(math.log2(m.shape[0])), m)
        return qcore.random_unitary(8, np.random.default_rng(self.unitary_seed))


# ---------------------------------------------------------------------------
# raw transit operations

def intercept_resend(
    state: PureState, rng: RandomStream, resend: str = "random"
) -> tuple[PureState, int]:
    """Measure the carrier in the computational basis and forward a qubit.

    ``resend="measured"`` forwards the post-measurement particle: the
    collapse is consistent with both encode/decode CNOTs, so the round it
    happens in decodes perfectly (and the outcome is pure noise to Eve).
    The collapse does break the shared key, which the next round's
    rotation turns into decode errors. ``resend="random"`` forwards a
    fresh uniformly random basis state, which scrambles the decoded bit
    immediately and unconditionally.
    """
    if resend not in RESEND_MODES:
        raise ValueError(f"unknown resend mode {resend!r}")
    outcome, state = qcore.measure(state, CARRIER, rng)
    if resend == "random":
        fresh = int(rng.integers(0, 2))
        state = qcore.tensor(qcore.discard_wire(state, CARRIER),
                             qcore.make_state((CARRIER,), fresh))
    return state, outcome


def entangle_cnot(state: PureState, probe_init: int, probe_wire: str = PROBE) -> PureState:
    """Attach a probe in |probe_init> and CNOT it from the carrier.

    The carrier's basis value is untouched, so the transmission stays
    error-free this round; the probe ends up entangled with the key.
    """
    if probe_init not in (0, 1):
        raise ValueError("probe_init must be 0 or 1")
    if probe_wire in state.wires:
        raise ValueError(f"probe wire {probe_wire!r} is already attached")
    state = qcore.tensor(state, qcore.make_state((probe_wire,), probe_init))
    return qcore.apply(qcore.cnot_gate(), state, [CARRIER, probe_wire])


def general_unitary_attack(
    state: PureState, u: Unitary, rng: RandomStream
) -> tuple[PureState, int]:
    """Apply Eve's unitary and read out her indicator qubit.

    ``u`` acts on (carrier, probe, indicator) when 3-qubit, or on
    (carrier, indicator) when 2-qubit. Probe and indicator wires are
    attached fresh if absent; the indicator starts in |0> and is measured
    and removed, its outcome being Eve's guess.
    """
    if u.arity not in (2, 3):
        raise ValueError("attack unitary must act on 2 or 3 qubits")
    if INDICATOR in state.wires:
        raise ValueError("indicator wire is already attached")
    if u.arity == 3 and PROBE not in state.wires:
        state = qcore.tensor(state, qcore.make_state((PROBE,), 0))
    state = qcore.tensor(state, qcore.make_state((INDICATOR,), 0))
    targets = (CARRIER, PROBE, INDICATOR) if u.arity == 3 else (CARRIER, INDICATOR)
    state = qcore.apply(u, state, targets)
    outcome, state = qcore.measure(state, INDICATOR, rng)
    return qcore.discard_wire(state, INDICATOR), outcome


# ---------------------------------------------------------------------------
# session-scoped attackers

class NoAttacker:
    def transit(self, state: PureState, rng: RandomStream):
        return state, None

    def finalize(self, records, disclosed_indices):
        return records


class InterceptResendAttacker:
    def __init__(self, resend: str = "random"):
        self.resend = resend

    def transit(self, state, rng):
        return intercept_resend(state, rng, self.resend)

    def finalize(self, records, disclosed_indices):
        return records


class EntangleCnotAttacker:
    """Entangles a probe with the key via the carrier.

    In ``every`` mode a fresh probe is entangled and measured each round;
    the raw outcomes equal Alice's bits XOR a key-branch mask, so after
    sifting Eve recovers the mask from the publicly compared rounds by
    majority vote. With the bilateral rotation disabled the mask is
    session-constant and her corrected guesses are exact; at the
    recommended angle the mask re-randomizes every round and the
    correction recovers nothing.

    ``first_only`` entangles once and leaves the probe coherent (no
    guesses); this is the textbook state the round-two error formula is
    derived from.
    """

    def __init__(self, probe_init: int = 0, mode: str = "every"):
        self.probe_init = probe_init
        self.mode = mode
        self._entangled_once = False

    def transit(self, state, rng):
        if self.mode == "first_only":
            if self._entangled_once:
                return state, None
            self._entangled_once = True
            return entangle_cnot(state, self.probe_init), None
        state = entangle_cnot(state, self.probe_init)
        # measuring the probe commutes with Bob's decode, so doing it in
        # transit leaves every observable statistic unchanged
        outcome, state = qcore.measure(state, PROBE, rng)
        return qcore.discard_wire(state, PROBE), outcome

    def finalize(self, records, disclosed_indices):
        votes = [
            records[i].eve_guess ^ records[i].sent_bit
            for i in disclosed_indices
            if records[i].eve_guess is not None
        ]
        if not votes:
            return records
        mask = 1 if 2 * sum(votes) > len(votes) else 0
        if mask == 0:
            return records
        return [
            replace(r, eve_guess=r.eve_guess ^ mask) if r.eve_guess is not None else r
            for r in records
        ]


class GeneralUnitaryAttacker:
    def __init__(self, u: Unitary):
        if u.arity not in (2, 3):
            raise ValueError("attack unitary must act on 2 or 3 qubits")
        self.u = u

    def transit(self, state, rng):
        return general_unitary_attack(state, self.u, rng)

    def finalize(self, records, disclosed_indices):
        return records


# ---------------------------------------------------------------------------
# exact leakage analysis

def eve_conditional_states(
    theta: float,
    prior: tuple[np.ndarray, np.ndarray] | None = None,
    probe_init: int = 0,
    include_probe: bool | None = None,
) -> tuple[DensityMatrix, DensityMatrix]:
    """Eve's exact view at interception time, conditioned on the sent bit.

    Returns the reduced states of (carrier[, probe], indicator) after the
    bilateral rotation and Alice's encode, for sent bit 0 and 1. ``prior``
    supplies probe states (psi0, psi1) already entangled with the key as
    (|00>|psi0> + |11>|psi1>)/sqrt(2); both must be normalized.
    """
    if include_probe is None:
        include_probe = prior is not None
    if prior is not None:
        psi0 = np.asarray(prior[0], dtype=complex)
        psi1 = np.asarray(prior[1], dtype=complex)
        if psi0.shape != (2,) or psi1.shape != (2,):
            raise ValueError("prior probe states must be single-qubit vectors")
        amps = (
            np.kron(np.array([1, 0, 0, 0], dtype=complex), psi0)
            + np.kron(np.array([0, 0, 0, 1], dtype=complex), psi1)
        ) / math.sqrt(2)
        joint = PureState((KEY_A, KEY_B, PROBE), amps)
    else:
        joint = qcore.epr_phi_plus(KEY_A, KEY_B)
        if include_probe:
            joint = qcore.tensor(joint, qcore.make_state((PROBE,), probe_init))
    rot = qcore.rotation_gate(theta)
    joint = qcore.apply_bilateral(rot, joint, (KEY_A, KEY_B))
    joint = qcore.tensor(joint, qcore.make_state((INDICATOR,), 0))
    keep = (CARRIER, PROBE, INDICATOR) if include_probe else (CARRIER, INDICATOR)
    out = []
    for bit in (0, 1):
        st = qcore.tensor(joint, qcore.make_state((CARRIER,), bit))
        st = qcore.apply(qcore.cnot_gate(), st, [KEY_A, CARRIER])
        out.append(qcore.partial_trace(qcore.to_density(st), keep))
    return out[0], out[1]


def _structured_cnot_family() -> list[Unitary]:
    """CNOT-built attack unitaries on (carrier, probe, indicator)."""
    wires = (CARRIER, PROBE, INDICATOR)
    cn = qcore.cnot_gate().matrix
    mats = [
        qcore.embedded_matrix(cn, wires, (CARRIER, INDICATOR)),
        qcore.embedded_matrix(cn, wires, (CARRIER, PROBE)),
    ]
    mats.append(mats[0] @ mats[1])
    return [Unitary(3, m) for m in mats]


@dataclass(frozen=True)
class NoPerfectAttackReport:
    samples: int
    structured_family_size: int
    max_trace_distance: float
    max_accuracy_deviation: float
    trace_distance_bound: float
    accuracy_deviation_bound: float
    passed: bool


def verify_no_perfect_attack(
    samples: int,
    rng: RandomStream,
    theta: float = math.pi / 4,
    entangled_prior: bool = True,
) -> NoPerfectAttackReport:
    """Search for a distinguishing attack unitary; report the best found.

    For ``samples`` Haar-random unitaries plus a structured CNOT family,
    computes exactly (via Born probabilities, no sampling noise) the trace
    distance between Eve's conditional views and her indicator accuracy.
    Both stay at their blind values for every unitary because the
    conditional inputs are identical operators.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    td_bound, acc_bound = 1e-9, 1e-9
    max_td = 0.0
    max_dev = 0.0
    structured = _structured_cnot_family()
    for k in range(samples + len(structured)):
        if entangled_prior:
            prior = (
                qcore.random_state(("p",), rng).amplitudes,
                qcore.random_state(("p",), rng).amplitudes,
            )
        else:
            prior = None
        rho0, rho1 = eve_conditional_states(theta, prior=prior, include_probe=True)
        u = structured[k - samples] if k >= samples else qcore.random_unitary(8, rng)
        targets = (CARRIER, PROBE, INDICATOR)
        out0 = qcore.density_apply(u, rho0, targets)
        out1 = qcore.density_apply(u, rho1, targets)
        max_td = max(max_td, qcore.trace_distance(out0, out1))
        p_i1_given_0 = qcore.density_measure_probabilities(out0, INDICATOR)[1]
        p_i1_given_1 = qcore.density_measure_probabilities(out1, INDICATOR)[1]
        accuracy = ((1.0 - p_i1_given_0) + p_i1_given_1) / 2.0
        max_dev = max(max_dev, abs(accuracy - 0.5))
    return NoPerfectAttackReport(
        samples=samples,
        structured_family_size=len(structured),
        max_trace_distance=max_td,
        max_accuracy_deviation=max_dev,
        trace_distance_bound=td_bound,
        accuracy_deviation_bound=acc_bound,
        passed=max_td < td_bound and max_dev < acc_bound,
    )
