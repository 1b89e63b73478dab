"""The honest-party state machine.

One round: both parties rotate their key halves by the same angle, Alice
prepares a carrier in |bit> and CNOTs her key half onto it, the carrier
crosses the channel (where interference may act), Bob CNOTs his key half
onto it and measures. With nothing in the channel the carrier comes back
to a product state, the measured bit equals the sent bit, and the key is
exactly what it was, ready for reuse.

A session runs many rounds on one reused key, then sifts: a random subset
of rounds is publicly compared, the observed error rate decides pass or
abort, and the disclosed bits are dropped from the delivered key.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, TYPE_CHECKING

import numpy as np

from . import qcore
from .attacks import NoAttacker
from .channels import DegradedKeyModel, PauliChannel, apply_pauli_channel, degrade_key
from .qcore import PureState, RandomStream
from .wires import CARRIER, KEY_A, KEY_B

if TYPE_CHECKING:  # pragma: no cover
    from .harness import Scenario

# substream purposes (counter-based; independent of draw order)
PURPOSE_ROUND = 1
PURPOSE_BITS = 2
PURPOSE_SIFT = 3
PURPOSE_INIT = 4
PURPOSE_REPLICATE = 5
PURPOSE_SWEEP = 6

TransitHook = Callable[[PureState, RandomStream], tuple[PureState, Optional[int]]]


@dataclass(frozen=True)
class QuantumKey:
    """The reusable entangled key, possibly dragging adversary wires along."""

    joint: PureState
    pair_id: int
    rounds_used: int = 0

    @property
    def has_carrier(self) -> bool:
        return CARRIER in self.joint.wires


@dataclass(frozen=True)
class RoundRecord:
    sent_bit: int
    received_bit: int
    eve_guess: Optional[int] = None
    disclosed: bool = False


@dataclass(frozen=True)
class SiftingPolicy:
    disclose_fraction: float = 0.2
    qber_abort_threshold: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.disclose_fraction < 1.0:
            raise ValueError("disclose_fraction must be in (0, 1)")
        if not 0.0 <= self.qber_abort_threshold <= 1.0:
            raise ValueError("qber_abort_threshold must be in [0, 1]")


@dataclass(frozen=True)
class SiftResult:
    verdict: str                    # "pass" | "abort"
    observed_qber: float
    delivered_key: tuple[int, ...]
    disclosed_indices: tuple[int, ...]
    records: tuple[RoundRecord, ...]


@dataclass(frozen=True)
class SessionResult:
    verdict: str
    observed_qber: float
    delivered_key: tuple[int, ...]
    disclosed_indices: tuple[int, ...]
    records: tuple[RoundRecord, ...]
    key: Optional[QuantumKey]       # retained for reuse on pass, None on abort
    key_fidelity_final: float
    restart_required: bool
    rounds_executed: int


def init_key(rng: RandomStream) -> QuantumKey:
    """Fresh shared key: the maximally entangled pair, never used."""
    pair_id = int(rng.integers(0, 2 ** 32))
    return QuantumKey(joint=qcore.epr_phi_plus(KEY_A, KEY_B), pair_id=pair_id)


@functools.lru_cache(maxsize=128)
def _bilateral_gate(theta: float) -> qcore.Unitary:
    rot = qcore.rotation_gate(theta).matrix
    return qcore.Unitary(2, np.kron(rot, rot))


def bilateral_rotate(key: QuantumKey, theta: float) -> QuantumKey:
    """Rotate both key halves by the same angle; the pristine key is invariant."""
    joint = qcore.apply(_bilateral_gate(theta), key.joint, [KEY_A, KEY_B])
    return replace(key, joint=joint)


def alice_encode(key: QuantumKey, bit: int) -> QuantumKey:
    """Prepare the carrier in |bit> and CNOT Alice's key half onto it."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    if key.has_carrier:
        raise ValueError("carrier wire is already attached")
    joint = qcore.tensor(key.joint, qcore.make_state((CARRIER,), bit))
    joint = qcore.apply(qcore.cnot_gate(), joint, [KEY_A, CARRIER])
    return replace(key, joint=joint)


def bob_decode(key: QuantumKey, rng: RandomStream) -> tuple[int, QuantumKey]:
    """CNOT Bob's key half onto the carrier, measure it, detach it."""
    if not key.has_carrier:
        raise ValueError("no carrier wire attached")
    joint = qcore.apply(qcore.cnot_gate(), key.joint, [KEY_B, CARRIER])
    outcome, joint = qcore.measure(joint, CARRIER, rng)
    joint = qcore.discard_wire(joint, CARRIER)
    return outcome, replace(key, joint=joint)


def run_round(
    key: QuantumKey,
    theta: float,
    bit: int,
    interference: Optional[TransitHook],
    rng: RandomStream,
) -> tuple[RoundRecord, QuantumKey]:
    """One full protocol round: rotate, encode, transit, decode.

    ``interference`` may transform the in-transit state but must touch only
    the carrier and adversary-owned wires, never the key halves directly.
    """
    key = bilateral_rotate(key, theta)
    key = alice_encode(key, bit)
    guess: Optional[int] = None
    if interference is not None:
        joint, guess = interference(key.joint, rng)
        if KEY_A not in joint.wires or KEY_B not in joint.wires or CARRIER not in joint.wires:
            raise ValueError("interference must not remove key or carrier wires")
        key = replace(key, joint=joint)
    received, key = bob_decode(key, rng)
    record = RoundRecord(sent_bit=bit, received_bit=received, eve_guess=guess)
    return record, replace(key, rounds_used=key.rounds_used + 1)


def sift(records, policy: SiftingPolicy, rng: RandomStream) -> SiftResult:
    """Publicly compare a random subset of rounds and decide pass/abort.

    Disclosed rounds are consumed: they never appear in the delivered key.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot sift an empty record list")
    n = len(records)
    k = max(1, math.ceil(policy.disclose_fraction * n))
    disclosed = tuple(int(i) for i in sorted(rng.choice(n, size=k, replace=False)))
    disclosed_set = set(disclosed)
    mismatches = sum(
        1 for i in disclosed if records[i].sent_bit != records[i].received_bit
    )
    observed_qber = mismatches / k
    verdict = "abort" if observed_qber > policy.qber_abort_threshold else "pass"
    delivered = tuple(
        r.received_bit for i, r in enumerate(records) if i not in disclosed_set
    )
    updated = tuple(
        replace(r, disclosed=(i in disclosed_set)) for i, r in enumerate(records)
    )
    return SiftResult(verdict, observed_qber, delivered, disclosed, updated)


def make_transit_hook(attacker, noise: PauliChannel) -> Optional[TransitHook]:
    """Compose the attacker's transit action with channel noise (attack first)."""
    if isinstance(attacker, NoAttacker) and noise.is_trivial:
        return None

    def hook(state: PureState, rng: RandomStream):
        state, guess = attacker.transit(state, rng)
        if not noise.is_trivial:
            state, _ = apply_pauli_channel(state, noise, rng)
        return state, guess

    return hook


def bit_plan(scenario) -> list[int]:
    """Physical bit per round; repetition repeats each logical bit n times."""
    n = scenario.rounds
    rep = scenario.repetition_n
    blocks = -(-n // rep)
    source = scenario.bit_source
    if source == "random":
        rng = qcore.substream(scenario.seed, PURPOSE_BITS)
        logical = [int(b) for b in rng.integers(0, 2, size=blocks)]
    else:
        logical = [int(source[j % len(source)]) for j in range(blocks)]
    return [logical[i // rep] for i in range(n)]


def _initial_key(scenario) -> QuantumKey:
    key = init_key(qcore.substream(scenario.seed, PURPOSE_INIT))
    eps = getattr(scenario, "key_epsilon", 0.0)
    if eps > 0.0:
        contaminant = qcore.random_density(
            (KEY_A, KEY_B), np.random.default_rng(scenario.contaminant_seed)
        )
        rho = degrade_key(DegradedKeyModel(eps, contaminant))
        vals, vecs = np.linalg.eigh(rho.matrix)
        probs = np.clip(vals, 0.0, None)
        probs = probs / probs.sum()
        pick_rng = qcore.substream(scenario.seed, PURPOSE_INIT, 1)
        idx = int(pick_rng.choice(len(probs), p=probs))
        vec = vecs[:, idx]
        joint = PureState((KEY_A, KEY_B), vec / np.linalg.norm(vec))
        key = replace(key, joint=joint)
    return key


def session(scenario: "Scenario") -> SessionResult:
    """Run a full session on one reused key, then sift and settle the verdict.

    The key survives into the result only on a pass; on abort it is
    discarded and the caller must restart with a fresh one. Diagnostics
    (records, fidelity, error rates) are kept either way.
    """
    key = _initial_key(scenario)
    attacker = scenario.attack.make_attacker()
    hook = make_transit_hook(attacker, scenario.noise)
    bits = bit_plan(scenario)
    records: list[RoundRecord] = []
    for i in range(scenario.rounds):
        rng_i = qcore.substream(scenario.seed, PURPOSE_ROUND, i)
        record, key = run_round(key, scenario.theta, bits[i], hook, rng_i)
        records.append(record)
    key_marginal = qcore.partial_trace(qcore.to_density(key.joint), (KEY_A, KEY_B))
    ideal = qcore.to_density(qcore.epr_phi_plus(KEY_A, KEY_B))
    key_fidelity = qcore.fidelity(ideal, key_marginal)
    sifted = sift(records, scenario.sifting, qcore.substream(scenario.seed, PURPOSE_SIFT))
    final_records = tuple(attacker.finalize(list(sifted.records), sifted.disclosed_indices))
    aborted = sifted.verdict == "abort"
    return SessionResult(
        verdict=sifted.verdict,
        observed_qber=sifted.observed_qber,
        delivered_key=() if aborted else sifted.delivered_key,
        disclosed_indices=sifted.disclosed_indices,
        records=final_records,
        key=None if aborted else key,
        key_fidelity_final=key_fidelity,
        restart_required=aborted,
        rounds_executed=scenario.rounds,
    )
