"""Monte Carlo experiment runner, exact oracles, and statistics.

Every sampled estimate produced here has an exact companion: closed-form
error rates where the attack admits one (``oracle_qber``) and a full
density-matrix evolution of a protocol round everywhere
(``exact_round_statistics``). Scenarios are plain values; identical
scenarios produce identical statistics, independent of execution order,
because all randomness comes from counter-based substreams of the seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import protocol, qcore
from .attacks import AttackStrategy
from .channels import DegradedKeyModel, PauliChannel, degrade_key
from .protocol import (
    PURPOSE_REPLICATE,
    PURPOSE_ROUND,
    PURPOSE_SWEEP,
    SiftingPolicy,
    bit_plan,
    make_transit_hook,
    run_round,
)
from .qcore import DensityMatrix, Unitary
from .wires import CARRIER, INDICATOR, KEY_A, KEY_B, PROBE

Z_95 = 1.959963984540054

SWEEP_PARAMETERS = ("theta", "p1", "p2", "p3", "epsilon")


class OracleUnavailable(ValueError):
    """Raised when no closed-form error rate exists for an attack."""


@dataclass(frozen=True)
class Scenario:
    """Complete description of one experiment."""

    theta: float = math.pi / 4
    rounds: int = 1000
    attack: AttackStrategy = AttackStrategy()
    noise: PauliChannel = PauliChannel()
    sifting: SiftingPolicy = SiftingPolicy()
    repetition_n: int = 1
    seed: int = 0
    bit_source: str | tuple[int, ...] = "random"
    key_epsilon: float = 0.0
    contaminant_seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.repetition_n < 1 or self.repetition_n % 2 == 0:
            raise ValueError("repetition_n must be an odd integer >= 1")
        if not 0.0 <= self.key_epsilon <= 1.0:
            raise ValueError("key_epsilon must be in [0, 1]")
        if self.bit_source != "random":
            bits = tuple(self.bit_source)
            if not bits or any(b not in (0, 1) for b in bits):
                raise ValueError("bit_source must be 'random' or a nonempty 0/1 sequence")
            object.__setattr__(self, "bit_source", bits)


@dataclass(frozen=True)
class RunStats:
    """Aggregate statistics of one scenario run."""

    qber: float
    qber_ci: tuple[float, float]
    key_fidelity_final: float
    eve_accuracy: Optional[float]
    eve_accuracy_ci: Optional[tuple[float, float]]
    eve_mutual_info_bits: Optional[float]
    verdict: str
    rounds_executed: int
    logical_qber: Optional[float] = None

    def __post_init__(self):
        rates = [self.qber, self.key_fidelity_final]
        if self.eve_accuracy is not None:
            rates.append(self.eve_accuracy)
        if self.logical_qber is not None:
            rates.append(self.logical_qber)
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError("rates must lie in [0, 1]")
        for point, ci in ((self.qber, self.qber_ci), (self.eve_accuracy, self.eve_accuracy_ci)):
            if ci is not None and point is not None and not ci[0] <= point <= ci[1]:
                raise ValueError("confidence interval does not bracket the estimate")


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval; well behaved at rates 0 and 1."""
    if trials < 1:
        raise ValueError("need at least one trial")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # clamp to [0,1] and force bracketing of p against float round-off
    return min(max(0.0, center - half), p), max(min(1.0, center + half), p)


def mutual_information_bits(pairs) -> float:
    """Plug-in mutual information (bits) from empirical (x, y) bit pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one pair")
    n = len(pairs)
    joint = np.zeros((2, 2))
    for x, y in pairs:
        joint[x, y] += 1
    joint /= n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    mi = 0.0
    for x in (0, 1):
        for y in (0, 1):
            if joint[x, y] > 0:
                mi += joint[x, y] * math.log2(joint[x, y] / (px[x] * py[y]))
    return max(0.0, mi)


def _derived_seed(seed: int, purpose: int, index: int) -> int:
    return qcore.mix_seed(seed, purpose, index)


def _logical_qber(records, repetition_n: int) -> Optional[float]:
    if repetition_n <= 1:
        return None
    blocks = len(records) // repetition_n
    if blocks == 0:
        return None
    errors = 0
    for j in range(blocks):
        chunk = records[j * repetition_n:(j + 1) * repetition_n]
        decoded = repetition_decode([r.received_bit for r in chunk])
        if decoded != chunk[0].sent_bit:
            errors += 1
    return errors / blocks


def run_scenario(scenario: Scenario) -> RunStats:
    """Execute the session and reduce its records to aggregate statistics."""
    result = protocol.session(scenario)
    records = result.records
    n = len(records)
    wrong = sum(1 for r in records if r.received_bit != r.sent_bit)
    qber = wrong / n
    guesses = [(r.eve_guess, r.sent_bit) for r in records if r.eve_guess is not None]
    if guesses:
        hits = sum(1 for g, b in guesses if g == b)
        accuracy = hits / len(guesses)
        accuracy_ci = wilson_interval(hits, len(guesses))
        mi = mutual_information_bits(guesses)
    else:
        accuracy, accuracy_ci, mi = None, None, None
    return RunStats(
        qber=qber,
        qber_ci=wilson_interval(wrong, n),
        key_fidelity_final=result.key_fidelity_final,
        eve_accuracy=accuracy,
        eve_accuracy_ci=accuracy_ci,
        eve_mutual_info_bits=mi,
        verdict=result.verdict,
        rounds_executed=result.rounds_executed,
        logical_qber=_logical_qber(records, scenario.repetition_n),
    )


def replicate_round_qber_mc(
    scenario: Scenario, round_index: int, probes: Optional[int] = None
) -> tuple[float, tuple[float, float]]:
    """Error frequency of one specific round over many fresh-key replicas.

    Used where a single session cannot estimate a per-round quantity:
    attacks whose entanglement carries state across rounds make later
    rounds statistically different from round ``round_index``.
    """
    probes = scenario.rounds if probes is None else probes
    if probes < 1:
        raise ValueError("need at least one probe")
    errors = 0
    for j in range(probes):
        seed_j = _derived_seed(scenario.seed, PURPOSE_REPLICATE, j)
        probe_scenario = replace(scenario, seed=seed_j, rounds=round_index + 1)
        key = protocol._initial_key(probe_scenario)
        attacker = probe_scenario.attack.make_attacker()
        hook = make_transit_hook(attacker, probe_scenario.noise)
        bits = bit_plan(probe_scenario)
        record = None
        for i in range(round_index + 1):
            rng_i = qcore.substream(seed_j, PURPOSE_ROUND, i)
            record, key = run_round(key, probe_scenario.theta, bits[i], hook, rng_i)
        if record.received_bit != record.sent_bit:
            errors += 1
    return errors / probes, wilson_interval(errors, probes)


def second_round_qber_mc(
    scenario: Scenario, probes: Optional[int] = None
) -> tuple[float, tuple[float, float]]:
    """Monte Carlo estimate of the second-round error rate (fresh key per probe)."""
    return replicate_round_qber_mc(scenario, 1, probes)


# ---------------------------------------------------------------------------
# closed-form and exact oracles

def oracle_qber(attack, theta: float, noise: Optional[PauliChannel] = None) -> float:
    """Closed-form error rate for attacks that admit one.

    Attack and channel flips are independent, so they compose by XOR:
    total = a + n - 2 a n. For the entangling attack the value is the
    second-round rate (the first round is error-free while the probe
    entangles).
    """
    if isinstance(attack, str):
        attack = AttackStrategy(kind=attack)
    if attack.kind == "none":
        rate = 0.0
    elif attack.kind == "intercept_resend":
        rate = 0.5 if attack.resend == "random" else 0.0
    elif attack.kind == "entangle_cnot":
        rate = 2.0 * (math.cos(theta) * math.sin(theta)) ** 2
    else:
        raise OracleUnavailable(f"no closed form for attack kind {attack.kind!r}")
    flip = noise.flip_probability() if noise is not None else 0.0
    return rate + flip - 2.0 * rate * flip


def _ideal_key_density() -> DensityMatrix:
    return qcore.to_density(qcore.epr_phi_plus(KEY_A, KEY_B))


def _scenario_key_density(scenario: Scenario) -> DensityMatrix:
    if scenario.key_epsilon > 0.0:
        contaminant = qcore.random_density(
            (KEY_A, KEY_B), np.random.default_rng(scenario.contaminant_seed)
        )
        return degrade_key(DegradedKeyModel(scenario.key_epsilon, contaminant))
    return _ideal_key_density()


def _entangled_setup(scenario: Scenario, rho_key: DensityMatrix) -> DensityMatrix:
    """Exact state of (key, probe) after one full round with the entangler."""
    rot = qcore.rotation_gate(scenario.theta)
    cnot = qcore.cnot_gate()
    out = None
    for b1 in (0, 1):
        rho = qcore.density_apply(rot, rho_key, [KEY_A])
        rho = qcore.density_apply(rot, rho, [KEY_B])
        rho = qcore.density_tensor(rho, qcore.to_density(qcore.make_state((CARRIER,), b1)))
        rho = qcore.density_apply(cnot, rho, [KEY_A, CARRIER])
        rho = qcore.density_tensor(
            rho, qcore.to_density(qcore.make_state((PROBE,), scenario.attack.probe_init))
        )
        rho = qcore.density_apply(cnot, rho, [CARRIER, PROBE])
        rho = qcore.density_apply(cnot, rho, [KEY_B, CARRIER])
        rho = qcore.density_dephase(rho, CARRIER)
        rho = qcore.partial_trace(rho, (KEY_A, KEY_B, PROBE))
        if scenario.attack.entangle_rounds == "every":
            rho = qcore.density_dephase(rho, PROBE)
        out = rho.matrix if out is None else out + rho.matrix
    return DensityMatrix((KEY_A, KEY_B, PROBE), out / 2.0)


def exact_round_statistics(
    scenario: Scenario, initial_key: Optional[DensityMatrix] = None
) -> tuple[float, DensityMatrix]:
    """Evolve one round's full density matrix; no sampling anywhere.

    Returns the exact error probability (averaged over the sent bit) and
    the post-round reduced key state. For the entangling attack the round
    analyzed is the one after the probe got entangled, which is where its
    characteristic error rate first appears.
    """
    kind = scenario.attack.kind
    rho_key = initial_key if initial_key is not None else _scenario_key_density(scenario)
    attack_u: Optional[Unitary] = None
    if kind == "entangle_cnot":
        rho_start = _entangled_setup(scenario, rho_key)
    elif kind == "general_unitary":
        attack_u = scenario.attack._unitary()
        rho_start = qcore.density_tensor(
            rho_key, qcore.to_density(qcore.make_state((PROBE,), 0))
        )
    else:
        rho_start = rho_key

    rot = qcore.rotation_gate(scenario.theta)
    cnot = qcore.cnot_gate()
    kraus = None if scenario.noise.is_trivial else scenario.noise.kraus_operators()
    errs = []
    keys = []
    for b in (0, 1):
        rho = qcore.density_apply(rot, rho_start, [KEY_A])
        rho = qcore.density_apply(rot, rho, [KEY_B])
        rho = qcore.density_tensor(rho, qcore.to_density(qcore.make_state((CARRIER,), b)))
        rho = qcore.density_apply(cnot, rho, [KEY_A, CARRIER])
        if kind == "intercept_resend":
            rho = qcore.density_dephase(rho, CARRIER)
            if scenario.attack.resend == "random":
                half = DensityMatrix((CARRIER,), np.eye(2, dtype=complex) / 2)
                rho = qcore.density_replace_wire(rho, CARRIER, half)
        elif kind == "entangle_cnot" and scenario.attack.entangle_rounds == "every":
            rho = qcore.density_apply(cnot, rho, [CARRIER, PROBE])
            rho = qcore.density_dephase(rho, PROBE)
        elif kind == "general_unitary":
            rho = qcore.density_tensor(rho, qcore.to_density(qcore.make_state((INDICATOR,), 0)))
            targets = (CARRIER, PROBE, INDICATOR) if attack_u.arity == 3 else (CARRIER, INDICATOR)
            rho = qcore.density_apply(attack_u, rho, targets)
            rho = qcore.density_dephase(rho, INDICATOR)
        if kraus is not None:
            rho = qcore.density_apply_kraus(kraus, rho, [CARRIER])
        rho = qcore.density_apply(cnot, rho, [KEY_B, CARRIER])
        errs.append(qcore.density_measure_probabilities(rho, CARRIER)[1 - b])
        rho = qcore.density_dephase(rho, CARRIER)
        keys.append(qcore.partial_trace(rho, (KEY_A, KEY_B)))
    key_after = DensityMatrix((KEY_A, KEY_B), (keys[0].matrix + keys[1].matrix) / 2.0)
    return float(np.mean(errs)), key_after


# ---------------------------------------------------------------------------
# repetition (duplication) code

def repetition_encode(bit: int, n: int) -> list[int]:
    """Repeat the bit n times (n odd), one protocol transmission each."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    if n < 1 or n % 2 == 0:
        raise ValueError("repetition length must be an odd integer >= 1")
    return [bit] * n


def repetition_decode(bits) -> int:
    """Majority vote over an odd number of received bits."""
    bits = list(bits)
    if not bits or len(bits) % 2 == 0:
        raise ValueError("majority vote needs an odd number of bits")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    return 1 if 2 * sum(bits) > len(bits) else 0


def repetition_logical_error_rate(p: float, n: int) -> float:
    """Exact logical error rate of majority decoding under flip probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("flip probability must be in [0, 1]")
    if n < 1 or n % 2 == 0:
        raise ValueError("repetition length must be an odd integer >= 1")
    return sum(
        math.comb(n, k) * p ** k * (1 - p) ** (n - k) for k in range(n // 2 + 1, n + 1)
    )


# ---------------------------------------------------------------------------
# parameter sweeps

@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    mc_qber: float
    ci_low: float
    ci_high: float
    exact_qber: float
    oracle_qber: Optional[float]


def _scenario_at(parameter: str, value: float, base: Scenario, seed: int) -> Scenario:
    if parameter == "theta":
        return replace(base, theta=value, seed=seed)
    if parameter in ("p1", "p2", "p3"):
        return replace(base, noise=replace(base.noise, **{parameter: value}), seed=seed)
    if parameter == "epsilon":
        return replace(base, key_epsilon=value, seed=seed)
    raise ValueError(f"unknown sweep parameter {parameter!r}; "
                     f"supported: {', '.join(SWEEP_PARAMETERS)}")


def _session_rounds_are_iid(s: Scenario) -> bool:
    """True when every session round has the same error statistics.

    Cross-round attack entanglement, key-corrupting noise (sigma2/sigma3
    turn the key into its phase-flipped twin, which errors after the next
    rotation) and degraded keys all make later rounds differ from a fresh
    one; those cases are estimated on fresh-key replicas instead.
    """
    return (
        not s.attack.has_cross_round_state()
        and s.noise.p2 == 0.0
        and s.noise.p3 == 0.0
        and s.key_epsilon == 0.0
    )


def sweep(parameter: str, grid, base: Scenario) -> list[SweepRow]:
    """Run the Monte Carlo estimate and both oracles across a grid.

    Every row's three columns measure the same per-round quantity: full
    sessions where rounds are i.i.d., fresh-key replicas of the defining
    round otherwise (the round after entangling for the entangle attack,
    the first round everywhere else).
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"unknown sweep parameter {parameter!r}; "
                         f"supported: {', '.join(SWEEP_PARAMETERS)}")
    rows: list[SweepRow] = []
    for idx, value in enumerate(grid):
        seed = _derived_seed(base.seed, PURPOSE_SWEEP, idx)
        s = _scenario_at(parameter, float(value), base, seed)
        if _session_rounds_are_iid(s):
            stats = run_scenario(s)
            mc, ci = stats.qber, stats.qber_ci
        else:
            round_index = 1 if s.attack.kind == "entangle_cnot" else 0
            mc, ci = replicate_round_qber_mc(s, round_index)
        exact, _ = exact_round_statistics(s)
        try:
            oracle = oracle_qber(s.attack, s.theta, s.noise)
        except OracleUnavailable:
            oracle = None
        if parameter == "epsilon":
            # no closed form for a mixed key; the model's bound stands in
            oracle = None
        rows.append(SweepRow(parameter, float(value), mc, ci[0], ci[1], exact, oracle))
    return rows
