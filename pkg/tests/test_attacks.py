import math

import numpy as np
import pytest

import helpers_oracle as oracle
from eprqkd import protocol, qcore
from eprqkd.attacks import (
    AttackStrategy,
    EntangleCnotAttacker,
    entangle_cnot,
    eve_conditional_states,
    general_unitary_attack,
    intercept_resend,
    verify_no_perfect_attack,
)
from eprqkd.harness import Scenario, exact_round_statistics, run_scenario
from eprqkd.wires import CARRIER, INDICATOR, KEY_A, KEY_B, PROBE

RNG = np.random.default_rng


def transit_state(bit=0, theta=0.0):
    key = protocol.init_key(RNG(0))
    key = protocol.bilateral_rotate(key, theta)
    key = protocol.alice_encode(key, bit)
    return key.joint


def decode(state, rng):
    state = qcore.apply(qcore.cnot_gate(), state, [KEY_B, CARRIER])
    outcome, state = qcore.measure(state, CARRIER, rng)
    return outcome, qcore.discard_wire(state, CARRIER)


# ---------------------------------------------------------------------------
# strategy descriptions

def test_strategy_validation():
    with pytest.raises(ValueError):
        AttackStrategy(kind="nope")
    with pytest.raises(ValueError):
        AttackStrategy(kind="intercept_resend", resend="loud")
    with pytest.raises(ValueError):
        AttackStrategy(kind="general_unitary")  # needs a unitary source
    with pytest.raises(ValueError):
        AttackStrategy(kind="general_unitary", unitary_seed=1,
                       unitary_matrix=((1, 0), (0, 1)))


def test_cross_round_state_flag():
    assert not AttackStrategy(kind="none").has_cross_round_state()
    assert not AttackStrategy(kind="intercept_resend").has_cross_round_state()
    assert AttackStrategy(kind="entangle_cnot").has_cross_round_state()
    assert AttackStrategy(kind="general_unitary", unitary_seed=0).has_cross_round_state()


# ---------------------------------------------------------------------------
# intercept-resend

def test_intercept_measured_resend_causes_no_error():
    # the computational-basis collapse is consistent with both CNOTs, so
    # faithfully resending the measured particle is harmless
    rng = RNG(1)
    for theta in (0.0, math.pi / 8, math.pi / 4):
        for bit in (0, 1):
            st, guess = intercept_resend(transit_state(bit, theta), rng, resend="measured")
            outcome, _ = decode(st, rng)
            assert outcome == bit
            assert guess in (0, 1)


def test_intercept_random_resend_randomizes_bob():
    # exact route: replacing the carrier makes Bob's bit uniform, error 1/2
    for theta in (0.0, math.pi / 4):
        s = Scenario(theta=theta, attack=AttackStrategy(kind="intercept_resend"), seed=0)
        exact, _ = exact_round_statistics(s)
        assert exact == pytest.approx(0.5, abs=1e-12)
    s = Scenario(attack=AttackStrategy(kind="intercept_resend", resend="measured"), seed=0)
    exact, _ = exact_round_statistics(s)
    assert exact == pytest.approx(0.0, abs=1e-12)


def test_intercept_guess_is_uninformative():
    stats = run_scenario(
        Scenario(attack=AttackStrategy(kind="intercept_resend"), rounds=4000, seed=2)
    )
    assert abs(stats.eve_accuracy - 0.5) < 0.025
    assert stats.eve_mutual_info_bits < 0.01


def test_intercept_measured_resend_is_caught_from_round_two():
    # the round-one collapse breaks the key; the rotation exposes it later,
    # so even the "harmless" resend drives a session to 1/2 and an abort
    strategy = AttackStrategy(kind="intercept_resend", resend="measured")
    assert strategy.has_cross_round_state()
    result = protocol.session(Scenario(attack=strategy, rounds=2000, seed=2))
    assert result.records[0].received_bit == result.records[0].sent_bit
    later = result.records[1:]
    rate = sum(r.received_bit != r.sent_bit for r in later) / len(later)
    assert abs(rate - 0.5) < 0.04
    assert result.verdict == "abort"


# ---------------------------------------------------------------------------
# entangle attack

def test_entangle_round_one_is_error_free_and_builds_ghz():
    rng = RNG(3)
    st = entangle_cnot(transit_state(bit=0, theta=0.0), probe_init=0)
    outcome, after = decode(st, rng)
    assert outcome == 0
    ghz = np.zeros(8, dtype=complex)
    ghz[0] = ghz[7] = 1 / math.sqrt(2)
    assert after.wires == (KEY_A, KEY_B, PROBE)
    assert np.max(np.abs(after.amplitudes - ghz)) < 1e-12


def test_entangle_probe_init_one_builds_other_branch():
    rng = RNG(4)
    st = entangle_cnot(transit_state(bit=0, theta=0.0), probe_init=1)
    outcome, after = decode(st, rng)
    assert outcome == 0
    expected = np.zeros(8, dtype=complex)
    expected[0b001] = expected[0b110] = 1 / math.sqrt(2)
    assert np.max(np.abs(after.amplitudes - expected)) < 1e-12


@pytest.mark.parametrize("theta", [0.3, math.pi / 8, math.pi / 4])
def test_rotated_entangled_key_matches_printed_expansion(theta):
    rng = RNG(5)
    st = entangle_cnot(transit_state(bit=0, theta=0.0), probe_init=0)
    _, entangled = decode(st, rng)
    key = protocol.QuantumKey(joint=entangled, pair_id=0, rounds_used=1)
    rotated = protocol.bilateral_rotate(key, theta)
    assert np.max(np.abs(rotated.joint.amplitudes - oracle.printed_rotated_ghz(theta))) < 1e-12


@pytest.mark.parametrize(
    "theta,expected",
    [(0.0, 0.0), (math.pi / 8, 0.25), (math.pi / 6, 0.375), (math.pi / 4, 0.5)],
)
def test_entangle_second_round_error_rate_grid(theta, expected):
    s = Scenario(theta=theta, attack=AttackStrategy(kind="entangle_cnot"), seed=0)
    exact, _ = exact_round_statistics(s)
    assert exact == pytest.approx(expected, abs=1e-12)


def test_entangle_double_probe_attach_rejected():
    st = entangle_cnot(transit_state(), probe_init=0)
    with pytest.raises(ValueError):
        entangle_cnot(st, probe_init=0)


def test_entangle_mask_resolution_via_disclosed_rounds():
    records = [
        protocol.RoundRecord(sent_bit=b, received_bit=b, eve_guess=b ^ 1)
        for b in (0, 1, 1, 0, 1)
    ]
    attacker = EntangleCnotAttacker()
    fixed = attacker.finalize(records, disclosed_indices=(0, 2))
    assert all(r.eve_guess == r.sent_bit for r in fixed)


# ---------------------------------------------------------------------------
# general unitary attack

def test_identity_unitary_changes_nothing():
    rng = RNG(6)
    u = qcore.identity_gate(2)
    for bit in (0, 1):
        st, guess = general_unitary_attack(transit_state(bit, math.pi / 4), u, rng)
        assert guess == 0
        outcome, _ = decode(st, rng)
        assert outcome == bit


def test_cnot_to_indicator_matches_entangle_attack_statistics():
    # copying the carrier onto the indicator is the entangle attack with the
    # indicator as probe: round-one guesses are fair coins, uncorrelated
    rng = RNG(7)
    cn = qcore.cnot_gate()
    agree = 0
    trials = 2000
    for k in range(trials):
        bit = k % 2
        st, guess = general_unitary_attack(transit_state(bit, math.pi / 4), cn, rng)
        outcome, _ = decode(st, rng)
        assert outcome == bit  # no disturbance in the entangling round
        agree += int(guess == bit)
    assert abs(agree / trials - 0.5) < 0.04


def test_unitary_arity_validation():
    with pytest.raises(ValueError):
        general_unitary_attack(transit_state(), qcore.identity_gate(1), RNG(0))


# ---------------------------------------------------------------------------
# conditional-state analysis

@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4])
def test_conditional_states_pristine_key(theta):
    r0, r1 = eve_conditional_states(theta)
    expected = np.kron(np.eye(2) / 2, np.diag([1.0, 0.0]))
    assert r0.wires == (CARRIER, INDICATOR)
    assert np.max(np.abs(r0.matrix - expected)) < 1e-12
    assert np.max(np.abs(r1.matrix - expected)) < 1e-12
    assert qcore.trace_distance(r0, r1) < 1e-12


def test_conditional_states_with_prior_entanglement_at_quarter_pi():
    rng = RNG(8)
    for _ in range(10):
        psi0 = qcore.random_state(("p",), rng).amplitudes
        psi1 = qcore.random_state(("p",), rng).amplitudes
        r0, r1 = eve_conditional_states(math.pi / 4, prior=(psi0, psi1))
        assert qcore.trace_distance(r0, r1) < 1e-10
        assert np.trace(r0.matrix).real == pytest.approx(1.0, abs=1e-12)
        # product form: (I/2) x (mean probe state) x |0><0|
        probe_mix = (np.outer(psi0, psi0.conj()) + np.outer(psi1, psi1.conj())) / 2
        expected = np.kron(np.kron(np.eye(2) / 2, probe_mix), np.diag([1.0, 0.0]))
        assert np.max(np.abs(r0.matrix - expected)) < 1e-12


def test_conditional_states_leak_without_the_recommended_angle():
    # prior entanglement plus any angle away from pi/4 is distinguishable,
    # which is exactly why the protocol pins the rotation angle
    psi0 = np.array([1.0, 0.0], dtype=complex)
    psi1 = np.array([0.0, 1.0], dtype=complex)
    theta = math.pi / 8
    r0, r1 = eve_conditional_states(theta, prior=(psi0, psi1))
    gap = qcore.trace_distance(r0, r1)
    assert gap == pytest.approx(2 * abs(math.cos(2 * theta)), abs=1e-10)


def test_conditional_states_reject_unnormalized_prior():
    with pytest.raises(ValueError):
        eve_conditional_states(math.pi / 4, prior=(np.array([2.0, 0]), np.array([1.0, 0])))


# ---------------------------------------------------------------------------
# no-perfect-attack search

def test_no_perfect_attack_pristine():
    report = verify_no_perfect_attack(200, RNG(9), entangled_prior=False)
    assert report.max_trace_distance < 1e-9
    assert report.max_accuracy_deviation < 1e-9
    assert report.passed


def test_no_perfect_attack_with_entangled_prior():
    report = verify_no_perfect_attack(200, RNG(10), theta=math.pi / 4, entangled_prior=True)
    assert report.max_trace_distance < 1e-9
    assert report.max_accuracy_deviation < 1e-9
    assert report.passed
    assert report.structured_family_size == 3


def test_no_perfect_attack_flags_a_distinguishing_setup():
    # sanity of the failure path: away from pi/4 with prior entanglement the
    # report must notice the leak rather than rubber-stamp it
    report = verify_no_perfect_attack(20, RNG(11), theta=math.pi / 8, entangled_prior=True)
    assert report.max_trace_distance > 1e-3
    assert not report.passed


def test_no_perfect_attack_requires_samples():
    with pytest.raises(ValueError):
        verify_no_perfect_attack(0, RNG(0))


# ---------------------------------------------------------------------------
# zero-leakage across implemented strategies

def test_interception_view_is_bit_independent_for_every_strategy():
    # carrier (plus any fresh Eve wires) at interception time, exactly
    for theta in (0.0, math.pi / 4):
        views = []
        for bit in (0, 1):
            st = transit_state(bit, theta)
            views.append(qcore.partial_trace(qcore.to_density(st), (CARRIER,)))
        assert qcore.trace_distance(views[0], views[1]) < 1e-9
        probed = []
        for bit in (0, 1):
            st = entangle_cnot(transit_state(bit, theta), probe_init=0)
            probed.append(qcore.partial_trace(qcore.to_density(st), (CARRIER, PROBE)))
        assert qcore.trace_distance(probed[0], probed[1]) < 1e-9


def test_theta_zero_vulnerability_session():
    scenario = Scenario(
        theta=0.0, attack=AttackStrategy(kind="entangle_cnot"), rounds=400, seed=12
    )
    result = protocol.session(scenario)
    assert all(r.received_bit == r.sent_bit for r in result.records)
    later = [r for r in result.records[1:]]
    assert all(r.eve_guess == r.sent_bit for r in later)
    assert result.verdict == "pass"  # sifting cannot see the eavesdropper
