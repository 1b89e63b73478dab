import math

import numpy as np
import pytest

import helpers_oracle as oracle
from eprqkd import qcore
from eprqkd.qcore import (
    DensityMatrix,
    PureState,
    Unitary,
    apply,
    apply_bilateral,
    cnot_gate,
    epr_phi_plus,
    fidelity,
    make_state,
    measure,
    measure_probabilities,
    partial_trace,
    pauli_gates,
    permute_wires,
    purity,
    random_density,
    random_state,
    random_unitary,
    rotation_gate,
    substream,
    tensor,
    to_density,
    trace_distance,
)

RNG = np.random.default_rng  # test-local randomness only


# ---------------------------------------------------------------------------
# construction

def test_make_state_single_wire():
    st = make_state(["c"], 0)
    assert np.allclose(st.amplitudes, [1, 0])


def test_make_state_two_wires_index_three():
    st = make_state(["a", "b"], 3)
    assert np.allclose(st.amplitudes, [0, 0, 0, 1])


def test_make_state_bit_ordering_wire0_is_msb():
    st = make_state(["a", "b", "c"], 6)  # |110>
    expected = np.zeros(8)
    expected[6] = 1
    assert np.allclose(st.amplitudes, expected)


def test_make_state_index_out_of_range():
    with pytest.raises(ValueError):
        make_state(["a"], 2)
    with pytest.raises(ValueError):
        make_state(["a", "b"], -1)


def test_epr_amplitudes():
    st = epr_phi_plus("A", "B")
    assert np.allclose(st.amplitudes, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])


def test_epr_duplicate_labels_rejected():
    with pytest.raises(ValueError):
        epr_phi_plus("A", "A")


def test_epr_single_wire_measurement_is_unbiased():
    rng = RNG(7)
    counts = 0
    trials = 10_000
    for _ in range(trials):
        outcome, _ = measure(epr_phi_plus("A", "B"), "A", rng)
        counts += outcome
    assert abs(counts / trials - 0.5) < 0.02


def test_epr_self_fidelity():
    rho = to_density(epr_phi_plus("A", "B"))
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)


def test_pure_state_rejects_bad_norm_and_length():
    with pytest.raises(ValueError):
        PureState(("a",), np.array([1.0, 1.0], dtype=complex))
    with pytest.raises(ValueError):
        PureState(("a", "b"), np.array([1.0, 0.0], dtype=complex))


# ---------------------------------------------------------------------------
# gates

def test_rotation_zero_is_identity():
    assert np.allclose(rotation_gate(0.0).matrix, np.eye(2))


def test_rotation_half_pi_on_zero_ket():
    st = apply(rotation_gate(math.pi / 2), make_state(["q"], 0), ["q"])
    assert np.allclose(st.amplitudes, [0, -1], atol=1e-12)


def test_rotation_rejects_non_finite():
    with pytest.raises(ValueError):
        rotation_gate(float("nan"))
    with pytest.raises(ValueError):
        rotation_gate(float("inf"))


def test_bilateral_rotation_leaves_key_invariant():
    key = epr_phi_plus("A", "B")
    rotated = apply_bilateral(rotation_gate(0.3), key, ("A", "B"))
    assert np.max(np.abs(rotated.amplitudes - key.amplitudes)) < 1e-12


@pytest.mark.parametrize("theta", np.linspace(0, 2 * math.pi, 32, endpoint=False))
def test_bilateral_invariance_grid(theta):
    key = epr_phi_plus("A", "B")
    rotated = apply_bilateral(rotation_gate(float(theta)), key, ("A", "B"))
    assert trace_distance(to_density(rotated), to_density(key)) < 1e-10


def test_cnot_truth_table():
    cn = cnot_gate()
    assert np.allclose(apply(cn, make_state("ab", 2), "ab").amplitudes,
                       make_state("ab", 3).amplitudes)
    assert np.allclose(apply(cn, make_state("ab", 0), "ab").amplitudes,
                       make_state("ab", 0).amplitudes)


def test_cnot_on_key_and_carrier_builds_ghz():
    st = tensor(epr_phi_plus("A", "B"), make_state(["c"], 0))
    st = apply(cnot_gate(), st, ["A", "c"])
    expected = np.zeros(8)
    expected[0] = expected[7] = 1 / math.sqrt(2)
    assert np.allclose(st.amplitudes, expected, atol=1e-12)


def test_cnot_involution():
    rng = RNG(3)
    st = random_state(("x", "y", "z"), rng)
    back = apply(cnot_gate(), apply(cnot_gate(), st, ["x", "z"]), ["x", "z"])
    assert np.max(np.abs(back.amplitudes - st.amplitudes)) < 1e-12


def test_pauli_actions():
    _, s1, s2, s3 = pauli_gates()
    zero, one = make_state(["q"], 0), make_state(["q"], 1)
    assert np.allclose(apply(s1, zero, "q").amplitudes, one.amplitudes)
    assert np.allclose(apply(s3, one, "q").amplitudes, -one.amplitudes)
    assert np.allclose(apply(s2, zero, "q").amplitudes, one.amplitudes)


def test_real_sigma2_is_global_phase_of_standard_pauli_y():
    _, _, s2, _ = pauli_gates()
    standard_y = np.array([[0, -1j], [1j, 0]])
    # equal up to one global phase, so identical as a density-matrix map
    ratio = s2.matrix[1, 0] / standard_y[1, 0]
    assert np.allclose(s2.matrix, ratio * standard_y)
    rho = random_density(("q",), RNG(5))
    a = s2.matrix @ rho.matrix @ s2.matrix.conj().T
    b = standard_y @ rho.matrix @ standard_y.conj().T
    assert np.max(np.abs(a - b)) < 1e-12


# ---------------------------------------------------------------------------
# apply

def test_apply_identity():
    st = random_state(("a", "b"), RNG(1))
    out = apply(Unitary(1, np.eye(2)), st, ["b"])
    assert np.allclose(out.amplitudes, st.amplitudes)


def test_apply_decode_restores_product_state():
    ghz = tensor(epr_phi_plus("A", "B"), make_state(["c"], 0))
    ghz = apply(cnot_gate(), ghz, ["A", "c"])
    decoded = apply(cnot_gate(), ghz, ["B", "c"])
    expected = tensor(epr_phi_plus("A", "B"), make_state(["c"], 0))
    assert np.max(np.abs(decoded.amplitudes - expected.amplitudes)) < 1e-12


def test_apply_flip_on_carrier_flips_decoded_bit():
    _, s1, _, _ = pauli_gates()
    for bit in (0, 1):
        st = tensor(epr_phi_plus("A", "B"), make_state(["c"], bit))
        st = apply(cnot_gate(), st, ["A", "c"])
        st = apply(s1, st, ["c"])
        st = apply(cnot_gate(), st, ["B", "c"])
        p0, p1 = measure_probabilities(st, "c")
        assert (p1 if bit == 0 else p0) == pytest.approx(1.0, abs=1e-12)


def test_apply_errors():
    st = epr_phi_plus("A", "B")
    with pytest.raises(ValueError):
        apply(cnot_gate(), st, ["A"])          # arity mismatch
    with pytest.raises(ValueError):
        apply(cnot_gate(), st, ["A", "X"])     # unknown wire
    with pytest.raises(ValueError):
        apply(cnot_gate(), st, ["A", "A"])     # duplicate targets


def test_apply_agrees_with_kron_oracle_on_random_configurations():
    rng = RNG(42)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        wires = tuple(f"w{i}" for i in range(n))
        st = random_state(wires, rng)
        k = int(rng.integers(1, min(n, 2) + 1))
        targets = [wires[i] for i in rng.choice(n, size=k, replace=False)]
        u = random_unitary(2 ** k, rng)
        got = apply(u, st, targets).amplitudes
        if k == 1:
            full = oracle.embed1(u.matrix, wires.index(targets[0]), n)
        else:
            # build the 2-wire embedding by summing basis blocks
            i0, i1 = wires.index(targets[0]), wires.index(targets[1])
            full = np.zeros((2 ** n, 2 ** n), dtype=complex)
            for r in (0, 1):
                for c in (0, 1):
                    for r2 in (0, 1):
                        for c2 in (0, 1):
                            coeff = u.matrix[(r << 1) | r2, (c << 1) | c2]
                            op1 = np.outer(oracle.ket([r]), oracle.ket([c]).conj())
                            op2 = np.outer(oracle.ket([r2]), oracle.ket([c2]).conj())
                            term = [np.eye(2, dtype=complex)] * n
                            term[i0], term[i1] = op1, op2
                            full += coeff * oracle.kron_all(*term)
        expected = full @ st.amplitudes
        assert np.max(np.abs(got - expected)) < 1e-10


def test_norm_preserved_by_random_unitaries():
    rng = RNG(11)
    for _ in range(50):
        st = random_state(("a", "b", "c"), rng)
        u = random_unitary(4, rng)
        out = apply(u, st, ["a", "c"])
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# measurement

def test_measure_eigenstate_is_deterministic():
    rng = RNG(0)
    for _ in range(5):
        outcome, post = measure(make_state(["q"], 1), "q", rng)
        assert outcome == 1
        assert np.allclose(post.amplitudes, [0, 1])


def test_measure_product_carrier_leaves_state_unchanged():
    rng = RNG(0)
    st = tensor(epr_phi_plus("A", "B"), make_state(["c"], 0))
    outcome, post = measure(st, "c", rng)
    assert outcome == 0
    assert np.max(np.abs(post.amplitudes - st.amplitudes)) < 1e-12


def test_measure_outcomes_on_key_are_perfectly_correlated():
    rng = RNG(9)
    for _ in range(300):
        a, post = measure(epr_phi_plus("A", "B"), "A", rng)
        b, _ = measure(post, "B", rng)
        assert a == b


def test_measure_collapse_renormalizes():
    rng = RNG(2)
    st = random_state(("x", "y"), rng)
    _, post = measure(st, "x", rng)
    assert abs(np.linalg.norm(post.amplitudes) - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# density matrices and metrics

def test_to_density_basics():
    rho = to_density(make_state(["q"], 0))
    assert np.allclose(rho.matrix, [[1, 0], [0, 0]])
    key = to_density(epr_phi_plus("A", "B"))
    vals = np.linalg.eigvalsh(key.matrix)
    assert vals[-1] == pytest.approx(1.0, abs=1e-12)
    assert purity(key) == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_of_key_is_maximally_mixed():
    rho = to_density(epr_phi_plus("A", "B"))
    reduced = partial_trace(rho, ["A"])
    assert np.max(np.abs(reduced.matrix - np.eye(2) / 2)) < 1e-12


def test_partial_trace_product_state():
    rng = RNG(21)
    a = random_state(("a1", "a2"), rng)
    b = random_state(("b1",), rng)
    joint = to_density(tensor(a, b))
    reduced = partial_trace(joint, ["a1", "a2"])
    assert np.max(np.abs(reduced.matrix - to_density(a).matrix)) < 1e-12


def test_partial_trace_of_ghz_carrier_is_mixed_for_either_bit():
    for bit in (0, 1):
        st = tensor(epr_phi_plus("A", "B"), make_state(["c"], bit))
        st = apply(cnot_gate(), st, ["A", "c"])
        reduced = partial_trace(to_density(st), ["c"])
        assert np.max(np.abs(reduced.matrix - np.eye(2) / 2)) < 1e-12


def test_partial_trace_agrees_with_index_oracle():
    rng = RNG(33)
    rho = random_density(("a", "b", "c"), rng)
    got = partial_trace(rho, ["a", "c"]).matrix
    expected = oracle.reduce_to(rho.matrix, [0, 2], 3)
    assert np.max(np.abs(got - expected)) < 1e-12


def test_partial_trace_preserves_trace_and_positivity():
    rng = RNG(5)
    for _ in range(1000):
        rho = random_density(("a", "b"), rng)
        reduced = partial_trace(rho, ["b"])
        assert np.trace(reduced.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(reduced.matrix)[0] > -1e-10


def test_partial_trace_errors():
    rho = to_density(epr_phi_plus("A", "B"))
    with pytest.raises(ValueError):
        partial_trace(rho, [])
    with pytest.raises(ValueError):
        partial_trace(rho, ["X"])


def test_trace_distance_basics():
    rho = random_density(("q",), RNG(1))
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
    zero = to_density(make_state(["q"], 0))
    one = to_density(make_state(["q"], 1))
    assert trace_distance(zero, one) == pytest.approx(2.0, abs=1e-12)


def test_trace_distance_symmetry_and_triangle():
    rng = RNG(17)
    for _ in range(40):
        a, b, c = (random_density(("x", "y"), rng) for _ in range(3))
        assert trace_distance(a, b) == pytest.approx(trace_distance(b, a), abs=1e-10)
        assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-10


def test_trace_distance_contracts_under_partial_trace():
    rng = RNG(19)
    for _ in range(40):
        a = random_density(("x", "y"), rng)
        b = random_density(("x", "y"), rng)
        full = trace_distance(a, b)
        reduced = trace_distance(partial_trace(a, ["x"]), partial_trace(b, ["x"]))
        assert reduced <= full + 1e-10


def test_trace_distance_mixture_bound():
    rng = RNG(23)
    ideal = to_density(epr_phi_plus("A", "B"))
    eps = 0.04
    for _ in range(20):
        rho1 = random_density(("A", "B"), rng)
        mixed = DensityMatrix(("A", "B"), (1 - eps) * ideal.matrix + eps * rho1.matrix)
        assert trace_distance(ideal, mixed) <= 2 * math.sqrt(eps) + 1e-12


def test_metric_wire_set_mismatch():
    a = to_density(make_state(["q"], 0))
    b = to_density(make_state(["r"], 0))
    with pytest.raises(ValueError):
        trace_distance(a, b)
    with pytest.raises(ValueError):
        fidelity(a, b)


def test_fidelity_basics():
    rho = random_density(("x", "y"), RNG(2))
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)
    zero = to_density(make_state(["q"], 0))
    one = to_density(make_state(["q"], 1))
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_pure_state_reduces_to_overlap():
    rng = RNG(13)
    for _ in range(30):
        psi = random_state(("x", "y"), rng)
        rho = random_density(("x", "y"), rng)
        direct = float(np.real(psi.amplitudes.conj() @ rho.matrix @ psi.amplitudes))
        assert fidelity(to_density(psi), rho) == pytest.approx(direct, abs=1e-10)


def test_fidelity_mixture_bound():
    rng = RNG(29)
    ideal = to_density(epr_phi_plus("A", "B"))
    eps = 0.04
    for _ in range(20):
        rho1 = random_density(("A", "B"), rng)
        mixed = DensityMatrix(("A", "B"), (1 - eps) * ideal.matrix + eps * rho1.matrix)
        assert fidelity(ideal, mixed) >= 1 - eps - 1e-12


def test_metrics_handle_permuted_wire_order():
    rng = RNG(31)
    rho = random_density(("x", "y"), rng)
    flipped = qcore.permute_density(rho, ("y", "x"))
    assert trace_distance(rho, flipped) == pytest.approx(
        trace_distance(rho, rho) if False else trace_distance(flipped, rho), abs=1e-12
    )
    assert fidelity(rho, flipped) == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# random unitaries and streams

def test_random_unitary_is_unitary():
    u = random_unitary(8, RNG(4))
    assert np.max(np.abs(u.matrix @ u.matrix.conj().T - np.eye(8))) < 1e-10
    assert np.allclose(np.linalg.norm(u.matrix, axis=0), 1.0, atol=1e-10)


def test_random_unitary_deterministic_per_seed():
    a = random_unitary(4, RNG(123))
    b = random_unitary(4, RNG(123))
    assert np.array_equal(a.matrix, b.matrix)


def test_random_unitary_rejects_bad_dimension():
    with pytest.raises(ValueError):
        random_unitary(3, RNG(0))
    with pytest.raises(ValueError):
        random_unitary(0, RNG(0))


def test_substream_is_deterministic_and_purpose_separated():
    a = substream(42, 1, 7).random(4)
    b = substream(42, 1, 7).random(4)
    c = substream(42, 2, 7).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# ---------------------------------------------------------------------------
# wire bookkeeping

def test_permute_wires_round_trip():
    rng = RNG(8)
    st = random_state(("a", "b", "c"), rng)
    swapped = permute_wires(st, ("c", "a", "b"))
    back = permute_wires(swapped, ("a", "b", "c"))
    assert np.max(np.abs(back.amplitudes - st.amplitudes)) < 1e-12
    assert swapped.wires == ("c", "a", "b")


def test_discard_wire_keeps_remaining_order():
    # wire in the middle and at the end, against explicit construction
    rng = RNG(14)
    rest = random_state(("a", "b", "c"), rng)
    for position, wires in [(0, ("z", "a", "b", "c")), (2, ("a", "b", "z", "c")),
                            (3, ("a", "b", "c", "z"))]:
        marker = make_state(["z"], 1)
        joint = tensor(rest, marker) if position == 3 else None
        if joint is None:
            joint = permute_wires(tensor(rest, marker), wires)
        dropped = qcore.discard_wire(joint, "z")
        assert dropped.wires == ("a", "b", "c")
        assert np.max(np.abs(dropped.amplitudes - rest.amplitudes)) < 1e-12


def test_discard_entangled_wire_rejected():
    with pytest.raises(ValueError):
        qcore.discard_wire(epr_phi_plus("A", "B"), "A")


def test_tensor_rejects_shared_labels():
    with pytest.raises(ValueError):
        tensor(make_state(["q"], 0), make_state(["q"], 1))
