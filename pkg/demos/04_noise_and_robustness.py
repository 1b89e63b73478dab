"""Channel noise, its exact classification, and the degraded-key bounds.

A noisy channel hits the carrier with one of three error operators. Each
lands in a clean row of a two-column table: does the decoded bit flip, and
does the key pick up a phase flip? Bit flips are correctable with a
classical repetition code; phase flips silently corrupt the key, which is
where the epsilon-degradation analysis takes over.
"""
import math

import numpy as np

from eprqkd import (
    DegradedKeyModel, PauliChannel, Scenario, degrade_key, epr_phi_plus,
    epr_phi_minus, exact_round_statistics, fidelity, random_density,
    to_density, trace_distance, KEY_A, KEY_B,
)

print("== forced-error classification (exact, single round) ==")
ideal = to_density(epr_phi_plus(KEY_A, KEY_B))
flipped = to_density(epr_phi_minus(KEY_A, KEY_B))
for name, channel in [("sigma1", PauliChannel(1, 0, 0)),
                      ("sigma2", PauliChannel(0, 1, 0)),
                      ("sigma3", PauliChannel(0, 0, 1))]:
    err, key_after = exact_round_statistics(Scenario(noise=channel, seed=0))
    key_kind = "phase-flipped" if fidelity(flipped, key_after) > 0.999 else "intact"
    print(f"{name}: bit flip probability {err:.1f}, key {key_kind}")

mixed = PauliChannel(0.1, 0.05, 0.2)
err, _ = exact_round_statistics(Scenario(noise=mixed, seed=0))
print(f"mixed channel (p1,p2,p3)=(0.1,0.05,0.2): exact per-transit error {err:.3f} = p1+p2")

print()
print("== a slightly corrupted key stays serviceable ==")
rng = np.random.default_rng(4)
for epsilon in (0.01, 0.04, 0.09):
    worst_err = 0.0
    worst_dist = 0.0
    worst_fid = 1.0
    for k in range(20):
        model = DegradedKeyModel(epsilon, random_density((KEY_A, KEY_B), rng))
        mixed_key = degrade_key(model)
        worst_dist = max(worst_dist, trace_distance(ideal, mixed_key))
        worst_fid = min(worst_fid, fidelity(ideal, mixed_key))
        err, _ = exact_round_statistics(
            Scenario(key_epsilon=epsilon, contaminant_seed=100 + k, seed=0))
        worst_err = max(worst_err, err)
    print(f"eps={epsilon:.2f}: worst distance {worst_dist:.3f} (bound {2*math.sqrt(epsilon):.3f}),"
          f" worst fidelity {worst_fid:.4f} (bound {1-epsilon:.2f}),"
          f" worst round error {worst_err:.4f} (bound {epsilon:.2f})")

print()
print("== the exact map and the sampled channel agree ==")
from eprqkd import channel_as_density_map, apply_pauli_channel, make_state, substream

rngs = substream(seed=55, purpose=1)
psi = make_state(("q",), 0)
accum = np.zeros((2, 2), dtype=complex)
draws = 20_000
for _ in range(draws):
    out, _ = apply_pauli_channel(psi, mixed, rngs, wire="q")
    accum += np.outer(out.amplitudes, out.amplitudes.conj())
exact_map = channel_as_density_map(mixed, to_density(psi))
print("empirical average of", draws, "sampled transits vs the exact map:")
print(np.round(accum.real / draws, 3), "vs", np.round(exact_map.matrix.real, 3))
