"""A first walk through the protocol.

Two parties share the entangled pair (|00> + |11>)/sqrt(2). Each round they
rotate their halves by the same angle, the sender CNOTs her half onto a
fresh carrier qubit prepared as the message bit, ships the carrier, and the
receiver CNOTs his half onto it and measures. Nothing in between: the bit
arrives intact and the key comes back unchanged, ready for the next round.
"""
import numpy as np

from eprqkd import (
    CARRIER, KEY_A, KEY_B,
    alice_encode, bilateral_rotate, bob_decode, epr_phi_plus, init_key,
    partial_trace, fidelity, run_round, substream, to_density,
)

rng = substream(seed=2024, purpose=1)

key = init_key(rng)
print("fresh key fidelity with the ideal pair:",
      fidelity(to_density(epr_phi_plus(KEY_A, KEY_B)), to_density(key.joint)))

# one round, spelled out
theta = np.pi / 4
key = bilateral_rotate(key, theta)
key = alice_encode(key, bit=1)
print("joint state is a GHZ-type superposition:", np.round(key.joint.amplitudes, 3))

# what a wiretap would see mid-flight: the maximally mixed state, for either bit
carrier_view = partial_trace(to_density(key.joint), (CARRIER,))
print("carrier state in transit:\n", np.round(carrier_view.matrix.real, 3))

received, key = bob_decode(key, rng)
print("sent 1, received", received)

# reuse the same key for a thousand rounds; it never degrades
for i in range(1000):
    record, key = run_round(key, theta, i % 2, None, rng)
    assert record.received_bit == record.sent_bit
print("after 1000 reused rounds, key fidelity:",
      fidelity(to_density(epr_phi_plus(KEY_A, KEY_B)),
               to_density(key.joint)))
print("rounds used:", key.rounds_used)
