"""Canonical wire labels shared across the package."""

KEY_A = "A"        # Alice's half of the entangled key
KEY_B = "B"        # Bob's half of the entangled key
CARRIER = "c"      # the qubit Alice sends each round
PROBE = "e"        # Eve's probe qubit
INDICATOR = "i"    # Eve's readout qubit in the general unitary attack
