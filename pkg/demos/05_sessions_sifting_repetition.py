"""Whole sessions: sifting verdicts, key reuse, and the repetition code.

A session runs many rounds on one key, then publicly compares a random
fifth of the bits. Clean sessions pass and keep the key; an intercepting
eavesdropper pushes the compared bits to a 50% mismatch and the session
aborts, discarding everything. Bit-flip noise below the abort threshold is
instead corrected by sending every logical bit three times.
"""
from eprqkd import (
    AttackStrategy, PauliChannel, Scenario, SiftingPolicy,
    repetition_logical_error_rate, run_scenario, session,
)

print("== clean session ==")
result = session(Scenario(rounds=100, seed=61))
print(f"verdict={result.verdict}  disclosed={len(result.disclosed_indices)}"
      f"  delivered={len(result.delivered_key)}  key kept: {result.key is not None}")
print(f"key fidelity after reuse: {result.key_fidelity_final:.12f}")

print()
print("== session under interception ==")
result = session(Scenario(
    attack=AttackStrategy(kind="intercept_resend"), rounds=100, seed=62,
))
print(f"verdict={result.verdict}  observed qber on disclosed bits={result.observed_qber:.2f}")
print(f"restart required: {result.restart_required}, delivered key length: "
      f"{len(result.delivered_key)}")

print()
print("== repetition code against bit-flip noise ==")
p = 0.1
for n in (1, 3, 5):
    stats = run_scenario(Scenario(
        noise=PauliChannel(p, 0, 0), rounds=6000 * n, seed=63, repetition_n=n,
        sifting=SiftingPolicy(0.2, 0.5),  # tolerate the raw rate; coding fixes it
    ))
    measured = stats.qber if n == 1 else stats.logical_qber
    predicted = repetition_logical_error_rate(p, n)
    print(f"n={n}: logical error rate {measured:.4f} (binomial prediction {predicted:.4f})")
print("each extra repetition pair buys roughly a factor-three error reduction at p=0.1")
