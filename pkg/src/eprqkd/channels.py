"""Transit noise and key-degradation models.

The transit channel applies one of {identity, bit flip, bit+phase flip,
phase flip} to the carrier with fixed probabilities. Monte Carlo sessions
sample one operator per transit; exact analyses apply the full Kraus sum.
Key degradation mixes the ideal entangled key with an arbitrary
contaminant state for robustness analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from .qcore import DensityMatrix, PureState, RandomStream, Unitary
from .wires import CARRIER, KEY_A, KEY_B

PAULI_NAMES = ("I", "sigma1", "sigma2", "sigma3")


@dataclass(frozen=True)
class PauliChannel:
    """Per-transit probabilities of sigma1, sigma2, sigma3 errors."""

    p1: float = 0.0
    p2: float = 0.0
    p3: float = 0.0

    def __post_init__(self):
        ps = (self.p1, self.p2, self.p3)
        if any(p < 0 for p in ps) or sum(ps) > 1 + 1e-12:
            raise ValueError(f"invalid channel probabilities {ps}")

    @property
    def p0(self) -> float:
        return max(0.0, 1.0 - self.p1 - self.p2 - self.p3)

    @property
    def is_trivial(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.p3 == 0.0

    def kraus_operators(self) -> list[np.ndarray]:
        """sqrt(p_mu) * sigma_mu, completeness sum M^dag M = I."""
        gates = qcore.pauli_gates()
        weights = (self.p0, self.p1, self.p2, self.p3)
        return [math.sqrt(w) * g.matrix for w, g in zip(weights, gates)]

    def flip_probability(self) -> float:
        """Probability the carrier bit arrives flipped (sigma1 or sigma2)."""
        return self.p1 + self.p2


@dataclass(frozen=True)
class DegradedKeyModel:
    """Key state (1 - epsilon) * ideal + epsilon * contaminant."""

    epsilon: float
    contaminant: DensityMatrix

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.contaminant.n_wires != 2:
            raise ValueError("contaminant must be a two-wire state")


def apply_pauli_channel(
    state: PureState, channel: PauliChannel, rng: RandomStream, wire: str = CARRIER
) -> tuple[PureState, str]:
    """Sample one Pauli and apply it to the transit wire.

    The name of the applied operator is returned for test instrumentation;
    protocol logic must not branch on it.
    """
    if channel.is_trivial:
        return state, "I"
    weights = (channel.p0, channel.p1, channel.p2, channel.p3)
    u = rng.random()
    acc = 0.0
    draw = int(np.argmax(weights))  # fallback for float round-off at the top end
    for k, w in enumerate(weights):
        acc += w
        if u < acc:
            draw = k
            break
    if draw == 0:
        return state, "I"
    gate = qcore.pauli_gates()[draw]
    return qcore.apply(gate, state, [wire]), PAULI_NAMES[draw]


def channel_as_density_map(channel: PauliChannel, rho: DensityMatrix) -> DensityMatrix:
    """Exact Kraus-sum action on a single-qubit state."""
    if rho.n_wires != 1:
        raise ValueError("density map input must be a single qubit")
    out = np.zeros((2, 2), dtype=complex)
    for m in channel.kraus_operators():
        out += m @ rho.matrix @ m.conj().T
    return DensityMatrix(rho.wires, out)


def degrade_key(model: DegradedKeyModel) -> DensityMatrix:
    """Mix the ideal key with the contaminant; result wires (keyA, keyB).

    The contaminant's own wire labels are ignored: its first wire is taken
    as the sender's half positionally.
    """
    ideal = qcore.to_density(qcore.epr_phi_plus(KEY_A, KEY_B))
    mixed = (1.0 - model.epsilon) * ideal.matrix + model.epsilon * model.contaminant.matrix
    return DensityMatrix(ideal.wires, mixed)


def failure_probability_bound(model: DegradedKeyModel) -> float:
    """Upper bound on the per-round error probability of a degraded key.

    The round map is linear and error-free on the ideal component, so the
    error probability is at most epsilon; the exact value is checked by
    the density-matrix round oracle in the test suite.
    """
    return model.epsilon


def kraus_unitary_dilation(ops) -> Unitary:
    """Unitary on (target + environment) realizing a Kraus map.

    The environment starts in |0>; column blocks stack the operators, and
    the remaining columns are completed to an orthonormal basis. Requires
    the standard completeness condition sum M^dag M = I.
    """
    ops = [np.asarray(m, dtype=complex) for m in ops]
    if not ops:
        raise ValueError("need at least one Kraus operator")
    d = ops[0].shape[0]
    if any(m.shape != (d, d) for m in ops):
        raise ValueError("all Kraus operators must share one square shape")
    total = sum(m.conj().T @ m for m in ops)
    if np.max(np.abs(total - np.eye(d))) > 1e-10:
        raise ValueError("Kraus operators do not satisfy sum M^dag M = I")
    env_dim = 1
    while env_dim < len(ops):
        env_dim *= 2
    dim = d * env_dim
    block = np.zeros((dim, d), dtype=complex)
    # basis ordering (target, env): row index = target_index * env_dim + env_index
    for k, m in enumerate(ops):
        rows = np.arange(d) * env_dim + k
        block[rows, :] = m
    # block columns are the images of |j> (x) |0>_env; orthonormal by completeness.
    # They live at column positions j * env_dim; fill the rest with an
    # orthonormal complement of their span.
    q, _ = np.linalg.qr(np.concatenate([block, np.eye(dim, dtype=complex)], axis=1))
    complement = q[:, d:dim]
    full = np.zeros((dim, dim), dtype=complex)
    full[:, np.arange(d) * env_dim] = block
    rest = [c for c in range(dim) if c % env_dim != 0]
    full[:, rest] = complement
    arity = round(math.log2(dim))
    return Unitary(arity, full)
