"""Exact small-system quantum mechanics on named wires.

States are dense complex vectors (pure) or matrices (density operators)
over an ordered tuple of wire labels. Wire 0 is the most significant bit
of the amplitude index, so ``make_state(("a","b","c"), 6)`` is |110>.

Everything here is immutable: operations return new values. All
randomness flows through an explicit ``numpy.random.Generator`` passed
by the caller; substreams for reproducible experiments come from
``substream``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

RandomStream = np.random.Generator

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10

# Probabilities below this are treated as exactly 0 (float noise floor);
# keeps noiseless runs deterministic for every seed.
PROB_CLAMP = 1e-14


def substream(seed: int, purpose: int, index: int = 0) -> RandomStream:
    """Counter-based derived stream: independent of draw order elsewhere.

    The key comes deterministically from the seed and the 256-bit counter
    is split into (purpose, index) words, so streams for different rounds
    or purposes never overlap.
    """
    bitgen = np.random.Philox(
        seed=seed & 0xFFFFFFFFFFFFFFFF, counter=[0, 0, purpose, index]
    )
    return np.random.Generator(bitgen)


def mix_seed(seed: int, purpose: int, index: int) -> int:
    """Derive a 62-bit child seed arithmetically (splitmix-style)."""
    x = (seed ^ (purpose * 0x9E3779B97F4A7C15) ^ (index * 0xBF58476D1CE4E5B9)) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (x ^ (x >> 31)) & 0x3FFFFFFFFFFFFFFF


def _trusted_state(wires: tuple[str, ...], amplitudes: np.ndarray) -> PureState:
    # internal fast path: amplitudes freshly computed by a norm-preserving
    # operation; skips re-validation and the defensive copy
    state = object.__new__(PureState)
    object.__setattr__(state, "wires", wires)
    object.__setattr__(state, "amplitudes", amplitudes)
    return state


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over named qubit wires."""

    wires: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        wires = tuple(self.wires)
        object.__setattr__(self, "wires", wires)
        if len(set(wires)) != len(wires):
            raise ValueError(f"duplicate wire labels: {wires}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** len(wires),):
            raise ValueError(
                f"amplitude vector has length {amps.shape}, expected {2 ** len(wires)}"
            )
        norm_sq = float(np.vdot(amps, amps).real)
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm_sq!r}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_wires(self) -> int:
        return len(self.wires)

    def axis(self, wire: str) -> int:
        try:
            return self.wires.index(wire)
        except ValueError:
            raise ValueError(f"unknown wire {wire!r}; state has {self.wires}") from None


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite operator on named wires."""

    wires: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        wires = tuple(self.wires)
        object.__setattr__(self, "wires", wires)
        if len(set(wires)) != len(wires):
            raise ValueError(f"duplicate wire labels: {wires}")
        dim = 2 ** len(wires)
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"matrix has shape {m.shape}, expected {(dim, dim)}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("matrix is not Hermitian")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"trace is {tr!r}, expected 1")
        if float(np.linalg.eigvalsh(m)[0]) < EIGENVALUE_FLOOR:
            raise ValueError("matrix has a significantly negative eigenvalue")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n_wires(self) -> int:
        return len(self.wires)

    def axis(self, wire: str) -> int:
        try:
            return self.wires.index(wire)
        except ValueError:
            raise ValueError(f"unknown wire {wire!r}; state has {self.wires}") from None


@dataclass(frozen=True)
class Unitary:
    """Square matrix acting on ``arity`` qubits, unitary within 1e-10."""

    arity: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = 2 ** self.arity
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"matrix has shape {m.shape}, expected {(dim, dim)}")
        if np.max(np.abs(m @ m.conj().T - np.eye(dim))) > UNITARY_TOL:
            raise ValueError("matrix is not unitary")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


# ---------------------------------------------------------------------------
# construction

def make_state(wires, basis_index: int) -> PureState:
    """Computational basis state; wire 0 is the most significant index bit."""
    return _basis_state(tuple(wires), int(basis_index))


@functools.lru_cache(maxsize=4096)
def _basis_state(wires: tuple[str, ...], basis_index: int) -> PureState:
    dim = 2 ** len(wires)
    if not 0 <= basis_index < dim:
        raise ValueError(f"basis index {basis_index} out of range for {len(wires)} wires")
    amps = np.zeros(dim, dtype=complex)
    amps[basis_index] = 1.0
    return PureState(wires, amps)


@functools.lru_cache(maxsize=64)
def epr_phi_plus(wire_a: str, wire_b: str) -> PureState:
    """The shared key state (|00> + |11>)/sqrt(2) on two wires."""
    if wire_a == wire_b:
        raise ValueError("key halves need distinct wire labels")
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1 / math.sqrt(2)
    return PureState((wire_a, wire_b), amps)


@functools.lru_cache(maxsize=64)
def epr_phi_minus(wire_a: str, wire_b: str) -> PureState:
    """(|00> - |11>)/sqrt(2): what a phase flip in transit turns the key into."""
    if wire_a == wire_b:
        raise ValueError("key halves need distinct wire labels")
    amps = np.zeros(4, dtype=complex)
    amps[0] = 1 / math.sqrt(2)
    amps[3] = -1 / math.sqrt(2)
    return PureState((wire_a, wire_b), amps)


@functools.lru_cache(maxsize=128)
def rotation_gate(theta: float) -> Unitary:
    """Real rotation [[cos, sin], [-sin, cos]] applied to each key half."""
    if not math.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return Unitary(1, np.array([[c, s], [-s, c]], dtype=complex))


@functools.lru_cache(maxsize=1)
def cnot_gate() -> Unitary:
    """Controlled NOT; the first target wire is the control."""
    m = np.array(
        [[1, 0, 0, 0],
         [0, 1, 0, 0],
         [0, 0, 0, 1],
         [0, 0, 1, 0]],
        dtype=complex,
    )
    return Unitary(2, m)


def identity_gate(arity: int = 1) -> Unitary:
    return Unitary(arity, np.eye(2 ** arity, dtype=complex))


@functools.lru_cache(maxsize=1)
def pauli_gates() -> tuple[Unitary, Unitary, Unitary, Unitary]:
    """(I, sigma1, sigma2, sigma3) with the real antisymmetric sigma2.

    sigma2 = [[0,-1],[1,0]] differs from the textbook imaginary form by a
    global phase only, so it acts identically as a noise operator.
    """
    ident = np.eye(2, dtype=complex)
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1], [1, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return tuple(Unitary(1, m) for m in (ident, s1, s2, s3))


# ---------------------------------------------------------------------------
# pure-state operations

def _axes_for(state_wires: tuple[str, ...], targets) -> list[int]:
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target wires: {targets}")
    axes = []
    for w in targets:
        if w not in state_wires:
            raise ValueError(f"unknown wire {w!r}; state has {state_wires}")
        axes.append(state_wires.index(w))
    return axes


def _apply_matrix(matrix: np.ndarray, amps: np.ndarray, n: int, axes: list[int]) -> np.ndarray:
    k = len(axes)
    rest = [i for i in range(n) if i not in axes]
    perm = axes + rest
    inverse = [0] * n
    for pos, ax in enumerate(perm):
        inverse[ax] = pos
    psi = amps.reshape((2,) * n).transpose(perm).reshape(2 ** k, -1)
    psi = (matrix @ psi).reshape((2,) * n).transpose(inverse)
    return psi.reshape(-1)


def apply(u: Unitary, state: PureState, targets) -> PureState:
    """Apply ``u`` on the target wires (in the given order), identity elsewhere."""
    targets = list(targets)
    if u.arity != len(targets):
        raise ValueError(f"gate acts on {u.arity} wires but {len(targets)} targets given")
    axes = _axes_for(state.wires, targets)
    return _trusted_state(
        state.wires, _apply_matrix(u.matrix, state.amplitudes, state.n_wires, axes)
    )


def apply_bilateral(u: Unitary, state: PureState, pair) -> PureState:
    """Apply the same single-qubit gate to both wires of ``pair``."""
    if u.arity != 1:
        raise ValueError("bilateral application takes a single-qubit gate")
    w1, w2 = pair
    return apply(u, apply(u, state, [w1]), [w2])


def _wire_slices(state: PureState, wire: str) -> tuple[np.ndarray, np.ndarray]:
    ax = state.axis(wire)
    swapped = state.amplitudes.reshape((2,) * state.n_wires).swapaxes(0, ax)
    return swapped[0], swapped[1]


def measure_probabilities(state: PureState, wire: str) -> tuple[float, float]:
    """Born probabilities (p0, p1) for a computational-basis measurement."""
    _, branch1 = _wire_slices(state, wire)
    p1 = float(np.sum(np.abs(branch1) ** 2))
    p1 = min(max(p1, 0.0), 1.0)
    if p1 < PROB_CLAMP:
        p1 = 0.0
    elif p1 > 1.0 - PROB_CLAMP:
        p1 = 1.0
    return 1.0 - p1, p1


def measure(state: PureState, wire: str, rng: RandomStream) -> tuple[int, PureState]:
    """Measure one wire in the computational basis.

    Returns the sampled outcome and the renormalized collapsed state; the
    discarded branch is zeroed exactly so later factoring is stable.
    """
    p0, p1 = measure_probabilities(state, wire)
    if p1 == 0.0:
        outcome = 0
    elif p1 == 1.0:
        outcome = 1
    else:
        outcome = 1 if rng.random() < p1 else 0
    p = p1 if outcome else p0
    if p < PROB_CLAMP:
        raise RuntimeError(f"measured branch has vanishing probability {p!r}")
    ax = state.axis(wire)
    psi = state.amplitudes.reshape((2,) * state.n_wires).copy()
    swapped = psi.swapaxes(0, ax)
    swapped[1 - outcome] = 0.0
    swapped[outcome] /= math.sqrt(p)
    return outcome, _trusted_state(state.wires, psi.reshape(-1))


def discard_wire(state: PureState, wire: str) -> PureState:
    """Drop a wire that is in a definite basis state (e.g. just measured)."""
    ax = state.axis(wire)
    # moveaxis(ax -> 0) keeps the remaining axes in their original order
    psi = np.moveaxis(state.amplitudes.reshape((2,) * state.n_wires), ax, 0)
    weights = [float(np.sum(np.abs(psi[v]) ** 2)) for v in (0, 1)]
    value = int(weights[1] > weights[0])
    if weights[1 - value] > 1e-12:
        raise ValueError(f"wire {wire!r} is still entangled; cannot discard")
    rest = tuple(w for w in state.wires if w != wire)
    amps = psi[value].reshape(-1) / math.sqrt(weights[value])
    return _trusted_state(rest, amps)


def tensor(a: PureState, b: PureState) -> PureState:
    """Tensor product; ``a``'s wires stay the most significant."""
    overlap = set(a.wires) & set(b.wires)
    if overlap:
        raise ValueError(f"wire labels appear on both factors: {overlap}")
    amps = np.multiply.outer(a.amplitudes, b.amplitudes).reshape(-1)
    return _trusted_state(a.wires + b.wires, amps)


def permute_wires(state: PureState, order) -> PureState:
    """Reorder the wire tuple without changing the physical state."""
    order = tuple(order)
    if sorted(order) != sorted(state.wires):
        raise ValueError(f"{order} is not a permutation of {state.wires}")
    perm = [state.wires.index(w) for w in order]
    psi = state.amplitudes.reshape((2,) * state.n_wires).transpose(perm)
    return _trusted_state(order, psi.reshape(-1).copy())


def to_density(state: PureState) -> DensityMatrix:
    return DensityMatrix(state.wires, np.outer(state.amplitudes, state.amplitudes.conj()))


# ---------------------------------------------------------------------------
# density-matrix operations

def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (result wires in the order given)."""
    keep = list(keep)
    if not keep:
        raise ValueError("must keep at least one wire")
    keep_axes = _axes_for(rho.wires, keep)
    n = rho.n_wires
    t = rho.matrix.reshape((2,) * (2 * n))
    # integer einsum subscripts: traced wires share a label on row and column
    row = [0] * n
    col = [0] * n
    out = []
    label = 0
    for i in range(n):
        if i in keep_axes:
            row[i] = label
            col[i] = label + 1
            label += 2
        else:
            row[i] = col[i] = label
            label += 1
    for ax in keep_axes:
        out.append(row[ax])
    for ax in keep_axes:
        out.append(col[ax])
    reduced = np.einsum(t, row + col, out)
    dim = 2 ** len(keep)
    return DensityMatrix(tuple(keep), reduced.reshape(dim, dim))


def _aligned(a: DensityMatrix, b: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    if set(a.wires) != set(b.wires):
        raise ValueError(f"wire sets differ: {a.wires} vs {b.wires}")
    if a.wires == b.wires:
        return a.matrix, b.matrix
    return a.matrix, permute_density(b, a.wires).matrix


def permute_density(rho: DensityMatrix, order) -> DensityMatrix:
    order = tuple(order)
    if sorted(order) != sorted(rho.wires):
        raise ValueError(f"{order} is not a permutation of {rho.wires}")
    n = rho.n_wires
    perm = [rho.wires.index(w) for w in order]
    t = rho.matrix.reshape((2,) * (2 * n))
    t = t.transpose(perm + [p + n for p in perm])
    return DensityMatrix(order, t.reshape(2 ** n, 2 ** n))


def _clamped_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.where((vals < 0) & (vals >= EIGENVALUE_FLOOR), 0.0, vals)
    return vals, vecs


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Positive square root of a PSD Hermitian matrix (eigendecomposition)."""
    vals, vecs = _clamped_eigh(matrix)
    if vals[0] < 0:
        raise ValueError("matrix is not positive semidefinite")
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Tr|A - B| (unhalved): sum of absolute eigenvalues of the difference."""
    ma, mb = _aligned(a, b)
    return float(np.sum(np.abs(np.linalg.eigvalsh(ma - mb))))


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2; equals <psi|b|psi> when a = |psi><psi|.

    A (numerically) pure argument takes the exact overlap form: the general
    eigendecomposition route would turn the projector's zero eigenvalues
    into sqrt-amplified noise well above the contract tolerance.
    """
    ma, mb = _aligned(a, b)
    for x, y in ((ma, mb), (mb, ma)):
        vals, vecs = np.linalg.eigh(x)
        if vals[-1] >= 1.0 - 1e-12:
            psi = vecs[:, -1]
            overlap = float(np.real(psi.conj() @ y @ psi))
            return min(max(overlap, 0.0), 1.0)
    ra = psd_sqrt(ma)
    vals, _ = _clamped_eigh(ra @ mb @ ra)
    root_sum = float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))
    return min(max(root_sum ** 2, 0.0), 1.0)


def purity(rho: DensityMatrix) -> float:
    return float(np.trace(rho.matrix @ rho.matrix).real)


def embedded_matrix(op: np.ndarray, wires: tuple[str, ...], targets) -> np.ndarray:
    """Expand a k-wire operator to the full space of ``wires``."""
    k = round(math.log2(op.shape[0]))
    targets = list(targets)
    if op.shape != (2 ** k, 2 ** k) or len(targets) != k:
        raise ValueError("operator shape does not match the target count")
    axes = _axes_for(wires, targets)
    n = len(wires)
    dim = 2 ** n
    full = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        col = np.zeros(dim, dtype=complex)
        col[j] = 1.0
        full[:, j] = _apply_matrix(np.asarray(op, dtype=complex), col, n, axes)
    return full


def density_apply(u: Unitary, rho: DensityMatrix, targets) -> DensityMatrix:
    """Conjugate ``rho`` by ``u`` acting on the target wires."""
    full = embedded_matrix(u.matrix, rho.wires, targets)
    return DensityMatrix(rho.wires, full @ rho.matrix @ full.conj().T)


def density_apply_kraus(ops, rho: DensityMatrix, targets) -> DensityMatrix:
    """Apply a Kraus map sum_i M_i rho M_i^dagger on the target wires."""
    out = np.zeros_like(rho.matrix)
    for op in ops:
        full = embedded_matrix(np.asarray(op, dtype=complex), rho.wires, targets)
        out += full @ rho.matrix @ full.conj().T
    return DensityMatrix(rho.wires, out)


def density_tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    overlap = set(a.wires) & set(b.wires)
    if overlap:
        raise ValueError(f"wire labels appear on both factors: {overlap}")
    return DensityMatrix(a.wires + b.wires, np.kron(a.matrix, b.matrix))


def _wire_projectors(rho: DensityMatrix, wire: str) -> tuple[np.ndarray, np.ndarray]:
    ax = rho.axis(wire)
    n = rho.n_wires
    bits = (np.arange(2 ** n) >> (n - 1 - ax)) & 1
    p0 = np.diag((bits == 0).astype(complex))
    p1 = np.diag((bits == 1).astype(complex))
    return p0, p1


def density_measure_probabilities(rho: DensityMatrix, wire: str) -> tuple[float, float]:
    ax = rho.axis(wire)
    n = rho.n_wires
    diag = np.real(np.diag(rho.matrix))
    bits = (np.arange(2 ** n) >> (n - 1 - ax)) & 1
    p1 = float(diag[bits == 1].sum())
    p1 = min(max(p1, 0.0), 1.0)
    return 1.0 - p1, p1


def density_dephase(rho: DensityMatrix, wire: str) -> DensityMatrix:
    """Non-selective computational-basis measurement of one wire."""
    p0, p1 = _wire_projectors(rho, wire)
    m = p0 @ rho.matrix @ p0 + p1 @ rho.matrix @ p1
    return DensityMatrix(rho.wires, m)


def density_collapse(rho: DensityMatrix, wire: str, outcome: int) -> tuple[float, DensityMatrix]:
    """Project onto an outcome; returns (probability, renormalized state)."""
    projs = _wire_projectors(rho, wire)
    p = projs[outcome]
    prob = float(np.trace(p @ rho.matrix).real)
    if prob < PROB_CLAMP:
        raise ValueError(f"outcome {outcome} on {wire!r} has vanishing probability")
    return prob, DensityMatrix(rho.wires, (p @ rho.matrix @ p) / prob)


def density_replace_wire(rho: DensityMatrix, wire: str, fresh: DensityMatrix) -> DensityMatrix:
    """Trace a wire out and tensor in a fresh single-wire state under the same label."""
    if fresh.n_wires != 1:
        raise ValueError("replacement state must be a single wire")
    rest = [w for w in rho.wires if w != wire]
    if len(rest) == len(rho.wires):
        raise ValueError(f"unknown wire {wire!r}; state has {rho.wires}")
    reduced = partial_trace(rho, rest)
    renamed = DensityMatrix((wire,), fresh.matrix)
    return density_tensor(reduced, renamed)


# ---------------------------------------------------------------------------
# random objects

def random_unitary(dim: int, rng: RandomStream) -> Unitary:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    if dim < 1 or dim & (dim - 1):
        raise ValueError(f"dimension must be a power of 2, got {dim}")
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Unitary(round(math.log2(dim)), q)


def random_state(wires, rng: RandomStream) -> PureState:
    """Haar-random pure state on the given wires."""
    wires = tuple(wires)
    dim = 2 ** len(wires)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(wires, v / np.linalg.norm(v))


def random_density(wires, rng: RandomStream) -> DensityMatrix:
    """Full-rank random density matrix (normalized Wishart)."""
    wires = tuple(wires)
    dim = 2 ** len(wires)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(wires, m / np.trace(m).real)
