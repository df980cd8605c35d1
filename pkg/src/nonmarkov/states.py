"""Quantum-state data model: density operators, multipartite structure,
canonical states, ensembles, POVMs, pinching, Schmidt analysis and seeded
sampling.

Tensor ordering is A-major everywhere: the composite index of a product
A (x) B is ``a * dimB + b``, which is exactly ``numpy.kron`` ordering. Every
bipartite/tripartite helper in this package relies on that single convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg

# Constructor tolerances for state-like objects.
STATE_HERM_TOL = 1e-10
STATE_EIG_TOL = 1e-9
STATE_TRACE_TOL = 1e-9
POVM_TOL = 1e-9
ENSEMBLE_PROB_TOL = 1e-12

# Eigenvalues of a pinching reference closer than this (absolute, on a
# max(1, scale) footing) share one spectral projector, so that nearly
# degenerate spectra. e.g. of tensor powers, pinch stably.
PINCH_CLUSTER_TOL = 1e-8


def _check_density_matrix(m: np.ndarray) -> np.ndarray:
    a = linalg.as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"density matrix must be square, got {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.conj().T).max(initial=0.0)) > STATE_HERM_TOL * scale:
        raise linalg.NotHermitianError("density matrix is not Hermitian within 1e-10")
    h = (a + a.conj().T) / 2
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > STATE_TRACE_TOL:
        raise ValueError(f"density matrix trace {tr!r} is not 1 within {STATE_TRACE_TOL}")
    if float(np.linalg.eigvalsh(h)[0]) < -STATE_EIG_TOL:
        raise ValueError("density matrix has an eigenvalue below -1e-9")
    return h


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive-semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _check_density_matrix(self.matrix))
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def to_json(self) -> str:
        return dumps_state(self.matrix, [self.dim])

    @staticmethod
    def from_json(text: str) -> "DensityOperator":
        m, dims = loads_state(text)
        if len(dims) != 1:
            raise ValueError(f"expected a single-system state, got dims {dims}")
        return DensityOperator(m)


@dataclass(frozen=True)
class BipartiteState:
    """State on H_A (x) H_B with A-major index ordering."""

    dimA: int
    dimB: int
    state: DensityOperator

    def __post_init__(self):
        if self.dimA < 1 or self.dimB < 1:
            raise ValueError("dimensions must be positive")
        if self.state.dim != self.dimA * self.dimB:
            raise ValueError(
                f"state dim {self.state.dim} != dimA*dimB = {self.dimA * self.dimB}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix

    @property
    def dim(self) -> int:
        return self.state.dim

    def marginal(self, which: str) -> DensityOperator:
        return partial_trace(self, "B" if which == "A" else "A")

    def to_json(self) -> str:
        return dumps_state(self.matrix, [self.dimA, self.dimB])

    @staticmethod
    def from_json(text: str) -> "BipartiteState":
        m, dims = loads_state(text)
        if len(dims) != 2:
            raise ValueError(f"expected a bipartite state, got dims {dims}")
        return BipartiteState(dims[0], dims[1], DensityOperator(m))


@dataclass(frozen=True)
class TripartiteState:
    """State on H_A (x) H_B (x) H_C, used mainly as a purification carrier."""

    dimA: int
    dimB: int
    dimC: int
    state: DensityOperator

    def __post_init__(self):
        if self.state.dim != self.dimA * self.dimB * self.dimC:
            raise ValueError("state dim does not match dimA*dimB*dimC")

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix

    def _tensor6(self) -> np.ndarray:
        d = (self.dimA, self.dimB, self.dimC)
        return self.matrix.reshape(*d, *d)

    def marginal_ab(self) -> BipartiteState:
        m = np.einsum("abcxyc->abxy", self._tensor6())
        m = m.reshape(self.dimA * self.dimB, self.dimA * self.dimB)
        return BipartiteState(self.dimA, self.dimB, DensityOperator(m))

    def marginal_ac(self) -> BipartiteState:
        m = np.einsum("abcxbz->acxz", self._tensor6())
        m = m.reshape(self.dimA * self.dimC, self.dimA * self.dimC)
        return BipartiteState(self.dimA, self.dimC, DensityOperator(m))

    def marginal_bc(self) -> BipartiteState:
        m = np.einsum("abcayz->bcyz", self._tensor6())
        m = m.reshape(self.dimB * self.dimC, self.dimB * self.dimC)
        return BipartiteState(self.dimB, self.dimC, DensityOperator(m))

    def to_json(self) -> str:
        return dumps_state(self.matrix, [self.dimA, self.dimB, self.dimC])


@dataclass(frozen=True)
class StateEnsemble:
    """Preparation of states[i] with probability probs[i]."""

    probs: np.ndarray
    states: list = field(default_factory=list)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 1 or p.size != len(self.states):
            raise ValueError("probs and states must be equal-length, nonempty")
        if p.min(initial=0.0) < 0 or abs(p.sum() - 1.0) > ENSEMBLE_PROB_TOL:
            raise ValueError("probs must be nonnegative and sum to 1 within 1e-12")
        dims = {s.dim for s in self.states}
        if len(dims) != 1:
            raise ValueError(f"ensemble states have mixed dimensions {dims}")
        object.__setattr__(self, "probs", p)
        p.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def average(self) -> DensityOperator:
        m = sum(p * s.matrix for p, s in zip(self.probs, self.states))
        return DensityOperator(m)


@dataclass(frozen=True)
class Povm:
    """Measurement: positive elements summing to the identity."""

    elements: list

    def __post_init__(self):
        if not self.elements:
            raise ValueError("POVM needs at least one element")
        elems = [linalg.hermitize(e) for e in self.elements]
        d = elems[0].shape[0]
        total = np.zeros((d, d), dtype=np.complex128)
        for e in elems:
            if e.shape[0] != d:
                raise ValueError("POVM elements have mixed dimensions")
            if float(np.linalg.eigvalsh(e)[0]) < -POVM_TOL:
                raise ValueError("POVM element has an eigenvalue below -1e-9")
            total += e
        if float(np.abs(total - np.eye(d)).max()) > POVM_TOL:
            raise ValueError("POVM elements do not sum to the identity within 1e-9")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]


# ---------------------------------------------------------------------------
# Construction and structure operations
# ---------------------------------------------------------------------------


def basis_state(dim: int, i: int) -> DensityOperator:
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[i, i] = 1.0
    return DensityOperator(m)


def pure_state(vec) -> DensityOperator:
    v = np.asarray(vec, dtype=np.complex128).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    v = v / n
    return DensityOperator(np.outer(v, v.conj()))


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim) / dim)


def tensor(a: DensityOperator, b: DensityOperator) -> BipartiteState:
    """Kronecker product with A-major ordering."""
    return BipartiteState(a.dim, b.dim, DensityOperator(np.kron(a.matrix, b.matrix)))


def partial_trace(s: BipartiteState, which: str) -> DensityOperator:
    """Trace out subsystem ``which`` ("A" or "B")."""
    m4 = s.matrix.reshape(s.dimA, s.dimB, s.dimA, s.dimB)
    if which == "A":
        out = np.einsum("abac->bc", m4)
    elif which == "B":
        out = np.einsum("abcb->ac", m4)
    else:
        raise ValueError(f"which must be 'A' or 'B', got {which!r}")
    return DensityOperator(out)


def max_entangled_vector(dA: int) -> np.ndarray:
    v = np.zeros(dA * dA, dtype=np.complex128)
    for i in range(dA):
        v[i * dA + i] = 1.0
    return v / np.sqrt(dA)


def max_entangled(dA: int) -> BipartiteState:
    """|psi+> = d^{-1/2} sum_i |ii> as a projector on H_A (x) H_A."""
    if dA < 2:
        raise ValueError("maximally entangled state needs dA >= 2")
    v = max_entangled_vector(dA)
    return BipartiteState(dA, dA, DensityOperator(np.outer(v, v.conj())))


def purity(m: np.ndarray) -> float:
    return float(np.trace(m @ m).real)


def purify(s: BipartiteState) -> TripartiteState:
    """Append a reference system C of dimension rank(s) so A:B:C is pure."""
    dec = linalg.eigh(s.matrix)
    cut = linalg.support_cut(dec.eigenvalues)
    keep = [k for k, lam in enumerate(dec.eigenvalues) if lam > cut]
    dC = len(keep)
    d = s.dim
    psi = np.zeros(d * dC, dtype=np.complex128)
    # |psi> = sum_k sqrt(lam_k) |v_k>_AB |k>_C  (C-major-last per A-major rule)
    for c, k in enumerate(keep):
        lam = dec.eigenvalues[k]
        vk = dec.eigenvectors[:, k]
        psi += np.sqrt(lam) * np.kron(vk, _unit(dC, c))
    psi /= np.linalg.norm(psi)
    return TripartiteState(s.dimA, s.dimB, dC, pure_state(psi))


def _unit(dim: int, i: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[i] = 1.0
    return v


def dominant_vector(state: DensityOperator, purity_tol: float = 1e-9) -> np.ndarray:
    """Extract the state vector of a (numerically) pure density operator."""
    if state.purity() < 1.0 - purity_tol:
        raise ValueError(f"state is not pure: purity {state.purity()!r}")
    dec = linalg.eigh(state.matrix)
    return dec.eigenvectors[:, -1]


def schmidt_coefficients(psi: BipartiteState) -> np.ndarray:
    """Singular values of the dA x dB coefficient matrix of a pure state."""
    v = dominant_vector(psi.state)
    m = v.reshape(psi.dimA, psi.dimB)
    return np.linalg.svd(m, compute_uv=False)


def schmidt_rank(psi: BipartiteState) -> int:
    """Number of Schmidt coefficients whose squares clear the support cut.

    Equals the support rank of the reduced state on A.
    """
    s2 = schmidt_coefficients(psi) ** 2
    cut = linalg.support_cut(s2)
    return int(np.sum(s2 > cut))


def eigenvalue_clusters(eigenvalues: np.ndarray, tol: float = PINCH_CLUSTER_TOL):
    """Group ascending eigenvalues into clusters of near-degenerate values."""
    scale = max(1.0, float(np.abs(eigenvalues).max(initial=0.0)))
    clusters = []
    current = [0]
    for i in range(1, len(eigenvalues)):
        if eigenvalues[i] - eigenvalues[current[-1]] <= tol * scale:
            current.append(i)
        else:
            clusters.append(current)
            current = [i]
    clusters.append(current)
    return clusters


def pinch(sigma: DensityOperator, x) -> np.ndarray:
    """Remove off-diagonal blocks of x relative to sigma's eigenprojectors.

    Near-degenerate eigenvalues of sigma (within PINCH_CLUSTER_TOL on a
    max(1, scale) footing) share a single projector, so tensor powers with
    exactly repeated spectra pinch stably.
    """
    a = linalg.as_matrix(x)
    if a.shape != sigma.matrix.shape:
        raise ValueError("pinch requires sigma and x of equal dimension")
    dec = linalg.eigh(sigma.matrix)
    out = np.zeros_like(a)
    for cluster in eigenvalue_clusters(dec.eigenvalues):
        u = dec.eigenvectors[:, cluster]
        p = u @ u.conj().T
        out += p @ a @ p
    return out


def make_cq(probs, states) -> BipartiteState:
    """Classical-quantum state sum_i p_i |i><i| (x) rho_i."""
    ens = StateEnsemble(np.asarray(probs, dtype=np.float64), list(states))
    n, d = ens.size, ens.dim
    m = np.zeros((n * d, n * d), dtype=np.complex128)
    for i, (p, s) in enumerate(zip(ens.probs, ens.states)):
        m[i * d:(i + 1) * d, i * d:(i + 1) * d] = p * s.matrix
    return BipartiteState(n, d, DensityOperator(m))


# ---------------------------------------------------------------------------
# Seeded sampling (Ginibre-induced laws; the seed fully determines the output)
# ---------------------------------------------------------------------------


def random_density(dim: int, rank: int, seed: int) -> DensityOperator:
    """Rank-truncated Ginibre-induced random state, deterministic per seed."""
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_pure_vector(dim: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar unitary via QR of a complex Ginibre matrix, phase-fixed."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


# ---------------------------------------------------------------------------
# JSON serialization: {"dims": [...], "re": [[...]], "im": [[...]]}
# ---------------------------------------------------------------------------


def dumps_state(matrix: np.ndarray, dims) -> str:
    m = linalg.as_matrix(matrix)
    return json.dumps(
        {
            "dims": [int(d) for d in dims],
            "re": m.real.tolist(),
            "im": m.imag.tolist(),
        }
    )


def loads_state(text: str):
    doc = json.loads(text)
    dims = [int(d) for d in doc["dims"]]
    m = np.array(doc["re"], dtype=np.float64) + 1j * np.array(doc["im"], dtype=np.float64)
    d = int(np.prod(dims))
    if m.shape != (d, d):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
    return m.astype(np.complex128), dims


def state_from_json(text: str):
    """Load a state, dispatching on the number of dims entries."""
    m, dims = loads_state(text)
    if len(dims) == 1:
        return DensityOperator(m)
    if len(dims) == 2:
        return BipartiteState(dims[0], dims[1], DensityOperator(m))
    if len(dims) == 3:
        return TripartiteState(dims[0], dims[1], dims[2], DensityOperator(m))
    raise ValueError(f"unsupported number of subsystems: {len(dims)}")
