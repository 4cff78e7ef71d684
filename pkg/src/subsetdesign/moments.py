"""Exact t-th moment operators and trace-distance checks at desk scale.

Everything here is dense; the dimension 2^(n*t) is capped at 4096, which
covers every in-scope verification.  Copy index convention: the t-fold
basis state |v_1 ... v_t> has index sum_i v_i * N^(t-i) (first copy most
significant), matching repeated Kronecker products.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from itertools import combinations, permutations
from math import comb, factorial
from typing import Iterable, Sequence

import numpy as np

from .sparse_state import SubsetPhaseState

MAX_DIM = 4096

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
PERM_TOL = 1e-10


class MomentError(ValueError):
    pass


_eigensolver_checked = False


def _check_eigensolver() -> None:
    """One-time residual check of the Hermitian eigensolver backend."""
    global _eigensolver_checked
    if _eigensolver_checked:
        return
    rng = np.random.default_rng(12345)
    for dim in (8, 33, 64):
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = (z + z.conj().T) / 2
        w, v = np.linalg.eigh(h)
        residual = np.linalg.norm(h @ v - v * w)
        if residual > 1e-10 * np.linalg.norm(h):
            raise AssertionError("eigensolver residual contract violated")
    _eigensolver_checked = True


@dataclass(frozen=True)
class DensityMoment:
    """Dense Hermitian t-copy moment operator on n qubits per copy."""

    n: int
    t: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        dim = (1 << self.n) ** self.t
        if dim > MAX_DIM:
            raise MomentError(f"dimension {dim} exceeds cap {MAX_DIM}")
        if self.matrix.shape != (dim, dim):
            raise MomentError(f"matrix shape {self.matrix.shape} != ({dim}, {dim})")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > HERMITIAN_TOL:
            raise MomentError("matrix is not Hermitian")
        if abs(np.trace(self.matrix).real - 1.0) > TRACE_TOL:
            raise MomentError("trace must be 1")

    @property
    def dim(self) -> int:
        return (1 << self.n) ** self.t

    def validate_full(self) -> None:
        """PSD and copy-permutation invariance (eigensolve; call from tests)."""
        _check_eigensolver()
        if np.min(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)) < -PSD_TOL:
            raise MomentError("matrix is not positive semidefinite")
        N = 1 << self.n
        for pi in permutations(range(self.t)):
            p = _copy_permutation_indices(N, self.t, pi)
            if np.max(np.abs(self.matrix[np.ix_(p, p)] - self.matrix)) > PERM_TOL:
                raise MomentError("matrix is not copy-permutation invariant")


def _copy_permutation_indices(N: int, t: int, pi: Sequence[int]) -> np.ndarray:
    """Index map of the operator permuting copy slots by pi."""
    idx = np.arange(N**t)
    digits = [(idx // N ** (t - 1 - i)) % N for i in range(t)]
    out = np.zeros_like(idx)
    for i in range(t):
        out += digits[pi[i]] * N ** (t - 1 - i)
    return out


def haar_moment(n: int, t: int) -> DensityMoment:
    """Symmetric-subspace projector normalized by its dimension."""
    N = 1 << n
    dim = N**t
    if dim > MAX_DIM:
        raise MomentError(f"dimension {dim} exceeds cap {MAX_DIM}")
    if t > 6:
        raise MomentError("permutation sum limited to t <= 6")
    M = np.zeros((dim, dim))
    idx = np.arange(dim)
    for pi in permutations(range(t)):
        M[_copy_permutation_indices(N, t, pi), idx] += 1.0
    M /= factorial(t)
    M /= comb(N + t - 1, t)
    return DensityMoment(n, t, M)


def unique_moment(l: int, t: int) -> DensityMoment:
    """Uniform mixture of normalized unique type states on 2^l symbols."""
    L = 1 << l
    dim = L**t
    if t > L:
        raise MomentError(f"no unique types with t={t} > alphabet {L}")
    if dim > MAX_DIM:
        raise MomentError(f"dimension {dim} exceeds cap {MAX_DIM}")
    M = np.zeros((dim, dim))
    norm = 1.0 / factorial(t)  # t! orderings, each amplitude 1/sqrt(t!)
    for subset in combinations(range(L), t):
        indices = [
            sum(perm[i] * L ** (t - 1 - i) for i in range(t))
            for perm in permutations(subset)
        ]
        for a in indices:
            for b in indices:
                M[a, b] += norm
    M /= comb(L, t)
    return DensityMoment(l, t, M)


def trace_distance(a: DensityMoment, b: DensityMoment) -> float:
    if a.dim != b.dim:
        raise MomentError(f"dimension mismatch {a.dim} vs {b.dim}")
    _check_eigensolver()
    d = a.matrix - b.matrix
    d = (d + d.conj().T) / 2
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))


def type_parity_signature(v: int, K: int, t: int) -> int:
    """Per-symbol occurrence-count parities of the length-t word with index v."""
    sig = 0
    for _ in range(t):
        sig ^= 1 << (v % K)
        v //= K
    return sig


def enumerated_function_moment(k: int, t: int) -> DensityMoment:
    """Average of (U_f |+>^k)^(x t) projectors over all 2^(2^k) functions f.

    For k <= 3 the average is accumulated function by function; for k = 4
    the closed form is used: the (v, v') entry is 1/K^t exactly when the
    two words have equal per-symbol count parities, else 0.
    """
    K = 1 << k
    dim = K**t
    if dim > MAX_DIM:
        raise MomentError(f"dimension {dim} exceeds cap {MAX_DIM}")
    if k > 4:
        raise MomentError("function enumeration limited to k <= 4")
    if k <= 3:
        M = np.zeros((dim, dim))
        amp = 1.0 / np.sqrt(K)
        for table in range(1 << K):
            vec = np.array([amp * (1 - 2 * ((table >> b) & 1)) for b in range(K)])
            tvec = vec
            for _ in range(t - 1):
                tvec = np.kron(tvec, vec)
            M += np.outer(tvec, tvec)
        M /= 1 << K
    else:
        sigs = np.array([type_parity_signature(v, K, t) for v in range(dim)])
        M = (sigs[:, None] == sigs[None, :]).astype(float) / K**t
    return DensityMoment(k, t, M)


def empirical_moment(states: Iterable[SubsetPhaseState], t: int) -> DensityMoment:
    """Sample mean of t-fold projectors of dense-converted states."""
    M = None
    count = 0
    n = None
    for s in states:
        if n is None:
            n = s.n
            if ((1 << n) ** t) > MAX_DIM:
                raise MomentError(f"dimension {(1 << n) ** t} exceeds cap {MAX_DIM}")
        elif s.n != n:
            raise MomentError("all states must share n")
        vec = s.to_dense()
        tvec = vec
        for _ in range(t - 1):
            tvec = np.kron(tvec, vec)
        outer = np.outer(tvec, tvec)
        M = outer if M is None else M + outer
        count += 1
    if M is None:
        raise MomentError("need at least one state")
    return DensityMoment(n, t, M / count)


def frame_potential(states: Sequence[np.ndarray], t: int) -> float:
    """Mean of |<psi_i|psi_j>|^(2t) over ordered pairs with i != j."""
    if len(states) < 2:
        raise MomentError("need at least 2 states")
    vecs = np.array(states)
    overlaps = np.abs(vecs.conj() @ vecs.T) ** (2 * t)
    total = overlaps.sum() - np.trace(overlaps)
    return float(total / (len(states) * (len(states) - 1)))


# ---------------------------------------------------------------------------
# Binary dump: 16-byte header (rows, cols as little-endian u64) then
# row-major (re, im) float64 pairs.
# ---------------------------------------------------------------------------


def dump_moment(m: DensityMoment, path: str) -> None:
    dim = m.dim
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", dim, dim))
        inter = np.empty((dim, dim, 2))
        inter[:, :, 0] = m.matrix.real
        inter[:, :, 1] = m.matrix.imag
        fh.write(inter.astype("<f8").tobytes())


def load_moment(path: str, n: int, t: int) -> DensityMoment:
    with open(path, "rb") as fh:
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(rows, cols, 2)
    return DensityMoment(n, t, data[:, :, 0] + 1j * data[:, :, 1])
