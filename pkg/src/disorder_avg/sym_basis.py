"""Permutation-symmetric Pauli-string basis and projection into it.

A basis element ``Sigma(x, y, z)`` is the Frobenius-normalized sum of all
distinct Pauli strings on N sites with x X's, y Y's and z Z's. Superoperators
that commute with every site permutation map the span of these strings into
itself; this module builds their D x D matrices, D = C(N+3, 3).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp

from . import spin_ops


class ProjectionConsistencyError(RuntimeError):
    """A representative induced a transition outside its declared support."""


class SymIndex(NamedTuple):
    x: int
    y: int
    z: int


def dimension(N: int) -> int:
    if N < 1:
        raise ValueError("N must be >= 1")
    return math.comb(N + 3, 3)


def multinomial(N: int, x: int, y: int, z: int) -> int:
    rest = N - x - y - z
    if min(x, y, z, rest) < 0:
        raise ValueError(f"counts ({x},{y},{z}) invalid for N={N}")
    return math.factorial(N) // (
        math.factorial(x) * math.factorial(y) * math.factorial(z) * math.factorial(rest)
    )


def normalization(N: int, idx: SymIndex | tuple[int, int, int]) -> int:
    """Squared Frobenius norm of the unnormalized string sum, 2^N * multinomial."""
    x, y, z = idx
    return 2**N * multinomial(N, x, y, z)


def _log_multinomial(n, x, y, z):
    """Vectorized log multinomial; -inf where a count is negative."""
    n = np.asarray(n, dtype=float)
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    rest = n - x - y - z
    ok = (x >= 0) & (y >= 0) & (z >= 0) & (rest >= 0)
    with np.errstate(invalid="ignore"):
        out = (
            _lgamma(n + 1)
            - _lgamma(x + 1)
            - _lgamma(y + 1)
            - _lgamma(z + 1)
            - _lgamma(rest + 1)
        )
    return np.where(ok, out, -np.inf)


def _lgamma(a):
    from scipy.special import gammaln

    return gammaln(np.where(a > 0, a, 1.0))


class SymBasis:
    """Lexicographically ordered (x, y, z) labels for N spins."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.N = N
        self.entries = [
            SymIndex(x, y, z)
            for x in range(N + 1)
            for y in range(N + 1 - x)
            for z in range(N + 1 - x - y)
        ]
        arr = np.array(self.entries, dtype=np.int64).reshape(-1, 3)
        self.xs, self.ys, self.zs = arr[:, 0], arr[:, 1], arr[:, 2]
        self._table = np.full((N + 1,) * 3, -1, dtype=np.int64)
        self._table[self.xs, self.ys, self.zs] = np.arange(len(self.entries))
        self.log_multinomial = _log_multinomial(N, self.xs, self.ys, self.zs)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymBasis) and other.N == self.N

    def __hash__(self) -> int:
        return hash(("SymBasis", self.N))

    def __repr__(self) -> str:
        return f"SymBasis(N={self.N}, dim={len(self)})"

    def index(self, x: int, y: int, z: int) -> int:
        if min(x, y, z) < 0 or x + y + z > self.N:
            raise KeyError((x, y, z))
        return int(self._table[x, y, z])

    def lookup(self, xs, ys, zs) -> np.ndarray:
        """Vectorized index; -1 where the label lies outside the simplex."""
        xs, ys, zs = (np.asarray(a) for a in (xs, ys, zs))
        ok = (xs >= 0) & (ys >= 0) & (zs >= 0) & (xs + ys + zs <= self.N)
        out = np.full(xs.shape, -1, dtype=np.int64)
        out[ok] = self._table[xs[ok], ys[ok], zs[ok]]
        return out


@lru_cache(maxsize=None)
def get_basis(N: int) -> SymBasis:
    return SymBasis(N)


@dataclass
class SymState:
    """Coefficients ``coeffs[i] = Tr(Sigma_i rho)`` of a symmetric density operator."""

    basis: SymBasis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.shape != (len(self.basis),):
            raise ValueError("coefficient vector does not match basis dimension")

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def trace_component(self) -> float:
        return float(self.coeffs[0])

    def trace(self) -> float:
        return float(self.coeffs[0] * 2 ** (self.N / 2))

    def purity(self) -> float:
        return float(np.dot(self.coeffs, self.coeffs))

    def check(self, tol: float = 1e-9) -> None:
        """Raise if the state violates realness, unit trace or the purity bound."""
        if np.iscomplexobj(self.coeffs) and np.abs(self.coeffs.imag).max() > tol:
            raise ValueError("complex coefficients in a Hermitian basis")
        if abs(self.trace_component - 2 ** (-self.N / 2)) > tol:
            raise ValueError(f"trace component {self.trace_component} != 2^(-N/2)")
        if self.purity() > 1 + tol:
            raise ValueError(f"purity {self.purity()} exceeds 1")


@dataclass
class SymSuperOp:
    """Superoperator restricted to the symmetric sector, stored sparse."""

    basis: SymBasis
    data: sp.csr_array

    def __post_init__(self):
        if not sp.issparse(self.data):
            self.data = sp.csr_array(np.asarray(self.data))
        else:
            self.data = sp.csr_array(self.data)
        D = len(self.basis)
        if self.data.shape != (D, D):
            raise ValueError(f"expected shape {(D, D)}, got {self.data.shape}")

    @classmethod
    def zeros(cls, basis: SymBasis, dtype=float) -> "SymSuperOp":
        D = len(basis)
        return cls(basis, sp.csr_array((D, D), dtype=dtype))

    @classmethod
    def identity(cls, basis: SymBasis, dtype=float) -> "SymSuperOp":
        return cls(basis, sp.identity(len(basis), dtype=dtype, format="csr"))

    @property
    def shape(self):
        return self.data.shape

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data.data)

    def toarray(self) -> np.ndarray:
        return self.data.toarray()

    def _check(self, other: "SymSuperOp"):
        if other.basis != self.basis:
            raise ValueError("superoperators live on different bases")

    def __matmul__(self, other):
        if isinstance(other, SymSuperOp):
            self._check(other)
            return SymSuperOp(self.basis, self.data @ other.data)
        if isinstance(other, SymState):
            return SymState(self.basis, self.data @ other.coeffs)
        return self.data @ other

    def __add__(self, other: "SymSuperOp") -> "SymSuperOp":
        self._check(other)
        return SymSuperOp(self.basis, self.data + other.data)

    def __sub__(self, other: "SymSuperOp") -> "SymSuperOp":
        self._check(other)
        return SymSuperOp(self.basis, self.data - other.data)

    def __mul__(self, scalar) -> "SymSuperOp":
        return SymSuperOp(self.basis, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SymSuperOp":
        return SymSuperOp(self.basis, -self.data)

    def max_abs(self) -> float:
        return float(np.abs(self.data.data).max()) if self.data.nnz else 0.0

    def real(self, atol: float = 1e-12) -> "SymSuperOp":
        """Real part, refusing to drop an imaginary residue larger than ``atol``."""
        if not self.is_complex:
            return self
        imag = float(np.abs(self.data.data.imag).max()) if self.data.nnz else 0.0
        if imag > atol * max(1.0, self.max_abs()):
            raise ArithmeticError(f"imaginary residue {imag:.3e} in a real superoperator")
        out = self.data.copy()
        out = sp.csr_array((out.data.real, out.indices, out.indptr), shape=out.shape)
        out.eliminate_zeros()
        return SymSuperOp(self.basis, out)

    def trace_row(self) -> np.ndarray:
        return self.data[[0], :].toarray().ravel()


# --- k-site Pauli bookkeeping ------------------------------------------------


@lru_cache(maxsize=None)
def pauli_basis(k: int):
    """Vectorized k-site Pauli strings (as columns) and their (x, y, z) type.

    Returns ``(P, types, type_of)`` where ``types`` is the sorted list of
    distinct type triples and ``type_of[j]`` the type index of column j.
    """
    labels = list(itertools.product(spin_ops.PAULI_LABELS, repeat=k))
    P = np.stack([spin_ops.vectorize(spin_ops.pauli_from_labels(l)) for l in labels], axis=1)
    triples = [(l.count("X"), l.count("Y"), l.count("Z")) for l in labels]
    types = sorted(set(triples))
    pos = {t: i for i, t in enumerate(types)}
    type_of = np.array([pos[t] for t in triples])
    return P, types, type_of


def pauli_transfer(K: np.ndarray, k: int) -> np.ndarray:
    """Matrix ``T[q, p] = Tr(q K[p]) / 2^k`` over unnormalized k-site Paulis."""
    P, _, _ = pauli_basis(k)
    return P.conj().T @ K @ P / 2**k


def type_transfer(K: np.ndarray, k: int) -> tuple[np.ndarray, list]:
    """Pauli transfer matrix summed over (output type, input type) blocks."""
    P, types, type_of = pauli_basis(k)
    T = pauli_transfer(K, k)
    ind = np.zeros((len(type_of), len(types)))
    ind[np.arange(len(type_of)), type_of] = 1.0
    return ind.T @ T @ ind, types


def project_representative(
    K: np.ndarray,
    k: int,
    basis: SymBasis | int,
    multiplicity: float,
    support: Iterable[tuple[int, int, int]] | None = None,
    drop_tol: float = 1e-13,
) -> SymSuperOp:
    """Project ``multiplicity x (average over site placements of K)`` into the sector.

    ``K`` is a dense superoperator (4^k x 4^k) acting on sites 1..k. The
    symmetrized operator is ``multiplicity / (N!/(N-k)!)`` times the sum of K
    over all ordered placements of its k sites among the N spins; for
    ``sum_{i<j}`` of a swap-symmetric two-site term pass ``C(N, 2)``, for an
    ordered sum over distinct tuples pass the falling factorial.

    ``support`` optionally lists the allowed label shifts (dx, dy, dz);
    any other transition with nonzero weight raises
    :class:`ProjectionConsistencyError`.
    """
    if not isinstance(basis, SymBasis):
        basis = get_basis(int(basis))
    N = basis.N
    D = len(basis)
    K = np.asarray(K)
    if K.shape != (4**k, 4**k):
        raise ValueError(f"representative must be {4**k}x{4**k}")
    if k > N or multiplicity == 0:
        return SymSuperOp.zeros(basis, dtype=K.dtype)
    agg, types = type_transfer(K, k)
    scale = np.abs(agg).max() if agg.size else 0.0
    allowed = None if support is None else {tuple(s) for s in support}

    xs, ys, zs = basis.xs, basis.ys, basis.zs
    rows, cols, vals = [], [], []
    for iq, tq in enumerate(types):
        for ip, tp in enumerate(types):
            w = agg[iq, ip]
            if abs(w) <= drop_tol * max(scale, 1.0):
                continue
            shift = (tq[0] - tp[0], tq[1] - tp[1], tq[2] - tp[2])
            if allowed is not None and shift not in allowed:
                raise ProjectionConsistencyError(
                    f"transition {tp}->{tq} (shift {shift}) outside declared support"
                )
            rx, ry, rz = xs - tp[0], ys - tp[1], zs - tp[2]
            log_rest = _log_multinomial(N - k, rx, ry, rz)
            ok = np.isfinite(log_rest)
            if not ok.any():
                continue
            tx, ty, tz = rx[ok] + tq[0], ry[ok] + tq[1], rz[ok] + tq[2]
            target = basis.lookup(tx, ty, tz)
            log_out = basis.log_multinomial[target]
            logw = log_rest[ok] - 0.5 * (basis.log_multinomial[ok] + log_out)
            rows.append(target)
            cols.append(np.nonzero(ok)[0])
            vals.append(multiplicity * w * np.exp(logw))
    if not rows:
        return SymSuperOp.zeros(basis, dtype=agg.dtype)
    M = sp.coo_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(D, D)
    ).tocsr()
    M.sum_duplicates()
    return SymSuperOp(basis, M)


# --- dense strings and full-space states ------------------------------------


def _placements(k: int, idx: tuple[int, int, int]):
    x, y, z = idx
    sites = range(k)
    for xs in itertools.combinations(sites, x):
        rest = [s for s in sites if s not in xs]
        for ys in itertools.combinations(rest, y):
            rest2 = [s for s in rest if s not in ys]
            for zs in itertools.combinations(rest2, z):
                labels = ["I"] * k
                for s in xs:
                    labels[s] = "X"
                for s in ys:
                    labels[s] = "Y"
                for s in zs:
                    labels[s] = "Z"
                yield labels


MAX_DENSE_SITES = 8


def build_symmetric_string(k: int, idx: SymIndex | tuple[int, int, int]) -> np.ndarray:
    """Dense normalized ``Sigma(x, y, z)`` on k sites."""
    if k > MAX_DENSE_SITES:
        raise MemoryError(f"dense symmetric strings limited to k <= {MAX_DENSE_SITES}")
    x, y, z = idx
    if min(x, y, z) < 0 or x + y + z > k:
        raise ValueError(f"label {tuple(idx)} invalid for k={k}")
    out = np.zeros((2**k, 2**k), dtype=complex)
    for labels in _placements(k, (x, y, z)):
        out += spin_ops.pauli_from_labels(labels)
    return out / math.sqrt(normalization(k, (x, y, z)))


@lru_cache(maxsize=8)
def dense_basis_strings(N: int) -> tuple[np.ndarray, ...]:
    return tuple(build_symmetric_string(N, idx) for idx in get_basis(N).entries)


MAX_FULL_SITES = 12


def project_full_state(rho: np.ndarray, basis: SymBasis | None = None) -> SymState:
    """Coefficients ``Tr(Sigma(x,y,z) rho)`` of an N-site density matrix.

    Works site by site: each step traces one site against I, X, Y, Z and
    merges the result into running (x, y, z) counts, so no N-site string is
    ever formed.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    N = int(round(math.log2(dim)))
    if 2**N != dim or rho.shape != (dim, dim):
        raise ValueError("rho must be 2^N x 2^N")
    if N > MAX_FULL_SITES:
        raise MemoryError(f"full-space projection limited to N <= {MAX_FULL_SITES}")
    basis = basis or get_basis(N)
    shifts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    mats = [spin_ops.PAULI[s] for s in spin_ops.PAULI_LABELS]
    blocks = {(0, 0, 0): rho}
    for _ in range(N):
        new: dict[tuple[int, int, int], np.ndarray] = {}
        for key, A in blocks.items():
            R = A.shape[0] // 2
            A4 = A.reshape(2, R, 2, R)
            for shift, s in zip(shifts, mats):
                B = np.einsum("ji,iajb->ab", s, A4)
                nk = (key[0] + shift[0], key[1] + shift[1], key[2] + shift[2])
                if nk in new:
                    new[nk] += B
                else:
                    new[nk] = B
        blocks = new
    coeffs = np.zeros(len(basis))
    for (x, y, z), val in blocks.items():
        v = complex(val[0, 0])
        if abs(v.imag) > 1e-9 * max(1.0, abs(v)):
            raise ValueError("rho is not Hermitian")
        coeffs[basis.index(x, y, z)] = v.real / math.sqrt(normalization(N, (x, y, z)))
    return SymState(basis, coeffs)


def reconstruct(state: SymState) -> np.ndarray:
    """Dense operator ``sum_i coeffs[i] Sigma_i`` (small N only)."""
    strings = dense_basis_strings(state.N)
    return sum(c * s for c, s in zip(state.coeffs, strings))


def dense_sector_matrix(K: np.ndarray, N: int) -> np.ndarray:
    """Brute-force ``Tr(Sigma_a K[Sigma_b])`` for a dense N-site superoperator."""
    strings = dense_basis_strings(N)
    V = np.stack([spin_ops.vectorize(s) for s in strings], axis=1)
    return V.conj().T @ K @ V
