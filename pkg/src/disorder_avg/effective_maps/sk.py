"""Exact disorder-averaged map of the pure SK model (no transverse field).

All ``[Z_iZ_j, .]`` commute, so the Gaussian average factorizes pair by pair:
``Lambda_t = exp(-sum_p s_p^2 t^2/2 [Z_iZ_j, .]^2) exp(-i t [H_bar, .])``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .. import spin_ops
from ..sym_basis import SymSuperOp, get_basis
from .local_sums import zz_commutator, zz_commutator_squared

MAX_DENSE_N = 5


def _pair_params(values, N: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        out = np.full((N, N), float(arr))
    elif arr.shape == (N, N):
        out = arr.copy()
    else:
        raise ValueError(f"per-pair parameters must be scalar or {N}x{N}")
    return np.triu(out, 1)


def _uniform_value(mat: np.ndarray):
    iu = np.triu_indices(mat.shape[0], 1)
    vals = mat[iu]
    return float(vals[0]) if np.allclose(vals, vals[0], rtol=0, atol=0) else None


def _check_field(h: float):
    if h != 0.0:
        raise ValueError("the closed-form SK map requires h = 0")


def _prepare(per_pair_means, per_pair_stds, N, scaled):
    g = 1.0 / math.sqrt(N) if scaled else 1.0
    return _pair_params(per_pair_means, N) * g, _pair_params(per_pair_stds, N) * g


def sk_exact_generator(t, per_pair_means, per_pair_stds, N, h=0.0, scaled=True) -> SymSuperOp:
    """Real exponent ``log Lambda_t`` in the sector (uniform pairs only)."""
    _check_field(h)
    J, s = _prepare(per_pair_means, per_pair_stds, N, scaled)
    Ju, su = _uniform_value(J), _uniform_value(s)
    if Ju is None or su is None:
        raise ValueError("sector form requires identical parameters on every pair")
    coherent = (-1j * t * Ju) * zz_commutator(N)
    decoherence = (-0.5 * su * su * t * t) * zz_commutator_squared(N)
    return (coherent + decoherence).real()


def _dense_zz_diagonals(N: int):
    """Diagonal of ``[Z_iZ_j, .]`` in the vectorized computational basis, per pair."""
    z = 1 - 2 * ((np.arange(2**N)[:, None] >> np.arange(N - 1, -1, -1)) & 1)
    out = {}
    for i in range(N):
        for j in range(i + 1, N):
            zz = z[:, i] * z[:, j]
            out[i, j] = (zz[:, None] - zz[None, :]).reshape(-1)
    return out


def sk_exact_map(t, per_pair_means, per_pair_stds, N, h=0.0, scaled=True):
    """``Lambda_t`` as a sector matrix (uniform) or a dense 4^N superoperator."""
    _check_field(h)
    J, s = _prepare(per_pair_means, per_pair_stds, N, scaled)
    if _uniform_value(J) is not None and _uniform_value(s) is not None:
        G = sk_exact_generator(t, per_pair_means, per_pair_stds, N, h, scaled)
        return SymSuperOp(get_basis(N), scipy.linalg.expm(G.toarray()))
    if N > MAX_DENSE_N:
        raise MemoryError(f"dense SK map limited to N <= {MAX_DENSE_N}")
    exponent = np.zeros(4**N, dtype=complex)
    for (i, j), d in _dense_zz_diagonals(N).items():
        exponent += -0.5 * s[i, j] ** 2 * t * t * d * d - 1j * t * J[i, j] * d
    return np.diag(np.exp(exponent))


def sk_lindbladian(t, per_pair_means, per_pair_stds, N, h=0.0, scaled=True):
    """Time-local generator ``-i[H_bar, .] + sum 2 s^2 t (ZZ . ZZ - rho)``."""
    _check_field(h)
    J, s = _prepare(per_pair_means, per_pair_stds, N, scaled)
    Ju, su = _uniform_value(J), _uniform_value(s)
    if Ju is not None and su is not None:
        # ZZ rho ZZ - rho = -[ZZ, [ZZ, rho]] / 2
        return ((-1j * Ju) * zz_commutator(N) + (-su * su * t) * zz_commutator_squared(N)).real()
    if N > MAX_DENSE_N:
        raise MemoryError(f"dense SK generator limited to N <= {MAX_DENSE_N}")
    dim = 2**N
    Hbar = np.zeros((dim, dim), dtype=complex)
    L = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(N):
        for j in range(i + 1, N):
            zz = spin_ops.pauli_string(N, {i + 1: "Z", j + 1: "Z"})
            Hbar += J[i, j] * zz
            jump = np.kron(zz, zz.T) - 0.5 * (
                spin_ops.left_superop(zz @ zz) + spin_ops.right_superop(zz @ zz)
            )
            L += 2 * s[i, j] ** 2 * t * jump
    return L - 1j * spin_ops.commutator_superop(Hbar)
