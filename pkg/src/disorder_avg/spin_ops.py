"""Few-site dense operator algebra and the vectorized superoperator calculus.

Conventions used everywhere in the package:

* site 1 is the leftmost Kronecker factor;
* vectorization is row-major, ``vec(rho) = rho.reshape(-1)``, so that
  ``vec(A @ rho @ B) == kron(A, B.T) @ vec(rho)``;
* the commutator superoperator is ``[A, .] = kron(A, 1) - kron(1, A.T)``.
"""

from __future__ import annotations

from functools import reduce
from typing import Mapping, Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_LABELS = ("I", "X", "Y", "Z")


def pauli_string(k: int, assignment: Mapping[int, str]) -> np.ndarray:
    """Tensor product on ``k`` sites; ``assignment`` maps 1-based site -> 'X'|'Y'|'Z'."""
    if k < 1:
        raise ValueError("site count must be >= 1")
    factors = [I2] * k
    for site, label in assignment.items():
        if not 1 <= site <= k:
            raise ValueError(f"site {site} out of range 1..{k}")
        if label not in PAULI:
            raise ValueError(f"unknown Pauli label {label!r}")
        factors[site - 1] = PAULI[label]
    return reduce(np.kron, factors)


def pauli_from_labels(labels: Sequence[str]) -> np.ndarray:
    return reduce(np.kron, [PAULI[s] for s in labels])


def vectorize(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a square matrix")
    return rho.reshape(-1)


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError("vector length is not a perfect square")
    return v.reshape(d, d)


def left_superop(A: np.ndarray) -> np.ndarray:
    return np.kron(A, np.eye(A.shape[0]))


def right_superop(B: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> rho @ B``."""
    return np.kron(np.eye(B.shape[0]), B.T)


def commutator_superop(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    eye = np.eye(A.shape[0])
    return np.kron(A, eye) - np.kron(eye, A.T)


def is_hermitian(A: np.ndarray, atol: float = 1e-12) -> bool:
    return np.allclose(A, A.conj().T, atol=atol, rtol=0.0)


def unitary_operator(H: np.ndarray, t: float) -> np.ndarray:
    if not is_hermitian(H):
        raise ValueError("H must be Hermitian")
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def unitary_superop(H: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t [H, .])`` as ``U (x) U*``."""
    U = unitary_operator(H, t)
    return np.kron(U, U.conj())


def permutation_operator(n: int, perm: Sequence[int]) -> np.ndarray:
    """Unitary that moves the state of site ``i`` to site ``perm[i]`` (0-based)."""
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError("not a permutation")
    dim = 2**n
    idx = np.arange(dim)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
    new_bits = np.empty_like(bits)
    new_bits[:, perm] = bits
    weights = 1 << np.arange(n - 1, -1, -1)
    target = new_bits @ weights
    P = np.zeros((dim, dim))
    P[target, idx] = 1.0
    return P


def conjugation_superop(T: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> T rho T^dagger``."""
    return np.kron(T, T.conj())
