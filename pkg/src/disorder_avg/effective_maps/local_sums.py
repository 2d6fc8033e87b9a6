"""Projection of permutation-symmetric sums of few-site commutator words.

A *word* is a product of commutator superoperators ``[P_1, .][P_2, .]...``
whose Pauli strings are placed on abstract site variables. The word is summed
over all assignments of the variables to distinct-or-equal sites, subject to
"must differ" constraints. Each equality pattern (set partition of the
variables) is an m-site representative, projected with the number of ordered
placements of its m sites as multiplicity.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .. import spin_ops
from ..sym_basis import SymSuperOp, get_basis, project_representative

# A term is (coefficient, ((var, label), ...)); a factor is a tuple of terms
# whose sum is commuted with the state.
Term = tuple[complex, tuple[tuple[int, str], ...]]
Factor = tuple[Term, ...]
Word = tuple[Factor, ...]


def set_partitions(n: int) -> Iterator[list[int]]:
    """Restricted growth strings: ``labels[v]`` is the block of variable v."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i: int, nblocks: int):
        if i == n:
            yield list(labels)
            return
        for b in range(nblocks + 1):
            labels[i] = b
            yield from rec(i + 1, max(nblocks, b + 1))

    yield from rec(1, 1)


def _falling(N: int, m: int) -> int:
    out = 1
    for i in range(m):
        out *= N - i
    return out


def _factor_superop(factor: Factor, sites: Sequence[int], m: int) -> np.ndarray:
    op = np.zeros((2**m, 2**m), dtype=complex)
    for coef, placement in factor:
        op += coef * spin_ops.pauli_string(m, {sites[v] + 1: lab for v, lab in placement})
    return spin_ops.commutator_superop(op)


def _variables(word: Word) -> list[int]:
    return sorted({v for f in word for _, pl in f for v, _ in pl})


def word_representatives(word: Word, distinct: Sequence[tuple[int, int]] = ()):
    """Yield ``(m, K)`` for every admissible equality pattern of the word."""
    variables = _variables(word)
    if variables != list(range(len(variables))):
        raise ValueError("site variables must be numbered 0..n-1")
    constraints = set()
    for f in word:
        for _, pl in f:
            vs = [v for v, _ in pl]
            constraints.update((a, b) for i, a in enumerate(vs) for b in vs[i + 1 :])
    constraints.update(distinct)
    for labels in set_partitions(len(variables)):
        if any(labels[a] == labels[b] for a, b in constraints):
            continue
        m = max(labels) + 1 if labels else 0
        K = np.eye(4**m, dtype=complex)
        for f in word:
            K = K @ _factor_superop(f, labels, m)
        yield m, K


@lru_cache(maxsize=None)
def symmetric_word_sum(word: Word, N: int, distinct: tuple[tuple[int, int], ...] = ()) -> SymSuperOp:
    """Sector matrix of ``sum over site assignments`` of the word (complex)."""
    basis = get_basis(N)
    total = SymSuperOp.zeros(basis, dtype=complex)
    for m, K in word_representatives(word, distinct):
        if m > N:
            continue
        total = total + project_representative(K, m, basis, _falling(N, m))
    return total


def pauli(*placement: tuple[int, str], coef: complex = 1.0) -> Factor:
    return ((coef, tuple(placement)),)


ZZ = pauli((0, "Z"), (1, "Z"))
X_FIELD = pauli((2, "X"))


# Named sums on the raw Pauli operators (no coupling constants). Pair sums
# over i<j are written as 1/2 of the ordered sum over i != j.


def field_commutator(N: int, axis: str = "X") -> SymSuperOp:
    """``sum_k [P_k, .]``."""
    return symmetric_word_sum((pauli((0, axis)),), N)


def zz_commutator(N: int) -> SymSuperOp:
    """``sum_{i<j} [Z_i Z_j, .]``."""
    return 0.5 * symmetric_word_sum((ZZ,), N)


def zz_commutator_squared(N: int) -> SymSuperOp:
    """``sum_{i<j} [Z_i Z_j, .]^2``."""
    return 0.5 * symmetric_word_sum((ZZ, ZZ), N)


def zz_field_sandwich(N: int) -> SymSuperOp:
    """``sum_{i<j} sum_k [Z_iZ_j, .][X_k, .][Z_iZ_j, .]``."""
    return 0.5 * symmetric_word_sum((ZZ, X_FIELD, ZZ), N)


def zz_field2_sandwich(N: int) -> SymSuperOp:
    """``sum_{i<j} sum_{k,l} [Z_iZ_j, .][X_k, .][X_l, .][Z_iZ_j, .]``."""
    return 0.5 * symmetric_word_sum((ZZ, X_FIELD, pauli((3, "X")), ZZ), N)


def pair_product(N: int, a: Factor, b: Factor) -> SymSuperOp:
    """``sum_{i<j} [A_ij, .][B_ij, .]`` for swap-symmetric two-site A, B on vars (0, 1)."""
    return 0.5 * symmetric_word_sum((a, b), N)
