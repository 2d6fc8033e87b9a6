"""Disorder-averaged commutator moments, generalized cumulants, truncated Lindbladians.

Write ``[H_lambda, .] = K + sigma_eff * sum_p xi_p C_p`` with ``K = [H_bar, .]``,
``C_p = [Z_i Z_j, .]`` and i.i.d. standard normal ``xi_p``. All ``C_p``
commute with one another, so Gaussian pairing leaves only

* ``K^n`` (no fluctuation),
* ``sigma^2 sum_{u<v} K^u G_{v-u-1} K^{n-1-v}`` with ``G_b = sum_p C_p K^b C_p``,
* ``3 sigma^4 S2^2`` at n = 4, ``S2 = sum_p C_p^2``.

Every piece is either a product of sector matrices or a few-site symmetric
sum from :mod:`local_sums`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from ..sym_basis import SymSuperOp, get_basis
from . import local_sums
from .model import DisorderModel

MAX_MOMENT = 4


class UnsupportedOrderError(ValueError):
    pass


@lru_cache(maxsize=None)
def _raw_sums(N: int) -> dict[str, SymSuperOp]:
    return {
        "X": local_sums.field_commutator(N),
        "C": local_sums.zz_commutator(N),
        "S2": local_sums.zz_commutator_squared(N),
        "T1": local_sums.zz_field_sandwich(N),
        "T2": local_sums.zz_field2_sandwich(N),
    }


def mean_commutator(model: DisorderModel) -> SymSuperOp:
    """``[H_bar, .]`` in the sector (purely imaginary entries)."""
    r = _raw_sums(model.N)
    return model.J_eff * r["C"] + model.h * r["X"]


def _sandwich(model: DisorderModel, b: int) -> SymSuperOp:
    """``G_b = sum_p C_p K^b C_p``, b <= 2."""
    r = _raw_sums(model.N)
    J, h = model.J_eff, model.h
    C, S2, T1 = r["C"], r["S2"], r["T1"]
    if b == 0:
        return S2
    if b == 1:
        return J * (C @ S2) + h * T1
    if b == 2:
        return J * J * (C @ C @ S2) + J * h * (C @ T1 + T1 @ C) + h * h * r["T2"]
    raise UnsupportedOrderError(f"sandwich order {b} not implemented")


def _power(K: SymSuperOp, n: int) -> SymSuperOp:
    # right-nested so that K^n and kappa_1 @ M_(n-1) round identically at sigma = 0
    if n == 0:
        return SymSuperOp.identity(K.basis, dtype=complex)
    out = K
    for _ in range(n - 1):
        out = K @ out
    return out


def moment_superop(n: int, model: DisorderModel) -> SymSuperOp:
    """Disorder average of ``[H_lambda, .]^n`` restricted to the sector."""
    if not 1 <= n <= MAX_MOMENT:
        raise UnsupportedOrderError(
            f"moments are implemented for 1 <= n <= {MAX_MOMENT}, got {n}"
        )
    K = mean_commutator(model)
    out = _power(K, n)
    s2 = model.sigma_eff**2
    if s2 == 0.0:
        return out
    for u in range(n):
        for v in range(u + 1, n):
            out = out + s2 * (_power(K, u) @ _sandwich(model, v - u - 1) @ _power(K, n - 1 - v))
    if n == 4:
        S2 = _raw_sums(model.N)["S2"]
        out = out + 3 * s2 * s2 * (S2 @ S2)
    return out


@dataclass
class CumulantSet:
    """Generalized cumulants ``kappas[n-1] = kappa_n`` (complex sector matrices)."""

    model: DisorderModel
    kappas: list[SymSuperOp] = field(default_factory=list)

    @property
    def max_order(self) -> int:
        """Highest Lindbladian truncation order these cumulants support."""
        return len(self.kappas) - 1


def cumulant(n: int, model: DisorderModel) -> SymSuperOp:
    """``kappa_n = M_n - sum_{j=1}^{n-1} C(n-1, j-1) kappa_j M_{n-j}``."""
    return cumulants(model, n - 1).kappas[n - 1]


def cumulants(model: DisorderModel, max_order: int) -> CumulantSet:
    """Cumulants kappa_1 .. kappa_{max_order+1}."""
    top = max_order + 1
    if top > MAX_MOMENT:
        raise UnsupportedOrderError(
            f"Lindbladian order {max_order} needs moment {top} > {MAX_MOMENT}"
        )
    moments = [moment_superop(n, model) for n in range(1, top + 1)]
    kappas: list[SymSuperOp] = []
    for n in range(1, top + 1):
        k = moments[n - 1]
        for j in range(1, n):
            k = k - math.comb(n - 1, j - 1) * (kappas[j - 1] @ moments[n - j - 1])
        kappas.append(k)
    return CumulantSet(model, kappas)


def lindbladian_terms(order: int, cumset: CumulantSet) -> list[SymSuperOp]:
    """Real Taylor coefficients ``L^(n) = (-i)^(n+1) kappa_(n+1)``, n = 0..order."""
    if order > cumset.max_order:
        raise UnsupportedOrderError(
            f"order {order} requires {order + 1} cumulants, have {len(cumset.kappas)}"
        )
    return [((-1j) ** (n + 1) * cumset.kappas[n]).real() for n in range(order + 1)]


def lindbladian(t: float, order: int, cumset: CumulantSet) -> SymSuperOp:
    """``L_t = sum_{n<=order} t^n/n! L^(n)`` as a real sector matrix."""
    terms = lindbladian_terms(order, cumset)
    out = SymSuperOp.zeros(get_basis(cumset.model.N))
    for n, L in enumerate(terms):
        out = out + (t**n / math.factorial(n)) * L
    return out
