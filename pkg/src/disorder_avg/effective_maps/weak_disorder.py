"""First-order weak-disorder generator at zero mean coupling.

Under ``H_bar = h sum_k X_k`` the Heisenberg-evolved coupling is
``Z_iZ_j(t) = f_0(t) Z_iZ_j + f_1(t) (Y_iZ_j + Z_iY_j) + f_2(t) Y_iY_j`` with
``f = (cos^2 2ht, sin 4ht / 2, sin^2 2ht)``. The doubly time-ordered integral
of the double commutator therefore reduces to nine fixed sector matrices
weighted by closed-form trigonometric integrals.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..numerics import gauss_legendre
from ..sym_basis import SymSuperOp, get_basis
from .local_sums import pair_product, pauli
from .model import DisorderModel

# f_a(t) = c + a cos(wt) + b sin(wt), w = 4h
TRIG_COEFFS = np.array(
    [
        [0.5, 0.5, 0.0],
        [0.0, 0.0, 0.5],
        [0.5, -0.5, 0.0],
    ]
)

PAIR_OPERATORS = (
    pauli((0, "Z"), (1, "Z")),
    ((1.0, ((0, "Y"), (1, "Z"))), (1.0, ((0, "Z"), (1, "Y")))),
    pauli((0, "Y"), (1, "Y")),
)


class UnsupportedModelError(ValueError):
    pass


def heisenberg_zz_commutator(t: float, h: float) -> tuple[float, float, float]:
    """Coefficients of ``[ZZ, .]``, ``[YZ + ZY, .]`` and ``[YY, .]`` in ``[Z_iZ_j(t), .]``."""
    return (math.cos(2 * h * t) ** 2, math.sin(4 * h * t) / 2, math.sin(2 * h * t) ** 2)


def _f(s, w):
    s = np.asarray(s, dtype=float)
    basis = np.stack([np.ones_like(s), np.cos(w * s), np.sin(w * s)], axis=-1)
    return basis @ TRIG_COEFFS.T


def _F_closed(s: float, w: float) -> np.ndarray:
    """``F_b(s) = int_0^s f_b``."""
    c, a, b = TRIG_COEFFS.T
    return c * s + a * math.sin(w * s) / w + b * (1 - math.cos(w * s)) / w


def trig_double_integrals(t: float, h: float, small: float = 1e-2) -> np.ndarray:
    """``I[a, b] = int_0^t dt' f_a(t') int_0^t' f_b``, closed form."""
    w = 4.0 * h
    if t == 0.0:
        return np.zeros((3, 3))
    if abs(w) * t < small:
        return trig_double_integrals_quadrature(t, h, nodes=16)
    sw, cw = math.sin(w * t), math.cos(w * t)
    E1 = t * t / 2
    Et = t
    Ec = sw / w
    Es = (1 - cw) / w
    Esc = t * sw / w + (cw - 1) / w**2
    Ess = sw / w**2 - t * cw / w
    Ecc = t / 2 + math.sin(2 * w * t) / (4 * w)
    Eqq = t / 2 - math.sin(2 * w * t) / (4 * w)
    Ecs = sw * sw / (2 * w)
    out = np.empty((3, 3))
    for i, (ca, aa, ba) in enumerate(TRIG_COEFFS):
        for j, (cb, ab, bb) in enumerate(TRIG_COEFFS):
            out[i, j] = (
                ca * cb * E1
                + ca * ab / w * Es
                + ca * bb / w * (Et - Ec)
                + aa * cb * Esc
                + aa * ab / w * Ecs
                + aa * bb / w * (Ec - Ecc)
                + ba * cb * Ess
                + ba * ab / w * Eqq
                + ba * bb / w * (Es - Ecs)
            )
    return out


def trig_double_integrals_quadrature(t: float, h: float, nodes: int = 64) -> np.ndarray:
    """Same integrals by nested Gauss-Legendre (test fallback)."""
    w = 4.0 * h

    def inner(s_arr):
        return np.stack([gauss_legendre(lambda u: _f(u, w), 0.0, s, nodes) for s in s_arr])

    def outer(s_arr):
        return _f(s_arr, w)[:, :, None] * inner(s_arr)[:, None, :]

    return gauss_legendre(outer, 0.0, t, nodes)


@lru_cache(maxsize=None)
def heisenberg_pair_products(N: int) -> tuple[tuple[SymSuperOp, ...], ...]:
    """``P[a][b] = sum_{i<j} [A_a, [A_b, .]]`` in the sector (real)."""
    return tuple(
        tuple(pair_product(N, a, b).real() for b in PAIR_OPERATORS) for a in PAIR_OPERATORS
    )


class WeakDisorderGenerator:
    """``O(t) = g^2 sum_{i<j} int_0^t dt' int_0^t' dt~ [ZZ(t'), [ZZ(t~), .]]``.

    ``g^2 = 1/N`` in the scaled convention. The factor sigma^2 is left to the
    caller.
    """

    def __init__(self, model: DisorderModel):
        if model.mean_J != 0.0:
            raise UnsupportedModelError("weak-disorder expansion implemented for mean_J = 0")
        self.model = model
        self.basis = get_basis(model.N)
        self.products = heisenberg_pair_products(model.N)
        self.g2 = model.coupling_scale**2

    def _combine(self, weights: np.ndarray) -> SymSuperOp:
        out = SymSuperOp.zeros(self.basis)
        for a in range(3):
            for b in range(3):
                if weights[a, b] != 0.0:
                    out = out + (self.g2 * weights[a, b]) * self.products[a][b]
        return out

    def __call__(self, t: float) -> SymSuperOp:
        if t < 0:
            raise ValueError("t must be >= 0")
        return self._combine(trig_double_integrals(t, self.model.h))

    def rate(self, t: float) -> SymSuperOp:
        """``dO/dt = g^2 sum [ZZ(t), int_0^t [ZZ(t~), .]]``."""
        w = 4.0 * self.model.h
        fa = _f(t, w)
        if abs(w) * t < 1e-2:
            Fb = gauss_legendre(lambda u: _f(u, w), 0.0, t, 16)
        else:
            Fb = _F_closed(t, w)
        return self._combine(np.outer(fa, Fb))


def weak_disorder_generator(t: float, model: DisorderModel) -> SymSuperOp:
    return WeakDisorderGenerator(model)(t)
