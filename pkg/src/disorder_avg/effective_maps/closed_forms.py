"""Hand-written sector matrix elements of the first three cumulants.

Elements are listed for the real Lindbladian coefficients
``L^(n-1) = (-i)^n kappa_n``; the ``kappa_*_closed`` helpers restore the phase.
Input label (x, y, z), output label (x', y', z'); ``r = N - x - y - z``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from ..sym_basis import SymSuperOp, get_basis
from .model import DisorderModel


def _assemble(basis, entries) -> SymSuperOp:
    D = len(basis)
    rows, cols, vals = [], [], []
    for col, (x, y, z) in enumerate(basis.entries):
        for (dx, dy, dz), value in entries(x, y, z):
            if value == 0.0:
                continue
            rows.append(basis.index(x + dx, y + dy, z + dz))
            cols.append(col)
            vals.append(value)
    M = sp.coo_array((vals, (rows, cols)), shape=(D, D)).tocsr()
    return SymSuperOp(basis, M)


def coherent_generator(model: DisorderModel) -> SymSuperOp:
    """``-i [H_bar, .]``: the order-0 Lindbladian."""
    N, J, h = model.N, model.J_eff, model.h

    def entries(x, y, z):
        r = N - x - y - z
        out = []
        if J:
            if x >= 1 and r >= 1:
                out.append(((-1, 1, 1), 2 * J * math.sqrt(x * (y + 1) * (z + 1) * r)))
            if y >= 1 and r >= 1:
                out.append(((1, -1, 1), -2 * J * math.sqrt((x + 1) * y * (z + 1) * r)))
            if x >= 1 and z >= 1:
                out.append(((-1, 1, -1), 2 * J * math.sqrt(x * (y + 1) * z * (r + 1))))
            if y >= 1 and z >= 1:
                out.append(((1, -1, -1), -2 * J * math.sqrt((x + 1) * y * z * (r + 1))))
        if h:
            if y >= 1:
                out.append(((0, -1, 1), 2 * h * math.sqrt(y * (z + 1))))
            if z >= 1:
                out.append(((0, 1, -1), -2 * h * math.sqrt((y + 1) * z)))
        return out

    return _assemble(get_basis(N), entries)


def dephasing_generator(model: DisorderModel) -> SymSuperOp:
    """``-sigma_eff^2 sum_{i<j} [Z_iZ_j, .]^2``: the order-1 Lindbladian coefficient."""
    basis = get_basis(model.N)
    s2 = model.sigma_eff**2
    a = basis.xs + basis.ys
    diag = -4.0 * s2 * a * (model.N - a)
    return SymSuperOp(basis, sp.diags_array(diag.astype(float), format="csr"))


def field_dephasing_generator(model: DisorderModel) -> SymSuperOp:
    """Order-2 Lindbladian coefficient ``-kappa_3 / i``."""
    N, h, s2 = model.N, model.h, model.sigma_eff**2

    def entries(x, y, z):
        out = []
        if y >= 1:
            out.append(((0, -1, 1), 8 * s2 * h * (x + y - 1) * math.sqrt(y * (z + 1))))
        if z >= 1:
            out.append(((0, 1, -1), -8 * s2 * h * (N - x - y - 1) * math.sqrt((y + 1) * z)))
        return out

    return _assemble(get_basis(N), entries)


def kappa1_closed(model: DisorderModel) -> SymSuperOp:
    return 1j * coherent_generator(model)


def kappa2_closed(model: DisorderModel) -> SymSuperOp:
    return -1.0 * dephasing_generator(model)


def kappa3_closed(model: DisorderModel) -> SymSuperOp:
    return -1j * field_dephasing_generator(model)


def lindbladian_closed(t: float, model: DisorderModel) -> SymSuperOp:
    """Lindbladian through O(t^2) assembled from the closed forms."""
    return (
        coherent_generator(model)
        + t * dephasing_generator(model)
        + (t * t / 2) * field_dephasing_generator(model)
    )
