"""Symmetric initial states and magnetization readout from sector coefficients."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .sym_basis import SymState, get_basis

AXES = ("X", "Y", "Z")
NORMALIZATIONS = ("raw", "per_site", "string")


class NegativeVarianceError(ArithmeticError):
    pass


class NegativeVarianceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ObservableSpec:
    kind: str
    axis: str

    def __post_init__(self):
        if self.kind not in ("magnetization", "magnetization_variance"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")

    @property
    def name(self) -> str:
        prefix = "mag" if self.kind == "magnetization" else "var"
        return f"{prefix}_{self.axis.lower()}"

    @classmethod
    def parse(cls, name: str) -> "ObservableSpec":
        """Inverse of :attr:`name`, e.g. ``"var_z"``."""
        try:
            prefix, axis = name.split("_")
            kind = {"mag": "magnetization", "var": "magnetization_variance"}[prefix]
        except (ValueError, KeyError):
            raise ValueError(f"unrecognized observable name {name!r}") from None
        return cls(kind, axis.upper())


def _label(axis: str, count: int) -> tuple[int, int, int]:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    out = [0, 0, 0]
    out[AXES.index(axis)] = count
    return tuple(out)


def polarized_state(N: int, axis: str = "Z") -> SymState:
    """All spins along +axis: ``c(w on axis) = sqrt(C(N, w) / 2^N)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    basis = get_basis(N)
    coeffs = np.zeros(len(basis))
    for w in range(N + 1):
        coeffs[basis.index(*_label(axis, w))] = math.sqrt(math.comb(N, w) / 2**N)
    return SymState(basis, coeffs)


def maximally_mixed_state(N: int) -> SymState:
    basis = get_basis(N)
    coeffs = np.zeros(len(basis))
    coeffs[0] = 2 ** (-N / 2)
    return SymState(basis, coeffs)


def _component(state: SymState, axis: str, count: int) -> float:
    if count > state.N:
        return 0.0
    return float(np.real(state.coeffs[state.basis.index(*_label(axis, count))]))


def magnetization(state: SymState, axis: str = "Z", normalization: str = "raw") -> float:
    """``<sum_k P_k>``.

    ``per_site`` divides by N; ``string`` returns ``<Sigma>`` for the
    normalized single-site string itself.
    """
    N = state.N
    c = _component(state, axis, 1)
    if normalization == "string":
        return c
    m = math.sqrt(2**N * N) * c
    if normalization == "raw":
        return m
    if normalization == "per_site":
        return m / N
    raise ValueError(f"normalization must be one of {NORMALIZATIONS}")


def magnetization_second_moment(state: SymState, axis: str = "Z") -> float:
    N = state.N
    if N < 2:
        return float(N)
    return N + 2 * math.sqrt(2**N * math.comb(N, 2)) * _component(state, axis, 2)


def magnetization_variance(
    state: SymState,
    axis: str = "Z",
    per_site: bool = False,
    tol: float = 1e-9,
    strict: bool = True,
) -> float:
    """``<M^2> - <M>^2``; ``per_site`` divides by N^2 (variance of M/N).

    A variance below ``-tol`` means the state is not positive. It raises when
    ``strict``, otherwise it warns and the value is returned unchanged.
    """
    var = magnetization_second_moment(state, axis) - magnetization(state, axis) ** 2
    if var < -tol * max(1.0, state.N**2):
        msg = f"negative variance {var:.3e}"
        if strict:
            raise NegativeVarianceError(msg)
        warnings.warn(msg, NegativeVarianceWarning, stacklevel=2)
    return var / state.N**2 if per_site else var


def evaluate(state: SymState, names, strict: bool = False) -> dict[str, float]:
    """Values for observable names like ``mag_z`` or ``var_x_norm``."""
    out = {}
    for name in names:
        base, norm = (name[:-5], True) if name.endswith("_norm") else (name, False)
        spec = ObservableSpec.parse(base)
        if spec.kind == "magnetization":
            out[name] = magnetization(state, spec.axis, "per_site" if norm else "raw")
        else:
            out[name] = magnetization_variance(state, spec.axis, per_site=norm, strict=strict)
    return out
