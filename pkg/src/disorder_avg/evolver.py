"""Time evolution of disorder-averaged states in the symmetric sector.

Three routes share the :class:`Trajectory` output type:

* short-time: integrate ``d rho/dt = L_t rho`` with the truncated Lindbladian;
* weak disorder: apply the regularized first-order map at each output time;
* SK exact: apply the closed-form map (h = 0 only).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from importlib import metadata
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import numerics
from .effective_maps import (
    DisorderModel,
    WeakDisorderGenerator,
    cumulants,
    lindbladian_terms,
    mean_commutator,
    sk_exact_generator,
)
from .sym_basis import SymState, SymSuperOp

MAX_SHORT_TIME_ORDER = 3
REGULARIZATIONS = ("none", "exponential", "inverse")


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass(frozen=True)
class Method:
    variant: str
    order: int | None = None
    regularization: str | None = None

    def __post_init__(self):
        if self.variant == "short_time":
            if self.order is None or not 0 <= self.order <= MAX_SHORT_TIME_ORDER:
                raise ValueError(f"short_time order must be in 0..{MAX_SHORT_TIME_ORDER}")
        elif self.variant == "weak_disorder":
            if self.regularization not in REGULARIZATIONS:
                raise ValueError(f"regularization must be one of {REGULARIZATIONS}")
        elif self.variant != "sk_exact":
            raise ValueError(f"unknown method variant {self.variant!r}")

    @property
    def label(self) -> str:
        if self.variant == "short_time":
            return f"short_time_o{self.order}"
        if self.variant == "weak_disorder":
            return f"weak_disorder_{self.regularization}"
        return "sk_exact"


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[SymState]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.states) != self.times.size:
            raise ValueError("one state per output time required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def check(self, tol: float = 1e-9) -> None:
        for s in self.states:
            s.check(tol)

    def observable(self, fn: Callable[[SymState], float]) -> np.ndarray:
        return np.array([fn(s) for s in self.states])


def _validate_times(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("need a non-empty 1-d time grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    return times


def _meta(method: Method, model: DisorderModel, **extra) -> dict:
    out = {
        "method": method.label,
        "model": asdict(model),
        "code_version": code_version(),
    }
    out.update(extra)
    return out


def _real_coeffs(v: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    if np.iscomplexobj(v):
        if np.abs(v.imag).max(initial=0.0) > atol:
            raise ArithmeticError("imaginary residue in evolved coefficients")
        v = v.real
    return np.ascontiguousarray(v, dtype=float)


def evolve_short_time(
    model: DisorderModel,
    rho0: SymState,
    order: int,
    times: Sequence[float],
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> Trajectory:
    """Integrate ``d rho/dt = sum_{n<=order} t^n/n! L^(n) rho`` from t = 0."""
    method = Method("short_time", order=order)
    times = _validate_times(times)
    terms = [L.data for L in lindbladian_terms(order, cumulants(model, order))]
    facts = [math.factorial(n) for n in range(order + 1)]

    def rhs(t, y):
        out = terms[0] @ y
        for n in range(1, order + 1):
            out += (t**n / facts[n]) * (terms[n] @ y)
        return out

    problem = numerics.OdeProblem(rhs, _real_coeffs(rho0.coeffs), (0.0, float(times[-1])), rtol, atol)
    ys = numerics.integrate(problem, times)
    states = [SymState(rho0.basis, y) for y in ys]
    return Trajectory(times, states, _meta(method, model, rtol=rtol, atol=atol))


def field_generator(model: DisorderModel) -> SymSuperOp:
    """Real sector matrix of ``-i[H_bar, .]``."""
    return (-1j * mean_commutator(model)).real()


def _reg_none(O, sigma2, rho):
    return rho - sigma2 * (O @ rho), {}


def _reg_exponential(O, sigma2, rho):
    return numerics.expm_action(-sigma2 * O, rho), {}


def _reg_inverse(O, sigma2, rho):
    A = sp.identity(O.shape[0], format="csr") + sigma2 * O
    x, info = numerics.solve_linear(A, rho, return_info=True)
    return x, {"residual": info.residual, "condition": info.condition}


# Regularizing functions f applied to the truncated inner expansion.
REGULARIZATION_STRATEGIES: dict[str, Callable] = {
    "none": _reg_none,
    "exponential": _reg_exponential,
    "inverse": _reg_inverse,
}


def evolve_weak_disorder(
    model: DisorderModel,
    rho0: SymState,
    regularization: str,
    times: Sequence[float],
) -> Trajectory:
    """``rho(t) = U_bar_t f(sigma^2 O(t)) rho0`` at every output time."""
    method = Method("weak_disorder", regularization=regularization)
    times = _validate_times(times)
    gen = WeakDisorderGenerator(model)
    strategy = REGULARIZATION_STRATEGIES[regularization]
    U_gen = field_generator(model).data
    sigma2 = model.sigma**2
    rho = _real_coeffs(rho0.coeffs)
    states, diagnostics = [], []
    for t in times:
        O = gen(float(t)).data
        v, diag = strategy(O, sigma2, rho)
        if t > 0:
            v = numerics.expm_action(float(t) * U_gen, v)
        states.append(SymState(rho0.basis, _real_coeffs(v)))
        diagnostics.append(diag)
    meta = _meta(method, model)
    if regularization == "inverse":
        meta["conditioning"] = [d.get("condition") for d in diagnostics]
        meta["residual"] = [d.get("residual") for d in diagnostics]
    return Trajectory(times, states, meta)


def evolve_sk_exact(model: DisorderModel, rho0: SymState, times: Sequence[float]) -> Trajectory:
    """Closed-form SK map with identical mean/std on every pair."""
    if model.h != 0.0:
        raise ValueError("exact SK evolution requires h = 0")
    method = Method("sk_exact")
    times = _validate_times(times)
    rho = _real_coeffs(rho0.coeffs)
    states = []
    for t in times:
        G = sk_exact_generator(float(t), model.mean_J, model.sigma, model.N, 0.0, model.scaled)
        v = scipy.linalg.expm(G.toarray()) @ rho
        states.append(SymState(rho0.basis, v))
    return Trajectory(times, states, _meta(method, model))


def evolve(method: Method, model: DisorderModel, rho0: SymState, times) -> Trajectory:
    if method.variant == "short_time":
        return evolve_short_time(model, rho0, method.order, times)
    if method.variant == "weak_disorder":
        return evolve_weak_disorder(model, rho0, method.regularization, times)
    return evolve_sk_exact(model, rho0, times)


def t_bound(model: DisorderModel | None = None, *, N: int | None = None, sigma: float | None = None) -> float:
    """``(3 / (4 sigma^2 (N - 1)))^(1/3)``; +inf without disorder."""
    if model is not None:
        N, sigma = model.N, model.sigma
    if N is None or sigma is None:
        raise TypeError("pass a model or both N and sigma")
    if sigma < 0 or N < 2:
        raise ValueError("need sigma >= 0 and N >= 2")
    if sigma == 0:
        return math.inf
    return (3.0 / (4.0 * sigma * sigma * (N - 1))) ** (1.0 / 3.0)
