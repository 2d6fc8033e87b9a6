"""Numerical kernels: adaptive ODE integration, exponential action, linear solves, quadrature."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp


class StiffnessError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (at t={t:.6g})")
        self.t = t


class ConvergenceError(ArithmeticError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


class ConditioningWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class OdeProblem:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    y0: np.ndarray
    t_span: tuple[float, float]
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.t_span[1] < self.t_span[0]:
            raise ValueError("time span must be ordered")


def integrate(problem: OdeProblem, output_times: Sequence[float]) -> list[np.ndarray]:
    """Explicit adaptive Runge-Kutta (Dormand-Prince 8(5,3)) with dense output.

    Returns one state vector per requested time.
    """
    times = np.asarray(output_times, dtype=float)
    if times.size == 0:
        return []
    if np.any(np.diff(times) < 0):
        raise ValueError("output times must be sorted")
    t0, t1 = problem.t_span
    if times[0] < t0 or times[-1] > t1:
        raise ValueError("output times outside the integration span")
    y0 = np.asarray(problem.y0, dtype=float)
    if t1 == t0:
        return [y0.copy() for _ in times]
    sol = solve_ivp(
        problem.rhs,
        (t0, t1),
        y0,
        method="DOP853",
        t_eval=times,
        rtol=problem.rtol,
        atol=problem.atol,
    )
    if sol.status != 0:
        ts = np.atleast_1d(np.asarray(sol.t, dtype=float))
        t_fail = float(ts[-1]) if ts.size else t0
        raise StiffnessError(f"integration failed: {sol.message}", t_fail)
    return [sol.y[:, i].copy() for i in range(sol.y.shape[1])]


def _onenorm(A) -> float:
    if sp.issparse(A):
        return float(abs(A).sum(axis=0).max()) if A.nnz else 0.0
    return float(np.abs(A).sum(axis=0).max()) if A.size else 0.0


def expm_action(A, v: np.ndarray, tol: float = 1e-12, theta: float = 3.5, max_terms: int = 80):
    """``exp(A) @ v`` by scaling and a truncated Taylor series per substep.

    ``A`` is split into ``s`` equal substeps with 1-norm at most ``theta``;
    each substep sums Taylor terms until two successive terms fall below
    ``tol`` relative to the partial sum.
    """
    v = np.asarray(v)
    norm = _onenorm(A)
    if not math.isfinite(norm):
        raise ValueError("matrix has non-finite entries")
    if norm == 0.0:
        return v.copy()
    s = max(1, math.ceil(norm / theta))
    f = v.astype(np.result_type(v, A.dtype), copy=True)
    for _ in range(s):
        term = f
        acc = f.copy()
        prev_small = False
        for k in range(1, max_terms + 1):
            term = (A @ term) / (s * k)
            acc += term
            small = np.linalg.norm(term) <= tol * np.linalg.norm(acc)
            if small and prev_small:
                break
            prev_small = small
        else:
            raise ConvergenceError(f"Taylor series did not converge in {max_terms} terms")
        f = acc
    return f


@dataclass
class SolveInfo:
    residual: float
    condition: float | None


def solve_linear(A, b: np.ndarray, return_info: bool = False, cond_limit: int = 2000):
    """Solve ``A x = b``; warns on a large residual, raises on singular A."""
    b = np.asarray(b)
    if sp.issparse(A):
        A = sp.csc_array(A)
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from exc
        x = lu.solve(b)
        cond = None
        if A.shape[0] <= cond_limit:
            cond = float(np.linalg.cond(A.toarray(), 1))
    else:
        A = np.asarray(A)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                lu = scipy.linalg.lu_factor(A, check_finite=True)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularMatrixError(str(exc)) from exc
        x = scipy.linalg.lu_solve(lu, b)
        cond = float(np.linalg.cond(A, 1)) if A.shape[0] <= cond_limit else None
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("solution is not finite")
    bnorm = np.linalg.norm(b)
    residual = float(np.linalg.norm(A @ x - b) / bnorm) if bnorm > 0 else 0.0
    if residual > 1e-10:
        warnings.warn(
            f"linear solve residual {residual:.2e} (condition {cond})", ConditioningWarning
        )
    if return_info:
        return x, SolveInfo(residual, cond)
    return x


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, nodes: int):
    """Integrate ``f`` over [a, b]; ``f`` is called once on the node array."""
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (b - a)
    pts = 0.5 * (b + a) + half * x
    vals = np.asarray(f(pts))
    return half * np.tensordot(w, vals, axes=(0, 0))
