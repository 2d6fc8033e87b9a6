"""Brute-force disorder averages on the full 2^N Hilbert space.

Each shot draws the couplings, evolves a pure state exactly and records the
first two moments of the total magnetization. Small systems diagonalize the
real-symmetric Hamiltonian; larger ones use a Chebyshev expansion of the
propagator, which reaches machine precision at a fraction of the cost of a
dense eigendecomposition.
"""

from __future__ import annotations

import itertools
import math
from functools import cached_property, lru_cache
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .effective_maps import DisorderModel

MAX_N = 12
EIGH_MAX_N = 8
QUADRATURE_MAX_N = 3
DENSITY_MAX_N = 5
BATCH = 32
AXES = ("X", "Y", "Z")


class FeasibilityError(ValueError):
    """System too large for the dense full-space oracle."""


# --- couplings ----------------------------------------------------------------


@lru_cache(maxsize=None)
def _upper(N: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(N, 1)


@dataclass
class ShotSampler:
    """Reproducible coupling draws; shot ``k`` uses the substream ``(seed, k)``."""

    model: DisorderModel
    seed: int = 0
    counter: int = 0

    def couplings(self, shot: int) -> np.ndarray:
        """Upper-triangular raw couplings ``J_ij ~ Normal(mean_J, sigma^2)``."""
        N = self.model.N
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, shot]))
        iu = _upper(N)
        J = np.zeros((N, N))
        J[iu] = self.model.mean_J + self.model.sigma * rng.standard_normal(iu[0].size)
        return J


def sample_couplings(sampler: ShotSampler) -> np.ndarray:
    J = sampler.couplings(sampler.counter)
    sampler.counter += 1
    return J


# --- full-space operators --------------------------------------------------------


@dataclass(frozen=True)
class _Lattice:
    N: int
    spins: np.ndarray  # (dim, N) entries +-1, site 1 most significant
    flips: np.ndarray  # (N, dim) index of the state with site k flipped
    zz: np.ndarray  # (dim, pairs) Z_i Z_j eigenvalues for i < j

    @classmethod
    def build(cls, N: int) -> "_Lattice":
        idx = np.arange(2**N)
        shifts = np.arange(N - 1, -1, -1)
        bits = (idx[:, None] >> shifts) & 1
        flips = idx[None, :] ^ (1 << shifts)[:, None]
        spins = 1 - 2 * bits
        iu = _upper(N)
        return cls(N, spins, flips, spins[:, iu[0]] * spins[:, iu[1]])

    @cached_property
    def field(self) -> np.ndarray:
        """Dense ``sum_k X_k``, built on first use (dense paths only)."""
        dim = 2**self.N
        out = np.zeros((dim, dim))
        rows = np.arange(dim)
        for k in range(self.N):
            out[rows, self.flips[k]] += 1.0
        return out

    def zz_diagonal(self, J: np.ndarray, scale: float) -> np.ndarray:
        """Diagonal of ``scale * sum_{i<j} J_ij Z_i Z_j``; works on stacked J."""
        iu = _upper(self.N)
        Jp = np.asarray(J)[..., iu[0], iu[1]]
        return scale * Jp @ self.zz.T

    def hamiltonian(self, J: np.ndarray, h: float, scale: float) -> np.ndarray:
        """Dense H for one J (d, d) or a stack (B, d, d)."""
        diag = self.zz_diagonal(J, scale)
        H = h * np.broadcast_to(self.field, diag.shape[:-1] + self.field.shape).copy()
        r = np.arange(self.field.shape[0])
        H[..., r, r] += diag
        return H


_LATTICES: dict[int, _Lattice] = {}


def _lattice(N: int) -> _Lattice:
    if N not in _LATTICES:
        _LATTICES[N] = _Lattice.build(N)
    return _LATTICES[N]


def polarized_vector(N: int, axis: str = "Z") -> np.ndarray:
    """Product state with every spin along +axis."""
    single = {
        "X": np.array([1, 1]) / math.sqrt(2),
        "Y": np.array([1, 1j]) / math.sqrt(2),
        "Z": np.array([1, 0]),
    }[axis]
    out = np.ones(1, dtype=complex)
    for _ in range(N):
        out = np.kron(out, single)
    return out


def total_spin_operator(N: int, axis: str) -> np.ndarray:
    lat = _lattice(N)
    dim = 2**N
    M = np.zeros((dim, dim), dtype=complex)
    rows = np.arange(dim)
    if axis == "Z":
        M[rows, rows] = lat.spins.sum(axis=1)
        return M
    for k in range(N):
        if axis == "X":
            M[rows, lat.flips[k]] += 1
        else:
            # <b|Y_k|b'> = -i if site k of b is up, +i if down
            M[rows, lat.flips[k]] += -1j * lat.spins[:, k]
    return M


def _apply_total_spin(psi: np.ndarray, lat: _Lattice, axis: str) -> np.ndarray:
    if axis == "Z":
        return psi * lat.spins.sum(axis=1)
    lead = psi.shape[:-1]
    view = psi.reshape(lead + (2,) * lat.N)
    out = np.zeros(view.shape, dtype=complex)
    for k in range(lat.N):
        part = np.flip(view, axis=len(lead) + k)
        if axis == "X":
            out += part
        else:
            # <b|Y_k|b'> = -i if site k of b is up, +i if down
            shape = [1] * lat.N
            shape[k] = 2
            out += np.array([-1j, 1j]).reshape(shape) * part
    return out.reshape(psi.shape)


def _moments(psi: np.ndarray, lat: _Lattice, axes: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """``<M>`` and ``<M^2>`` per axis; trailing axis of ``psi`` is the Hilbert space."""
    m1, m2 = [], []
    for axis in axes:
        if axis == "Z":
            p = np.abs(psi) ** 2
            mz = lat.spins.sum(axis=1)
            m1.append(p @ mz)
            m2.append(p @ (mz * mz))
        else:
            Mpsi = _apply_total_spin(psi, lat, axis)
            m1.append(np.einsum("...i,...i->...", psi.conj(), Mpsi).real)
            m2.append(np.einsum("...i,...i->...", Mpsi.conj(), Mpsi).real)
    return np.stack(m1, axis=-1), np.stack(m2, axis=-1)


# --- propagation -------------------------------------------------------------------


def _propagate_eigh(H: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``psi(t)`` for stacked Hamiltonians ``H`` (B, d, d) -> (B, T, d)."""
    w, V = np.linalg.eigh(H)
    amp = np.einsum("bji,j->bi", V, psi0)
    phases = np.exp(-1j * w[:, None, :] * times[None, :, None])
    return np.einsum("bij,btj->bti", V, phases * amp[:, None, :])


def bessel_j_sequence(z, K: int, extra: int = 40) -> np.ndarray:
    """``J_0(z) .. J_{K-1}(z)`` for every entry of ``z`` (shape (K,) + z.shape).

    Miller's backward recurrence started well above the largest argument,
    normalized by ``J_0 + 2 sum J_2k = 1``.
    """
    z = np.asarray(z, dtype=float)
    flat = z.reshape(-1)
    out = np.zeros((K, flat.size))
    start = K + extra + int(math.ceil(flat.max(initial=0.0)))
    nz = flat > 0
    zz = np.where(nz, flat, 1.0)
    j_next = np.zeros_like(zz)
    j_cur = np.full_like(zz, 1e-300)
    norm = np.zeros_like(zz)
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / zz) * j_cur - j_next  # J_{k-1}
        if k - 1 < K:
            out[k - 1] = j_prev
        if (k - 1) % 2 == 0:
            norm += (1.0 if k == 1 else 2.0) * j_prev
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > 1e250
        if big.any():
            s = np.where(big, 1e-250, 1.0)
            j_cur *= s
            j_next *= s
            norm *= s
            out *= s
    out /= norm
    out[:, ~nz] = 0.0
    out[0, ~nz] = 1.0
    return out.reshape((K,) + z.shape)


def _chebyshev_terms(radius: float) -> int:
    return int(math.ceil(radius + 12.0 * radius ** (1.0 / 3.0) + 30))


def _propagate_chebyshev(
    diag: np.ndarray, h: float, lat: _Lattice, psi0: np.ndarray, times: np.ndarray
) -> np.ndarray:
    """Chebyshev expansion of ``exp(-iHt) psi0`` for a batch sharing the field term.

    ``diag`` (B, d) holds each shot's Ising energies. Each shot uses its own
    spectral bound ``E = max|diag| + |h| N`` so its result does not depend on
    the rest of the batch. The recursion runs on real vectors since H is real.
    """
    B, dim = diag.shape
    E = np.abs(diag).max(axis=1) + abs(h) * lat.N + 1e-12
    K = _chebyshev_terms(float(E.max() * times.max())) + 1
    parts = [p for p in (psi0.real, psi0.imag) if np.any(p)]
    if not parts:
        raise ValueError("zero initial state")
    scale_d = diag / E[:, None]
    scale_h = h / E

    def apply(v):
        # flipping site k reverses axis k of the (B, 2, ..., 2) view
        t = v.reshape((B,) + (2,) * lat.N)
        acc = np.zeros_like(t)
        for k in range(lat.N):
            acc += np.flip(t, axis=k + 1)
        return scale_d * v + scale_h[:, None] * acc.reshape(B, dim)

    # c_k(t) = (2 - delta_k0) (-i)^k J_k(E t): even k real, odd k imaginary
    ks = np.arange(K)
    z = E[:, None, None] * times[None, :, None]
    coef = np.moveaxis(bessel_j_sequence(z[..., 0], K), 0, -1) * np.where(ks == 0, 1.0, 2.0)
    sign = np.where(ks % 4 < 2, 1.0, -1.0)  # real part for even k, -imag part for odd k
    C_even = np.ascontiguousarray((coef * sign)[..., 0::2])
    C_odd = np.ascontiguousarray(-(coef * sign)[..., 1::2])
    psi_t = np.zeros((B, times.size, dim), dtype=complex)
    for weight, part in zip((1.0, 1j), (psi0.real, psi0.imag)):
        if not np.any(part):
            continue
        even = np.empty((B, (K + 1) // 2, dim))
        odd = np.empty((B, K // 2, dim))
        prev2 = np.broadcast_to(part, (B, dim)).copy()
        even[:, 0] = prev2
        prev1 = apply(prev2)
        if K > 1:
            odd[:, 0] = prev1
        for k in range(2, K):
            cur = 2.0 * apply(prev1) - prev2
            (even if k % 2 == 0 else odd)[:, k // 2] = cur
            prev2, prev1 = prev1, cur
        psi_t += weight * (np.matmul(C_even, even) + 1j * np.matmul(C_odd, odd))
    return psi_t


def _evolve_batch(
    Js: np.ndarray, model: DisorderModel, psi0: np.ndarray, times: np.ndarray, method: str | None = None
) -> np.ndarray:
    N = model.N
    lat = _lattice(N)
    method = method or _default_method(model)
    if method == "diagonal":
        # without a field H is already diagonal in the computational basis
        if model.h != 0.0:
            raise ValueError("diagonal propagation requires h = 0")
        diag = np.atleast_2d(lat.zz_diagonal(Js, model.coupling_scale))
        return np.exp(-1j * diag[:, None, :] * times[None, :, None]) * psi0
    if method == "eigh":
        return _propagate_eigh(lat.hamiltonian(Js, model.h, model.coupling_scale), psi0, times)
    if method == "chebyshev":
        diag = lat.zz_diagonal(Js, model.coupling_scale)
        return _propagate_chebyshev(np.atleast_2d(diag), model.h, lat, psi0, times)
    raise ValueError(f"unknown propagation method {method!r}")


def _default_method(model: DisorderModel) -> str:
    if model.h == 0.0:
        return "diagonal"
    return "eigh" if model.N <= EIGH_MAX_N else "chebyshev"


def _check_size(N: int, limit: int = MAX_N):
    if N > limit:
        raise FeasibilityError(f"N={N} exceeds the dense limit N <= {limit}")


def _axes(observables: Sequence[str]) -> list[str]:
    """Axes needed for observable names such as ``mag_z`` or ``var_x_norm``."""
    axes = []
    for name in observables:
        parts = name.split("_")
        if len(parts) < 2 or parts[0] not in ("mag", "var") or parts[1].upper() not in AXES:
            raise ValueError(f"unrecognized observable name {name!r}")
        if parts[1].upper() not in axes:
            axes.append(parts[1].upper())
    return axes


def _combine(name: str, axes: list[str], m1: np.ndarray, m2: np.ndarray, N: int) -> np.ndarray:
    parts = name.split("_")
    a = axes.index(parts[1].upper())
    norm = name.endswith("_norm")
    if parts[0] == "mag":
        out = m1[..., a]
        return out / N if norm else out
    out = m2[..., a] - m1[..., a] ** 2
    return out / N**2 if norm else out


def evolve_shot(
    J: np.ndarray,
    model: DisorderModel,
    psi0: np.ndarray,
    times: Sequence[float],
    observables: Sequence[str] = ("mag_z", "var_z"),
    method: str | None = None,
) -> dict[str, np.ndarray]:
    """Observable values along one realization.

    ``psi0`` is a state vector or a density matrix (the latter for
    N <= 8). ``var_*`` is the quantum variance of this single shot.
    """
    _check_size(model.N)
    times = np.asarray(times, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    axes = _axes(observables)
    lat = _lattice(model.N)
    if psi0.ndim == 2:
        _check_size(model.N, EIGH_MAX_N)
        H = lat.hamiltonian(J, model.h, model.coupling_scale)
        w, V = np.linalg.eigh(H)
        m1, m2 = [], []
        ops = {a: total_spin_operator(model.N, a) for a in axes}
        for t in times:
            U = (V * np.exp(-1j * w * t)) @ V.T
            rho = U @ psi0 @ U.conj().T
            m1.append([np.trace(ops[a] @ rho).real for a in axes])
            m2.append([np.trace(ops[a] @ ops[a] @ rho).real for a in axes])
        m1, m2 = np.array(m1), np.array(m2)
    else:
        psi_t = _evolve_batch(np.asarray(J)[None], model, psi0, times, method)[0]
        m1, m2 = _moments(psi_t, lat, axes)
    return {name: _combine(name, axes, m1, m2, model.N) for name in observables}


# --- averages ------------------------------------------------------------------------


@dataclass
class McEstimate:
    times: np.ndarray
    mean: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    shots: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, se in self.stderr.items():
            if not np.all(np.isfinite(se)) or not np.all(np.isfinite(self.mean[name])):
                raise ArithmeticError(f"non-finite estimate for {name}")


def shot_moments(
    model: DisorderModel,
    shots: int,
    psi0: np.ndarray,
    times: Sequence[float],
    axes: Sequence[str],
    seed: int = 0,
    batch: int = BATCH,
    method: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-shot ``<M>`` and ``<M^2>``, arrays of shape (shots, T, axes)."""
    _check_size(model.N)
    times = np.asarray(times, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    lat = _lattice(model.N)
    sampler = ShotSampler(model, seed)
    m1 = np.empty((shots, times.size, len(axes)))
    m2 = np.empty_like(m1)
    for start in range(0, shots, batch):
        stop = min(start + batch, shots)
        Js = np.stack([sampler.couplings(k) for k in range(start, stop)])
        psi_t = _evolve_batch(Js, model, psi0, times, method)
        m1[start:stop], m2[start:stop] = _moments(psi_t, lat, axes)
    return m1, m2


def _estimate(m1, m2, weights, observables, axes, N):
    """Means and delta-method standard errors from per-shot moments."""
    mean1 = np.tensordot(weights, m1, axes=(0, 0))
    mean2 = np.tensordot(weights, m2, axes=(0, 0))
    S = m1.shape[0]
    mean, stderr = {}, {}
    for name in observables:
        a = axes.index(name.split("_")[1].upper())
        norm = name.endswith("_norm")
        if name.startswith("mag"):
            value = mean1[..., a]
            influence = m1[..., a]
            div = N if norm else 1
        else:
            value = mean2[..., a] - mean1[..., a] ** 2
            # linearization of E[m2] - E[m1]^2 around the sample means
            influence = m2[..., a] - 2.0 * mean1[None, :, a] * m1[..., a]
            div = N**2 if norm else 1
        se = influence.std(axis=0, ddof=1) / math.sqrt(S) if S > 1 else np.zeros_like(value)
        mean[name] = value / div
        stderr[name] = se / div
    return mean, stderr


def monte_carlo_average(
    model: DisorderModel,
    shots: int,
    psi0: np.ndarray,
    times: Sequence[float],
    observables: Sequence[str] = ("mag_z", "var_z"),
    seed: int = 0,
    method: str | None = None,
) -> McEstimate:
    """Sample-mean disorder average with standard errors ``std / sqrt(shots)``.

    Variances are those of the averaged state, ``E[<M^2>] - E[<M>]^2``.
    """
    if shots < 2:
        raise ValueError("need at least two shots")
    axes = _axes(observables)
    times = np.asarray(times, dtype=float)
    m1, m2 = shot_moments(model, shots, psi0, times, axes, seed, method=method)
    weights = np.full(shots, 1.0 / shots)
    mean, stderr = _estimate(m1, m2, weights, list(observables), axes, model.N)
    meta = {"seed": seed, "shots": shots, "propagator": method or _default_method(model)}
    return McEstimate(times, mean, stderr, shots, meta)


def quadrature_average(
    model: DisorderModel,
    psi0: np.ndarray,
    times: Sequence[float],
    observables: Sequence[str] = ("mag_z", "var_z"),
    nodes: int = 32,
) -> dict[str, np.ndarray]:
    """Deterministic Gauss-Hermite average over every independent coupling."""
    _check_size(model.N, QUADRATURE_MAX_N)
    N = model.N
    axes = _axes(observables)
    times = np.asarray(times, dtype=float)
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    iu = _upper(N)
    grid = np.array(list(itertools.product(range(nodes), repeat=iu[0].size)))
    Js = np.zeros((grid.shape[0], N, N))
    Js[:, iu[0], iu[1]] = model.mean_J + model.sigma * x[grid]
    weights = np.prod(w[grid], axis=1)
    psi_t = _evolve_batch(Js, model, np.asarray(psi0, dtype=complex), times, "eigh")
    m1, m2 = _moments(psi_t, _lattice(N), axes)
    mean1 = np.tensordot(weights, m1, axes=(0, 0))
    mean2 = np.tensordot(weights, m2, axes=(0, 0))
    return {name: _combine(name, axes, mean1, mean2, N) for name in observables}


@dataclass
class DensityEstimate:
    times: np.ndarray
    mean: np.ndarray  # (T, d, d)
    stderr: np.ndarray  # elementwise, of real and imaginary parts combined
    shots: int


def monte_carlo_density(
    model: DisorderModel,
    shots: int,
    psi0: np.ndarray,
    times: Sequence[float],
    seed: int = 0,
) -> DensityEstimate:
    """Averaged full density matrix (small N only)."""
    _check_size(model.N, DENSITY_MAX_N)
    if shots < 2:
        raise ValueError("need at least two shots")
    times = np.asarray(times, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    sampler = ShotSampler(model, seed)
    dim = 2**model.N
    s1 = np.zeros((times.size, dim, dim), dtype=complex)
    s2 = np.zeros((times.size, dim, dim))
    for start in range(0, shots, BATCH):
        stop = min(start + BATCH, shots)
        Js = np.stack([sampler.couplings(k) for k in range(start, stop)])
        psi_t = _evolve_batch(Js, model, psi0, times, "eigh")
        rho = np.einsum("bti,btj->btij", psi_t, psi_t.conj())
        s1 += rho.sum(axis=0)
        s2 += (np.abs(rho) ** 2).sum(axis=0)
    mean = s1 / shots
    var = np.maximum(s2 / shots - np.abs(mean) ** 2, 0.0) * shots / (shots - 1)
    return DensityEstimate(times, mean, np.sqrt(var / shots), shots)
