import itertools
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from disorder_avg import spin_ops
from disorder_avg.effective_maps import (
    DisorderModel,
    UnsupportedModelError,
    UnsupportedOrderError,
    WeakDisorderGenerator,
    coherent_generator,
    cumulant,
    cumulants,
    heisenberg_zz_commutator,
    kappa1_closed,
    kappa2_closed,
    kappa3_closed,
    lindbladian,
    lindbladian_closed,
    lindbladian_terms,
    mean_commutator,
    moment_superop,
    sk_exact_generator,
    sk_exact_map,
    sk_lindbladian,
    trig_double_integrals,
    weak_disorder_generator,
)
from disorder_avg.effective_maps.local_sums import field_commutator, zz_commutator, zz_commutator_squared
from disorder_avg.effective_maps.weak_disorder import trig_double_integrals_quadrature
from disorder_avg.observables import magnetization, polarized_state
from disorder_avg.sym_basis import SymState, dense_sector_matrix, get_basis, project_representative


# --- dense N-site oracles ---------------------------------------------------


def _pairs(N):
    return list(itertools.combinations(range(1, N + 1), 2))


def _zz(N, i, j):
    return spin_ops.pauli_string(N, {i: "Z", j: "Z"})


def _field(N, axis="X"):
    return sum(spin_ops.pauli_string(N, {k: axis}) for k in range(1, N + 1))


def _dense_moments_quadrature(model, nmax, nodes):
    """E[[H_lambda, .]^n] on the full space by tensor Gauss-Hermite quadrature."""
    N = model.N
    g = model.coupling_scale
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    Cs = [spin_ops.commutator_superop(_zz(N, i, j)) for i, j in _pairs(N)]
    Kx = spin_ops.commutator_superop(model.h * _field(N))
    dim = 4**N
    out = [np.zeros((dim, dim), dtype=complex) for _ in range(nmax)]
    for idx in itertools.product(range(nodes), repeat=len(Cs)):
        weight = np.prod(w[list(idx)])
        L = Kx + sum((model.mean_J + model.sigma * x[k]) * g * C for k, C in zip(idx, Cs))
        P = np.eye(dim, dtype=complex)
        for n in range(nmax):
            P = L @ P
            out[n] += weight * P
    return out


def _dense_moments_pairing(model, nmax):
    """Same moments from Gaussian pairing, assembled densely (N <= 4)."""
    N = model.N
    Cs = [spin_ops.commutator_superop(_zz(N, i, j)) for i, j in _pairs(N)]
    K = model.J_eff * sum(Cs) + spin_ops.commutator_superop(model.h * _field(N))
    s2 = model.sigma_eff**2
    eye = np.eye(4**N, dtype=complex)

    def power(n):
        return np.linalg.matrix_power(K, n) if n else eye

    moments = []
    for n in range(1, nmax + 1):
        M = power(n)
        for u in range(n):
            for v in range(u + 1, n):
                G = sum(C @ power(v - u - 1) @ C for C in Cs)
                M = M + s2 * power(u) @ G @ power(n - 1 - v)
        if n == 4:
            # fourth-order pairings of the same or different couplings
            S2 = sum(C @ C for C in Cs)
            M = M + 3 * s2 * s2 * S2 @ S2
        moments.append(M)
    return moments


def _dense_cumulants(moments):
    kappas = []
    for n in range(1, len(moments) + 1):
        k = moments[n - 1]
        for j in range(1, n):
            k = k - math.comb(n - 1, j - 1) * kappas[j - 1] @ moments[n - j - 1]
        kappas.append(k)
    return kappas


# --- moments and cumulants ----------------------------------------------------


def test_first_moment_is_mean_commutator():
    for sigma in (0.0, 0.7, 30.0):
        model = DisorderModel(N=5, h=0.8, mean_J=0.4, sigma=sigma)
        np.testing.assert_allclose(
            moment_superop(1, model).toarray(), mean_commutator(model).toarray(), atol=1e-14
        )


def test_second_moment_matches_quadrature():
    model = DisorderModel(N=3, h=1.0, mean_J=0.0, sigma=0.6)
    (_, M2) = _dense_moments_quadrature(model, 2, nodes=32)
    np.testing.assert_allclose(
        moment_superop(2, model).toarray(), dense_sector_matrix(M2, 3), atol=1e-8
    )


def test_higher_moments_match_quadrature():
    # polynomial of degree <= 4 in each coupling: 4 nodes are already exact
    model = DisorderModel(N=3, h=0.7, mean_J=0.5, sigma=0.4)
    dense = _dense_moments_quadrature(model, 4, nodes=4)
    for n in (1, 2, 3, 4):
        np.testing.assert_allclose(
            moment_superop(n, model).toarray(), dense_sector_matrix(dense[n - 1], 3), atol=1e-10
        )


def test_moment_order_limits():
    model = DisorderModel(N=3, sigma=0.1)
    for n in (0, 5):
        with pytest.raises(UnsupportedOrderError):
            moment_superop(n, model)
    with pytest.raises(UnsupportedOrderError):
        cumulants(model, 4)
    with pytest.raises(UnsupportedOrderError):
        lindbladian_terms(3, cumulants(model, 2))


def test_disorder_free_cumulants_vanish():
    model = DisorderModel(N=5, h=1.3, mean_J=0.7, sigma=0.0)
    cs = cumulants(model, 3)
    np.testing.assert_allclose(cs.kappas[0].toarray(), mean_commutator(model).toarray())
    for k in cs.kappas[1:]:
        assert k.max_abs() <= 1e-12 * max(1.0, cs.kappas[0].max_abs() ** 3)
    assert cumulant(2, model).max_abs() <= 1e-12


def test_kappa3_dual_path():
    model = DisorderModel(N=4, h=1.0, mean_J=0.0, sigma=0.5)
    rec = cumulant(3, model).toarray()
    np.testing.assert_allclose(rec, kappa3_closed(model).toarray(), atol=1e-10)
    # numerically projected sum_{i != j} [Z_iZ_j, .]^2 [X_j, .]
    C = spin_ops.commutator_superop(_zz(2, 1, 2))
    Xj = spin_ops.commutator_superop(spin_ops.pauli_string(2, {2: "X"}))
    rep = project_representative(C @ C @ Xj, 2, 4, multiplicity=4 * 3).toarray()
    # the recursion fixes the overall sign of this term as negative
    np.testing.assert_allclose(rec, -(model.sigma_eff**2) * model.h * rep, atol=1e-10)


@settings(max_examples=8)
@given(
    st.floats(0.01, 1.0), st.floats(-2.0, 2.0), st.floats(-1.0, 1.0), st.integers(3, 7)
)
def test_recursion_matches_closed_forms(sigma, h, mean_J, N):
    model = DisorderModel(N=N, h=h, mean_J=mean_J, sigma=sigma)
    cs = cumulants(model, 2)
    for got, ref in zip(cs.kappas, (kappa1_closed, kappa2_closed, kappa3_closed)):
        np.testing.assert_allclose(got.toarray(), ref(model).toarray(), atol=1e-10)


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7, 8])
def test_closed_forms_match_projected_representatives(N):
    model = DisorderModel(N=N, h=0.9, mean_J=0.6, sigma=0.35)
    g = model.coupling_scale
    C = spin_ops.commutator_superop(_zz(2, 1, 2))
    X1 = spin_ops.commutator_superop(spin_ops.X)
    k1 = model.mean_J * g * project_representative(C, 2, N, math.comb(N, 2)) + model.h * (
        project_representative(X1, 1, N, N)
    )
    k2 = (model.sigma * g) ** 2 * project_representative(C @ C, 2, N, math.comb(N, 2))
    np.testing.assert_allclose(kappa1_closed(model).toarray(), k1.toarray(), atol=1e-10)
    np.testing.assert_allclose(kappa2_closed(model).toarray(), k2.toarray(), atol=1e-10)


def test_sector_cumulants_match_dense_pairing():
    model = DisorderModel(N=4, h=0.8, mean_J=0.3, sigma=0.45)
    dense = _dense_cumulants(_dense_moments_pairing(model, 4))
    cs = cumulants(model, 3)
    for n in range(4):
        np.testing.assert_allclose(
            cs.kappas[n].toarray(), dense_sector_matrix(dense[n], 4), atol=1e-10
        )


@pytest.mark.parametrize("N", [3, 4])
def test_dense_generators_commute_with_permutations(N):
    model = DisorderModel(N=N, h=0.8, mean_J=0.3, sigma=0.45)
    kappas = _dense_cumulants(_dense_moments_pairing(model, 4))
    terms = [((-1j) ** (n + 1) * kappas[n]) for n in range(4)]
    generators = terms + [sum(0.4**n / math.factorial(n) * L for n, L in enumerate(terms))]
    for perm in itertools.permutations(range(N)):
        T = spin_ops.conjugation_superop(spin_ops.permutation_operator(N, perm))
        for L in generators:
            assert np.abs(T @ L - L @ T).max() <= 1e-10


# --- Lindbladian -------------------------------------------------------------


def test_order_zero_is_von_neumann():
    model = DisorderModel(N=6, h=1.1, mean_J=0.5, sigma=0.3)
    cs = cumulants(model, 3)
    L0 = lindbladian(0.7, 0, cs).toarray()
    np.testing.assert_allclose(L0, coherent_generator(model).toarray(), atol=1e-13)
    np.testing.assert_allclose(L0, (-1j * mean_commutator(model)).real().toarray(), atol=1e-13)


def test_order_one_damping_diagonal():
    N, sigma, t = 6, 0.3, 0.8
    model = DisorderModel(N=N, h=0.0, mean_J=0.0, sigma=sigma)
    L1 = lindbladian(t, 1, cumulants(model, 1)).toarray()
    basis = get_basis(N)
    a = basis.xs + basis.ys
    expected = -4 * sigma**2 * t * a * (N - a) / N
    np.testing.assert_allclose(np.diag(L1), expected, atol=1e-12)
    np.testing.assert_allclose(L1 - np.diag(np.diag(L1)), 0.0, atol=1e-12)


def test_t_zero_reduces_to_order_zero():
    model = DisorderModel(N=5, h=1.0, mean_J=0.2, sigma=0.4)
    cs = cumulants(model, 3)
    L0 = lindbladian(0.0, 0, cs).toarray()
    for k in (1, 2, 3):
        np.testing.assert_allclose(lindbladian(0.0, k, cs).toarray(), L0, atol=1e-14)


def test_disorder_free_collapse():
    model = DisorderModel(N=5, h=1.0, mean_J=0.8, sigma=0.0)
    cs = cumulants(model, 3)
    L0 = lindbladian(0.0, 0, cs).toarray()
    for k in range(4):
        for t in (0.3, 1.7):
            np.testing.assert_allclose(lindbladian(t, k, cs).toarray(), L0, atol=1e-12)


def test_lindbladian_matches_closed_assembly():
    model = DisorderModel(N=7, h=0.6, mean_J=0.0, sigma=0.25)
    cs = cumulants(model, 2)
    for t in (0.0, 0.4, 1.3):
        np.testing.assert_allclose(
            lindbladian(t, 2, cs).toarray(), lindbladian_closed(t, model).toarray(), atol=1e-12
        )


def test_generators_preserve_trace():
    model = DisorderModel(N=6, h=0.9, mean_J=0.4, sigma=0.3)
    cs = cumulants(model, 3)
    mats = [lindbladian(0.6, k, cs) for k in range(4)] + list(cs.kappas)
    wmodel = model.replace(mean_J=0.0)
    mats += [weak_disorder_generator(1.5, wmodel), WeakDisorderGenerator(wmodel).rate(1.5)]
    mats += [sk_lindbladian(0.8, 0.3, 0.5, 6), sk_exact_generator(0.8, 0.3, 0.5, 6)]
    for M in mats:
        assert np.abs(M.toarray()[0]).max() <= 1e-12


# --- exact SK map -------------------------------------------------------------


def test_sk_zero_disorder_is_unitary():
    N, J, t = 5, 0.7, 1.3
    M = sk_exact_map(t, J, 0.0, N).toarray()
    K = (-1j * (J / math.sqrt(N)) * zz_commutator(N)).real().toarray()
    np.testing.assert_allclose(M, scipy.linalg.expm(t * K), atol=1e-12)
    np.testing.assert_allclose(M @ M.T, np.eye(M.shape[0]), atol=1e-12)


def test_sk_identity_at_zero_time():
    np.testing.assert_allclose(sk_exact_map(0.0, 0.4, 0.9, 6).toarray(), np.eye(84), atol=1e-15)
    J = np.triu(np.arange(9.0).reshape(3, 3), 1)
    np.testing.assert_allclose(sk_exact_map(0.0, J, J, 3), np.eye(64), atol=1e-15)


def test_sk_rejects_field():
    with pytest.raises(ValueError):
        sk_exact_map(1.0, 0.0, 1.0, 3, h=0.1)
    with pytest.raises(ValueError):
        sk_lindbladian(1.0, 0.0, 1.0, 3, h=0.1)


def test_sk_two_spin_decoherence_vs_quadrature():
    sigma = 0.8
    x, w = np.polynomial.hermite_e.hermegauss(60)
    w = w / w.sum()
    rho0 = polarized_state(2, "X")
    for t in (0.2, 0.7, 1.5):
        M = sk_exact_map(t, 0.0, sigma, 2, scaled=False)
        state = SymState(rho0.basis, M.toarray() @ rho0.coeffs)
        x1 = magnetization(state, "X") / 2
        oracle = float(w @ np.cos(2 * sigma * x * t))
        assert x1 == pytest.approx(oracle, abs=1e-12)
        assert x1 == pytest.approx(math.exp(-2 * sigma**2 * t**2), abs=1e-12)


def test_sk_dense_map_matches_quadrature():
    # one active pair out of three forces the dense path with a single random coupling
    Jm = np.zeros((3, 3))
    Sm = np.zeros((3, 3))
    Jm[0, 2], Sm[0, 2] = 0.6, 0.9
    x, w = np.polynomial.hermite_e.hermegauss(60)
    w = w / w.sum()
    zz = _zz(3, 1, 3)
    t = 0.9
    ref = sum(
        wk * spin_ops.unitary_superop((0.6 + 0.9 * xk) * zz, t) for xk, wk in zip(x, w)
    )
    np.testing.assert_allclose(sk_exact_map(t, Jm, Sm, 3, scaled=False), ref, atol=1e-12)


def _central(f, t, eps=1e-5):
    return (f(t + eps) - f(t - eps)) / (2 * eps)


@pytest.mark.parametrize("t", [0.3, 1.1])
def test_sk_derivative_uniform(t):
    N, J, s = 5, 0.4, 0.7
    f = lambda u: sk_exact_map(u, J, s, N).toarray()
    lhs = _central(f, t)
    rhs = sk_lindbladian(t, J, s, N).toarray() @ f(t)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_sk_derivative_dense():
    rng = np.random.default_rng(5)
    N, t = 3, 0.6
    Jm, Sm = rng.normal(size=(N, N)), np.abs(rng.normal(size=(N, N)))
    f = lambda u: sk_exact_map(u, Jm, Sm, N)
    np.testing.assert_allclose(_central(f, t), sk_lindbladian(t, Jm, Sm, N) @ f(t), atol=1e-8)


def test_sk_lindbladian_disorder_free():
    N, J = 6, 0.9
    model = DisorderModel(N=N, h=0.0, mean_J=J, sigma=0.0)
    np.testing.assert_allclose(
        sk_lindbladian(2.0, J, 0.0, N).toarray(), coherent_generator(model).toarray(), atol=1e-13
    )


def test_sk_dense_lindbladian_is_lindblad_form():
    rng = np.random.default_rng(2)
    N = 3
    L = sk_lindbladian(0.5, rng.normal(size=(N, N)), rng.normal(size=(N, N)), N)
    # trace preservation: vec(1)^T L = 0
    np.testing.assert_allclose(np.eye(2**N).reshape(-1) @ L, 0.0, atol=1e-12)


# --- Heisenberg picture and weak disorder -------------------------------------


def test_heisenberg_coefficients():
    assert heisenberg_zz_commutator(0.0, 1.3) == (1.0, 0.0, 0.0)
    c = heisenberg_zz_commutator(math.pi / 4, 1.0)
    np.testing.assert_allclose(c, (0.0, 0.0, 1.0), atol=1e-15)


@given(st.floats(0.0, 5.0), st.floats(-2.0, 2.0))
def test_heisenberg_matches_dense_conjugation(t, h):
    Hbar = h * _field(2)
    U = spin_ops.unitary_superop(Hbar, t)
    Uinv = spin_ops.unitary_superop(Hbar, -t)
    ref = Uinv @ spin_ops.commutator_superop(_zz(2, 1, 2)) @ U
    c0, c1, c2 = heisenberg_zz_commutator(t, h)
    yz = spin_ops.pauli_string(2, {1: "Y", 2: "Z"}) + spin_ops.pauli_string(2, {1: "Z", 2: "Y"})
    yy = spin_ops.pauli_string(2, {1: "Y", 2: "Y"})
    got = spin_ops.commutator_superop(c0 * _zz(2, 1, 2) + c1 * yz + c2 * yy)
    np.testing.assert_allclose(got, ref, atol=1e-12)


@pytest.mark.parametrize("h", [0.0, 1e-4, 0.3, 1.0, -2.5])
@pytest.mark.parametrize("t", [1e-3, 0.4, 3.0])
def test_trig_integrals_closed_vs_quadrature(t, h):
    np.testing.assert_allclose(
        trig_double_integrals(t, h), trig_double_integrals_quadrature(t, h), atol=1e-12, rtol=1e-12
    )


def test_weak_disorder_zero_time():
    model = DisorderModel(N=6, h=1.0, sigma=0.1)
    assert weak_disorder_generator(0.0, model).max_abs() == 0.0


def test_weak_disorder_field_free_limit():
    N = 7
    model = DisorderModel(N=N, h=0.0, sigma=0.2)
    S2 = zz_commutator_squared(N).real().toarray()
    for t in (0.5, 2.0):
        np.testing.assert_allclose(
            weak_disorder_generator(t, model).toarray(), t * t / 2 / N * S2, atol=1e-12
        )


def test_weak_disorder_matches_dense_double_integral():
    N, h, t = 3, 0.8, 1.1
    model = DisorderModel(N=N, h=h, sigma=0.3)
    Hbar = h * _field(N)
    Cs = [spin_ops.commutator_superop(_zz(N, i, j)) for i, j in _pairs(N)]

    def heis(s):
        U, Uinv = spin_ops.unitary_superop(Hbar, s), spin_ops.unitary_superop(Hbar, -s)
        return [Uinv @ C @ U for C in Cs]

    x, w = np.polynomial.legendre.leggauss(24)
    total = np.zeros((4**N, 4**N), dtype=complex)
    for xo, wo in zip(x, w):
        s1 = t * (xo + 1) / 2
        outer = heis(s1)
        for xi, wi in zip(x, w):
            s2 = s1 * (xi + 1) / 2
            inner = heis(s2)
            weight = wo * t / 2 * wi * s1 / 2
            total += weight * sum(A @ B for A, B in zip(outer, inner))
    ref = dense_sector_matrix(total / N, N)
    np.testing.assert_allclose(weak_disorder_generator(t, model).toarray(), ref, atol=1e-10)


@pytest.mark.parametrize("t", [0.003, 0.5, 2.3])
def test_weak_disorder_rate_finite_difference(t):
    gen = WeakDisorderGenerator(DisorderModel(N=6, h=1.0, sigma=0.1))
    fd = _central(lambda u: gen(u).toarray(), t, eps=1e-4 if t > 0.01 else 1e-5)
    np.testing.assert_allclose(fd, gen.rate(t).toarray(), atol=1e-7)


def test_weak_disorder_rate_vs_one_fold_quadrature():
    # dO/dt = g^2 sum_{a,b} f_a(t) F_b(t) P_ab with F_b by Gauss-Legendre
    from disorder_avg.effective_maps.weak_disorder import _f, heisenberg_pair_products
    from disorder_avg.numerics import gauss_legendre

    N, h, t = 5, 0.7, 1.9
    gen = WeakDisorderGenerator(DisorderModel(N=N, h=h, sigma=0.1))
    F = gauss_legendre(lambda u: _f(u, 4 * h), 0.0, t, 40)
    fa = np.array(heisenberg_zz_commutator(t, h))
    P = heisenberg_pair_products(N)
    ref = sum(fa[a] * F[b] * P[a][b].toarray() for a in range(3) for b in range(3)) / N
    np.testing.assert_allclose(gen.rate(t).toarray(), ref, atol=1e-12)


def test_weak_disorder_rejects_mean_coupling_and_negative_time():
    with pytest.raises(UnsupportedModelError):
        WeakDisorderGenerator(DisorderModel(N=4, mean_J=0.1, sigma=0.1))
    with pytest.raises(ValueError):
        WeakDisorderGenerator(DisorderModel(N=4, sigma=0.1))(-1.0)


def test_model_validation():
    with pytest.raises(ValueError):
        DisorderModel(N=1)
    with pytest.raises(ValueError):
        DisorderModel(N=3, sigma=-0.1)
    m = DisorderModel(N=4, mean_J=2.0, sigma=1.0)
    assert m.J_eff == pytest.approx(1.0)
    assert m.sigma_eff == pytest.approx(0.5)
    assert DisorderModel(N=4, sigma=1.0, scaled=False).sigma_eff == 1.0


def test_field_sum_projection_consistent():
    N = 5
    X1 = spin_ops.commutator_superop(spin_ops.X)
    np.testing.assert_allclose(
        field_commutator(N).toarray(), project_representative(X1, 1, N, N).toarray(), atol=1e-14
    )
