import numpy as np
import pytest

from kreinlab.errors import ArgumentError, SingularityError
from kreinlab.relations import (
    realization_from_pair_constraints,
    Correspondence, DualPair, SubspaceGraph, T_to_realization,
    dirichlet_difference_pair, g_lambda, kernel_and_decompose, krein_resolvent_check,
    m_function, orth, project, random_dual_pair, random_realization,
    realization_from_domain_constraints, realization_to_T, subspace_distance,
)


def random_matrix(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


class TestSubspaceGraph:
    def test_adjoint_of_full_matrix(self):
        rng = np.random.default_rng(0)
        m = random_matrix(rng, 6)
        g = SubspaceGraph.from_operator(m)
        ga = g.adjoint()
        expected = SubspaceGraph.from_operator(m.conj().T)
        assert ga.distance(expected) < 1e-12

    def test_double_adjoint_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(4):
            cols = rng.standard_normal((12, 4)) + 1j * rng.standard_normal((12, 4))
            g = SubspaceGraph.from_span(6, cols)
            assert g.adjoint().adjoint().distance(g) < 1e-12

    def test_adjoint_against_direct_complement(self):
        # restriction of M* to a subspace: adjoint computed two ways
        rng = np.random.default_rng(2)
        n = 7
        m = random_matrix(rng, n)
        dom = orth(rng.standard_normal((n, n - 2)))
        g = SubspaceGraph.from_operator(m.conj().T, dom)
        adj = g.adjoint()
        # brute force: all (v, w) with <M* u, v> = <u, w> for u in dom
        rows = np.hstack([(m.conj().T @ dom).conj().T,
                          -dom.conj().T])
        _, s, vh = np.linalg.svd(rows)
        rank = int(np.sum(s > 1e-10 * s[0]))
        brute = SubspaceGraph(n, orth(vh.conj().T[:, rank:]))
        assert adj.distance(brute) < 1e-10

    def test_operator_graph_predicate(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, 5)
        g = SubspaceGraph.from_operator(m)
        assert g.is_operator_graph()
        with_mul = SubspaceGraph.from_span(
            5, np.hstack([g.basis, np.eye(10)[:, [7]]]))
        assert not with_mul.is_operator_graph()

    def test_inverse_matrix_singularity(self):
        m = np.diag([1.0, 2.0, 3.0])
        g = SubspaceGraph.from_operator(m)
        with pytest.raises(SingularityError):
            g.inverse_matrix(2.0)
        r = g.inverse_matrix(0.5)
        assert np.allclose(r, np.linalg.inv(m - 0.5 * np.eye(3)))


class TestDualPair:
    @pytest.mark.parametrize("n,d", [(6, 1), (8, 2), (10, 3)])
    def test_random_pair_valid(self, n, d):
        pair = random_dual_pair(n, d, seed=n + d)
        pair.validate()
        assert pair.kernel().shape[1] == d
        assert pair.kernel_prime().shape[1] == d

    def test_decompose_of_domain_and_kernel_elements(self):
        pair = random_dual_pair(8, 2, seed=5)
        rng = np.random.default_rng(5)
        # u in D(A_gamma): decomposition is (u, 0)
        dom = pair.a_gamma.domain_basis()
        u = dom @ rng.standard_normal(dom.shape[1])
        ug, uz = kernel_and_decompose(pair, u, 0.0)
        assert np.linalg.norm(uz) < 1e-10 * np.linalg.norm(u)
        # u in Z: decomposition is (0, u)
        z = pair.kernel()
        u = z @ rng.standard_normal(z.shape[1])
        ug, uz = kernel_and_decompose(pair, u, 0.0)
        assert np.linalg.norm(ug) < 1e-10 * np.linalg.norm(u)

    def test_decompose_random_vector(self):
        pair = random_dual_pair(9, 2, seed=9)
        rng = np.random.default_rng(1)
        lam = 0.37 + 0.21j
        u = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        ug, uz = pair.decompose(u, lam)
        assert np.allclose(ug + uz, u, atol=1e-12)
        # uz is in the lambda-kernel
        zl = pair.kernel(lam)
        assert np.linalg.norm(uz - project(zl, uz[:, None])[:, 0]) < 1e-9
        # ug is in D(A_gamma)
        dom = pair.a_gamma.domain_basis()
        assert np.linalg.norm(ug - project(dom, ug[:, None])[:, 0]) < 1e-9

    def test_e_f_inverse_pair(self):
        pair = random_dual_pair(8, 2, seed=2)
        lam = -0.8 + 0.3j
        n = pair.ambient_dim
        assert np.allclose(pair.e_op(lam) @ pair.f_op(lam), np.eye(n),
                           atol=1e-11)
        assert np.allclose(pair.f_op(lam) @ pair.e_op(lam), np.eye(n),
                           atol=1e-11)

    def test_e_maps_kernel_to_shifted_kernel(self):
        pair = random_dual_pair(8, 2, seed=3)
        lam = 0.5 - 0.4j
        z = pair.kernel()
        ez = pair.e_op(lam) @ z
        zl = pair.kernel(lam)
        assert np.linalg.norm(ez - project(zl, ez), 2) < 1e-9


class TestCorrespondence:
    def test_reference_extension_gives_trivial_T(self):
        pair = random_dual_pair(8, 2, seed=11)
        corr = realization_to_T(pair, pair.a_gamma)
        assert corr.dim_v == 0 and corr.dim_w == 0

    def test_extreme_realizations(self):
        # A_max pairs with (V = Z, W = 0, T = 0); A_min with (V = 0, W = Z').
        pair = random_dual_pair(8, 2, seed=12)
        z, zp = pair.kernel(), pair.kernel_prime()
        corr = realization_to_T(pair, pair.a_max)
        assert subspace_distance(corr.v_basis, z) < 1e-10
        assert corr.dim_w == 0
        corr_min = realization_to_T(pair, pair.a_min)
        assert corr_min.dim_v == 0
        assert subspace_distance(corr_min.w_basis, zp) < 1e-10

    def test_defining_equation_brute_force(self):
        # T u_zeta = (Au)_W column by column over a basis of the graph
        pair = random_dual_pair(8, 2, seed=13)
        a = random_realization(pair, seed=77)
        corr = realization_to_T(pair, a)
        for j in range(a.dim):
            u = a.top[:, j]
            f = a.bottom[:, j]
            _, uz = pair.decompose(u)
            lhs = corr.t_matrix @ (corr.v_basis.conj().T @ uz)
            rhs = corr.w_basis.conj().T @ f
            assert np.linalg.norm(lhs - rhs) < 1e-9

    @pytest.mark.parametrize("seed", range(6))
    def test_round_trip(self, seed):
        pair = random_dual_pair(8, 2, seed=20 + seed)
        a = random_realization(pair, seed=seed)
        corr = realization_to_T(pair, a)
        back = T_to_realization(pair, corr)
        assert back.distance(a) < 1e-10

    def test_zero_T_on_full_spaces_has_big_kernel(self):
        pair = random_dual_pair(8, 2, seed=31)
        z, zp = pair.kernel(), pair.kernel_prime()
        corr = Correspondence(z, zp, np.zeros((zp.shape[1], z.shape[1])))
        a = T_to_realization(pair, corr)
        # Theorem: ker(realization) = ker T = V = Z here
        ka = a.kernel_basis()
        assert subspace_distance(ka, z) < 1e-9

    def test_trivial_T_recovers_reference(self):
        pair = random_dual_pair(7, 1, seed=33)
        n = pair.ambient_dim
        corr = Correspondence(np.zeros((n, 0)), np.zeros((n, 0)),
                              np.zeros((0, 0)))
        a = T_to_realization(pair, corr)
        assert a.distance(pair.a_gamma) < 1e-10

    @pytest.mark.parametrize("seed", range(4))
    def test_kernel_and_range_identities(self, seed):
        # Theorem (ii): ker A~ = ker T, ran A~ = ran T + (H - W)
        from kreinlab.relations import complement, null_space
        n = 9
        pair = random_dual_pair(n, 2, seed=40 + seed)
        a = random_realization(pair, seed=100 + seed)
        corr = realization_to_T(pair, a)
        t = corr.t_matrix
        kt = corr.v_basis @ null_space(t)
        kt = orth(kt) if kt.size else np.zeros((n, 0), dtype=complex)
        assert subspace_distance(kt, a.kernel_basis()) < 1e-9
        ran_t = corr.w_basis @ orth(t) if t.size else np.zeros((n, 0))
        ran_expected = orth(np.hstack([ran_t, complement(corr.w_basis, n)]))
        assert subspace_distance(a.range_basis(), ran_expected) < 1e-9

    @pytest.mark.parametrize("seed", range(4))
    def test_adjoint_duality(self, seed):
        # realization_to_T of the adjoint gives T* on the swapped pair
        pair = random_dual_pair(8, 2, seed=50 + seed)
        a = random_realization(pair, seed=200 + seed)
        corr = realization_to_T(pair, a)
        swapped = DualPair(pair.a_min_prime, pair.a_min,
                           pair.a_gamma.adjoint())
        corr_adj = realization_to_T(swapped, a.adjoint())
        # T* in the same bases: W -> V with matrix t^H; corr_adj uses its own
        # orthonormal bases, so compare through the base changes.
        uv = corr_adj.v_basis.conj().T @ corr.w_basis
        uw = corr_adj.w_basis.conj().T @ corr.v_basis
        lhs = corr_adj.t_matrix @ uv
        rhs = uw @ corr.t_matrix.conj().T
        assert np.linalg.norm(lhs - rhs, 2) < 1e-9


def null_space_of(t):
    from kreinlab.relations import null_space
    return null_space(t)


def orth_or_empty(cols, n, transpose=False):
    from kreinlab.relations import orth
    if cols.size == 0:
        return np.zeros((n, 0), dtype=complex)
    return orth(cols)


class TestGLambdaAndM:
    def test_g_at_zero_vanishes(self):
        pair = random_dual_pair(8, 2, seed=61)
        z, zp = pair.kernel(), pair.kernel_prime()
        g = g_lambda(pair, z, zp, 0.0)
        assert np.max(np.abs(g)) == 0.0

    @pytest.mark.parametrize("seed", range(4))
    def test_diagram_identity(self, seed):
        # (E'_W)* T^lam E^lam_V = T + G^lam on the nose
        pair = random_dual_pair(8, 2, seed=70 + seed)
        a = random_realization(pair, seed=300 + seed)
        lam = 0.4 + 0.3j
        corr0 = realization_to_T(pair, a)
        corr_l = realization_to_T(pair, a, lam=lam)
        e_v = corr_l.v_basis.conj().T @ (pair.e_op(lam) @ corr0.v_basis)
        e_w = corr_l.w_basis.conj().T @ (pair.e_op_prime(lam) @ corr0.w_basis)
        lhs = e_w.conj().T @ corr_l.t_matrix @ e_v
        rhs = corr0.t_matrix + g_lambda(pair, corr0.v_basis, corr0.w_basis, lam)
        assert np.linalg.norm(lhs - rhs, 2) < 1e-10 * max(
            1.0, np.linalg.norm(rhs, 2))

    def test_m_function_equals_minus_inverse(self):
        pair = random_dual_pair(8, 2, seed=81)
        a = random_realization(pair, seed=400)
        lam = 0.3 + 0.2j
        corr = realization_to_T(pair, a)
        m = m_function(pair, a, lam, corr=corr)
        g = g_lambda(pair, corr.v_basis, corr.w_basis, lam)
        rhs = -np.linalg.inv(corr.t_matrix + g)
        assert np.linalg.norm(m - rhs, 2) < 1e-9 * max(1.0, np.linalg.norm(rhs))

    def test_m_function_tag14_form(self):
        # V = Z, W = Z': M = -F_Z (T^lam)^{-1} (F'_Z')*
        pair = random_dual_pair(8, 2, seed=82)
        a = random_realization(pair, seed=820)
        lam = 0.25 - 0.3j
        assert subspace_distance(realization_to_T(pair, a).v_basis,
                                 pair.kernel()) < 1e-9
        corr0 = realization_to_T(pair, a)
        corr_l = realization_to_T(pair, a, lam=lam)
        m = m_function(pair, a, lam, corr=corr0)
        t_inv = np.linalg.inv(corr_l.t_matrix)
        f_z = corr0.v_basis.conj().T @ (np.linalg.inv(pair.e_op(lam))
                                        @ corr_l.v_basis)
        f_zp = corr0.w_basis.conj().T @ (np.linalg.inv(pair.e_op_prime(lam))
                                         @ corr_l.w_basis)
        rhs = -f_z @ t_inv @ f_zp.conj().T
        assert np.linalg.norm(m - rhs, 2) < 1e-9 * max(1.0, np.linalg.norm(rhs))

    def test_m_function_empty_for_reference(self):
        pair = random_dual_pair(6, 1, seed=83)
        m = m_function(pair, pair.a_gamma, 0.7 + 0.1j,
                       corr=realization_to_T(pair, pair.a_gamma))
        assert m.shape == (0, 0)

    def test_m_function_holomorphy(self):
        # Cauchy-Riemann residual of central differences on a small disk:
        # for holomorphic M, (M(l+ih) - M(l-ih))/(2h) = i M'(l).
        pair = random_dual_pair(7, 1, seed=84)
        a = random_realization(pair, seed=500)
        lam0 = 0.3 + 0.2j
        h = 1e-5
        corr = realization_to_T(pair, a)
        m = {d: m_function(pair, a, lam0 + d, corr=corr)
             for d in (h, -h, 1j * h, -1j * h)}
        d_re = (m[h] - m[-h]) / (2 * h)
        d_im = (m[1j * h] - m[-1j * h]) / (2 * h)
        resid = np.linalg.norm(d_re - d_im / 1j, 2)
        assert resid < 1e-6 * max(1.0, np.linalg.norm(d_re, 2))


class TestKreinFormula:
    def test_reference_realization_has_zero_correction(self):
        pair = random_dual_pair(8, 2, seed=91)
        lam = 0.3 + 0.2j
        rep = krein_resolvent_check(pair, pair.a_gamma, lam)
        assert rep["discrepancy_T_form"] < 1e-10
        assert rep["discrepancy_M_form"] < 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_random_realizations(self, seed):
        pair = random_dual_pair(8, 2, seed=92 + seed)
        a = random_realization(pair, seed=600 + seed)
        rep = krein_resolvent_check(pair, a, 0.3 + 0.2j)
        assert rep["discrepancy_T_form"] < 1e-9
        assert rep["discrepancy_M_form"] < 1e-9

    def test_corollary_kernel_identity(self):
        # ker(A~ - lam) = ker T^lam for lam in rho(A_gamma)
        pair = random_dual_pair(8, 2, seed=97)
        a = random_realization(pair, seed=700)
        lam = -0.6 + 0.5j
        corr_l = realization_to_T(pair, a, lam=lam)
        from kreinlab.relations import null_space
        kt = corr_l.v_basis @ null_space(corr_l.t_matrix)
        ka = a.shifted(lam).kernel_basis()
        if kt.size == 0:
            assert ka.shape[1] == 0
        else:
            assert subspace_distance(orth(kt), ka) < 1e-9

    def test_difference_relation_robin_coupling(self):
        # 1D second-difference relation; the free end rows of f are the
        # discrete flux data, and a Robin-like coupling ties them to the
        # end traces of u:  (f - Mu)_end + beta u_end = 0.
        n = 10
        pair = dirichlet_difference_pair(n)
        pair.validate()
        m = (np.diag(2.0 * np.ones(n)) - np.diag(np.ones(n - 1), 1)
             - np.diag(np.ones(n - 1), -1))
        beta = 0.7
        c = np.zeros((2, 2 * n), dtype=complex)
        c[0, :n] = -m.T[:, 0] + beta * np.eye(n)[:, 0]
        c[0, n:] = np.eye(n)[:, 0]
        c[1, :n] = -m.T[:, n - 1] + beta * np.eye(n)[:, n - 1]
        c[1, n:] = np.eye(n)[:, n - 1]
        a = realization_from_pair_constraints(pair, c)
        assert a.contains(pair.a_min)
        assert a.dim == n
        rep = krein_resolvent_check(pair, a, 0.3 + 0.2j)
        assert rep["discrepancy_T_form"] < 1e-9
        assert rep["discrepancy_M_form"] < 1e-9

    def test_kernel_of_difference_relation_is_linear(self):
        pair = dirichlet_difference_pair(10)
        z = pair.kernel()
        grid = np.arange(10, dtype=complex)
        lin = orth(np.stack([np.ones(10, dtype=complex), grid], axis=1))
        assert subspace_distance(z, lin) < 1e-10
