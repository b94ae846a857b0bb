import numpy as np
import pytest

from kreinlab.errors import ArgumentError
from kreinlab.geometry import build_strip_geometry, profile_sine
from kreinlab.grids import (GridSpec, bessel_multiplier, boundary_field,
                            default_partition, interior_field, l2_norm,
                            apply_multiplier, sobolev_norm)
from kreinlab.symbols import (
    OrderReducer, PoissonSymbolKernel, SymbolField, TraceSpec,
    chart_boundary_psdo, composition_remainder, dense_op_matrix,
    fit_band_decay, lift_kernel, op_apply, per_band_operator_norms,
    poisson_apply, poisson_boundedness, smooth_circle_partition, symbol_smooth,
    trace_apply, weierstrass_profile,
)


def grid(nx=64, nn=17):
    return GridSpec(dim=2, periods=(2 * np.pi,), points_tangential=(nx,),
                    points_normal=nn, normal_extent=1.0)


def bracket_weight(*xi):
    return np.sqrt(1.0 + sum(np.abs(c) ** 2 for c in xi))


def random_bd(g, rng):
    return boundary_field(g, rng.standard_normal(g.boundary_shape())
                          + 1j * rng.standard_normal(g.boundary_shape()))


class TestOpApply:
    def test_identity_symbol(self):
        g = grid()
        rng = np.random.default_rng(0)
        u = random_bd(g, rng)
        p = SymbolField.from_multiplier(g, lambda xi: np.ones_like(xi), 0.0)
        assert np.allclose(op_apply(p, u).values, u.values, atol=1e-13)

    def test_x_independent_equals_multiplier(self):
        g = grid()
        rng = np.random.default_rng(1)
        u = random_bd(g, rng)
        p = SymbolField.from_multiplier(g, bracket_weight, 1.0)
        a = op_apply(p, u)
        b = apply_multiplier(u, bessel_multiplier(1.0))
        assert np.max(np.abs(a.values - b.values)) < 1e-12

    def test_product_symbol_differentiates(self):
        g = grid()
        x = g.tangential_coords()[0]
        a = 1.0 + 0.5 * np.cos(x)
        u = boundary_field(g, np.sin(3 * x))
        p = SymbolField.from_product(g, a, lambda xi: 1j * xi, 1.0)
        out = op_apply(p, u)
        exact = a * 3 * np.cos(3 * x)
        assert np.max(np.abs(out.values - exact)) < 1e-11

    def test_matches_dense_definition(self):
        g = grid(nx=32)
        rng = np.random.default_rng(2)
        u = random_bd(g, rng)
        x = g.tangential_coords()[0]
        p = SymbolField.from_product(g, np.exp(1j * x), bracket_weight, 1.0)
        fast = op_apply(p, u).values
        dense = dense_op_matrix(p) @ u.values
        assert np.max(np.abs(fast - dense)) < 1e-11

    def test_linearity(self):
        g = grid()
        rng = np.random.default_rng(3)
        u, v = random_bd(g, rng), random_bd(g, rng)
        p = SymbolField.from_product(g, 1 + 0.3 * np.abs(
            np.sin(g.tangential_coords()[0])), bracket_weight, 1.0)
        lhs = op_apply(p, u.copy_with(2.0 * u.values + 3j * v.values)).values
        rhs = 2.0 * op_apply(p, u).values + 3j * op_apply(p, v).values
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_interior_field_acts_per_level(self):
        g = grid(nx=32, nn=9)
        rng = np.random.default_rng(4)
        vals = rng.standard_normal(g.interior_shape())
        u = interior_field(g, vals)
        p = SymbolField.from_multiplier(g, bracket_weight, 1.0)
        out = op_apply(p, u)
        for level in range(g.points_normal):
            line = boundary_field(g, vals[:, level])
            exact = apply_multiplier(line, bessel_multiplier(1.0)).values
            assert np.max(np.abs(out.values[:, level] - exact)) < 1e-12


class TestSymbolSmoothing:
    def test_reconstruction_exact(self):
        g = grid(nx=256)
        a = weierstrass_profile(g, 0.375, amplitude=0.5, seed=1, mean=1.0)
        p = SymbolField.from_product(g, a, bracket_weight, 1.0, tau=0.375)
        sharp, flat = symbol_smooth(p, 0.5)
        recon = sharp.values() + flat.values()
        assert np.max(np.abs(recon - p.values())) < 1e-12

    def test_x_independent_flat_part_vanishes(self):
        g = grid()
        p = SymbolField.from_multiplier(g, bracket_weight, 1.0)
        _, flat = symbol_smooth(p, 0.5)
        assert np.max(np.abs(flat.values())) < 1e-13

    def test_band_limited_coefficient_exact(self):
        # frequencies <= 1 are reproduced by every mollification scale
        g = grid()
        x = g.tangential_coords()[0]
        a = 1.0 + 0.5 * np.cos(x)
        p = SymbolField.from_product(g, a, bracket_weight, 1.0)
        _, flat = symbol_smooth(p, 0.5)
        norms = per_band_operator_norms(flat)
        assert max(norms.values()) < 1e-8

    def test_rough_coefficient_band_decay(self):
        # tau = 0.375, delta = 0.5: flat part loses tau*delta orders.
        # Coherent phases saturate the class bound at one spot across all
        # scales; the fit window stays clear of the closed top block.
        g = grid(nx=512)
        tau, delta = 0.375, 0.5
        a = weierstrass_profile(g, tau, amplitude=1.0, seed=2, mean=0.0,
                                modes_per_octave=1, coherent=True)
        p = SymbolField.from_product(g, a, bracket_weight, 1.0, tau=tau)
        _, flat = symbol_smooth(p, delta)
        norms = per_band_operator_norms(flat, j_range=range(2, 7))
        slope = fit_band_decay(norms)
        measured_loss = p.order - slope
        assert abs(measured_loss - tau * delta) <= 0.2 * tau * delta

    def test_sharp_part_satisfies_estimates(self):
        g = grid(nx=256)
        a = weierstrass_profile(g, 0.375, amplitude=0.5, seed=3, mean=1.0)
        p = SymbolField.from_product(g, a, bracket_weight, 1.0, tau=0.375)
        sharp, _ = symbol_smooth(p, 0.5)
        consts = sharp.estimate_constants()
        assert np.all(np.isfinite(consts))
        assert consts[1] < 20 * consts[0]


class TestOrderReducers:
    def test_boundary_round_trip_exact(self):
        g = grid()
        rng = np.random.default_rng(5)
        u = random_bd(g, rng)
        red = OrderReducer(g, 1.5, "boundary")
        back = red.inverse(red.apply(u))
        assert np.max(np.abs(back.values - u.values)) < 1e-12

    def test_zero_order_identity(self):
        g = grid()
        rng = np.random.default_rng(6)
        u = random_bd(g, rng)
        red = OrderReducer(g, 0.0, "boundary")
        assert np.allclose(red.apply(u).values, u.values)

    def test_interior_needs_integer_order(self):
        with pytest.raises(ArgumentError):
            OrderReducer(grid(), 1.5, "minus_plus")

    def test_interior_round_trip(self):
        g = grid(nx=32, nn=33)
        rng = np.random.default_rng(7)
        vals = rng.standard_normal(g.interior_shape())
        u = interior_field(g, vals)
        red = OrderReducer(g, 2, "minus_plus")
        back = red.inverse(red.apply(u))
        rel = np.max(np.abs(back.values - u.values)) / np.max(np.abs(u.values))
        assert rel < 1e-8

    def test_interior_round_trip_other_order(self):
        g = grid(nx=32, nn=33)
        rng = np.random.default_rng(8)
        u = interior_field(g, rng.standard_normal(g.interior_shape()))
        red = OrderReducer(g, 2, "minus_plus")
        back = red.apply(red.inverse(u))
        rel = np.max(np.abs(back.values - u.values)) / np.max(np.abs(u.values))
        assert rel < 1e-8

    def test_interior_norm_equivalence(self):
        g = grid(nx=32, nn=33)
        rng = np.random.default_rng(9)
        red = OrderReducer(g, 2, "minus_plus")
        ratios = []
        xn = g.normal_coords()
        bump = (np.sin(np.pi * xn / g.normal_extent) ** 2)[None, :]
        for _ in range(5):
            vals = rng.standard_normal(g.interior_shape()) * bump
            u = interior_field(g, vals)
            out = red.apply(u)
            ratios.append(sobolev_norm(out, 0.0) / sobolev_norm(u, 2.0))
        spread = max(ratios) / min(ratios)
        assert spread < 50.0


class TestPoissonOperators:
    def test_exponential_kernel_is_lift(self):
        from kreinlab.grids import lift_semigroup
        g = grid()
        rng = np.random.default_rng(10)
        v = random_bd(g, rng)
        k = lift_kernel(g)
        out = poisson_apply(k, v)
        exact = lift_semigroup(v)
        assert np.max(np.abs(out.values - exact.values)) < 1e-11

    def test_first_moment_kernel_traces(self):
        # band-limited data: high modes have boundary layers the one-sided
        # difference cannot resolve, so the oracle uses low modes
        g = grid(nn=33)
        x = g.tangential_coords()[0]
        v = boundary_field(g, np.exp(1j * x) + 0.5 * np.exp(-2j * x))
        k = lift_kernel(g, moment=1)
        out = poisson_apply(k, v)
        assert np.max(np.abs(out.values[..., 0])) < 1e-12
        h = g.h_normal
        dn = (-3 * out.values[..., 0] + 4 * out.values[..., 1]
              - out.values[..., 2]) / (2 * h)
        assert np.max(np.abs(dn - v.values)) < 2e-2 * np.max(np.abs(v.values))

    def test_rough_amplitude_factorizes(self):
        from kreinlab.grids import lift_semigroup
        g = grid()
        rng = np.random.default_rng(12)
        v = random_bd(g, rng)
        x = g.tangential_coords()[0]
        a = 1.0 + 0.3 * np.abs(np.sin(x)) ** 1.4
        k = lift_kernel(g, amplitude=a)
        out = poisson_apply(k, v)
        exact = a[:, None] * lift_semigroup(v).values
        assert np.max(np.abs(out.values - exact)) < 1e-11

    def test_decay_constants_finite(self):
        g = grid(nn=33)
        k = lift_kernel(g)
        consts = k.decay_constants()
        assert all(np.isfinite(c) and c < 10.0 for c in consts.values())

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
    def test_boundedness_across_resolutions(self, s):
        worst = []
        for nx, nn in ((32, 17), (64, 33), (128, 65)):
            g = grid(nx=nx, nn=nn)
            worst.append(poisson_boundedness(lift_kernel(g), s))
        assert max(worst) < 3.0 * min(worst) + 0.5


class TestTraceOperators:
    def test_class_one_is_gamma0(self):
        g = grid()
        rng = np.random.default_rng(13)
        vals = rng.standard_normal(g.interior_shape())
        f = interior_field(g, vals)
        one = SymbolField.from_multiplier(g, lambda xi: np.ones_like(xi), 0.0)
        t = TraceSpec([one])
        out = trace_apply(t, f)
        assert np.allclose(out.values, vals[..., 0], atol=1e-12)

    def test_conormal_pattern(self):
        # s0 gamma_1 + c D' gamma_0 against direct finite differences
        g = grid(nn=33)
        x = g.tangential_coords()[0]
        xn = g.normal_coords()
        f = interior_field(g, np.exp(1j * 2 * x)[:, None]
                           * np.exp(-2.0 * xn)[None, :])
        s0 = 1.0 + 0.2 * np.cos(x)
        czero = SymbolField.from_product(g, 0.5 * np.ones_like(x),
                                         lambda xi: 1j * xi, 1.0)
        sym0 = SymbolField.from_product(g, s0,
                                        lambda xi: np.ones_like(xi), 0.0)
        t = TraceSpec([czero, sym0])
        out = trace_apply(t, f)
        exact = s0 * (-2.0) * np.exp(2j * x) + 0.5 * 2j * np.exp(2j * x)
        assert np.max(np.abs(out.values - exact)) < 5e-2

    def test_integral_part_quadrature(self):
        # t~0 = e^{-<xi'> y}: the integral part against direct quadrature
        g = grid(nn=65)
        rng = np.random.default_rng(14)
        vals = rng.standard_normal(g.interior_shape())
        f = interior_field(g, vals)
        kern = lift_kernel(g)
        t = TraceSpec([], integral_kernel=kern)
        out = trace_apply(t, f)
        # oracle: quadrature in y of kernel * partial FFT, mode by mode
        fhat = np.fft.fft(vals, axis=0)
        y = g.normal_coords()
        w = np.ones_like(y)
        w[0] = w[-1] = 0.5
        xi = g.tangential_frequencies()[0]
        br = np.sqrt(1 + xi ** 2)
        integ = g.h_normal * np.sum(np.exp(-br[:, None] * y[None, :])
                                    * fhat * w, axis=1)
        oracle = np.fft.ifft(integ)
        assert np.max(np.abs(out.values - oracle)) < 1e-12

    def test_class_gate(self):
        g = GridSpec(dim=2, periods=(2 * np.pi,), points_tangential=(16,),
                     points_normal=8, normal_extent=1.0)
        f = interior_field(g, np.zeros(g.interior_shape()))
        one = SymbolField.from_multiplier(g, lambda xi: np.ones_like(xi), 0.0)
        t = TraceSpec([one, one, one])
        with pytest.raises(ArgumentError):
            trace_apply(t, f)


class TestChartSums:
    def test_single_flat_chart_reduces_to_op(self):
        g = grid()
        rng = np.random.default_rng(15)
        u = random_bd(g, rng)
        p = SymbolField.from_multiplier(g, bracket_weight, 1.0)
        ones = np.ones(g.boundary_shape())
        out = chart_boundary_psdo([(ones, ones, p)], u)
        exact = op_apply(p, u)
        assert np.max(np.abs(out.values - exact.values)) < 1e-12

    def test_two_chart_telescoping(self):
        # first-order symbol with a lattice-local kernel: its reach stays
        # inside the psi margins, so the partition telescopes exactly
        g = grid(nx=128)
        rng = np.random.default_rng(16)
        u = random_bd(g, rng)
        h = g.h_tangential[0]
        p = SymbolField.from_multiplier(
            g, lambda xi: 4.0 + (1.0 - np.exp(1j * xi * h)) / h, 1.0)
        phis, psis = smooth_circle_partition(g, 2)
        pieces = [(psis[j], phis[j], p) for j in range(2)]
        out = chart_boundary_psdo(pieces, u)
        exact = op_apply(p, u)
        scale = np.max(np.abs(exact.values))
        assert np.max(np.abs(out.values - exact.values)) < 1e-10 * scale

    def test_partition_deficit_rejected(self):
        g = grid()
        u = boundary_field(g, np.ones(g.boundary_shape()))
        p = SymbolField.from_multiplier(g, bracket_weight, 1.0)
        bad = 0.9 * np.ones(g.boundary_shape())
        with pytest.raises(ArgumentError):
            chart_boundary_psdo([(bad, bad, p)], u)

    def test_tilde_variant_differs_by_kappa(self):
        g = grid()
        geom = build_strip_geometry(profile_sine(g, 0.2, 1))
        rng = np.random.default_rng(17)
        u = random_bd(g, rng)
        p = SymbolField.from_multiplier(g, bracket_weight, 1.0)
        ones = np.ones(g.boundary_shape())
        plain = chart_boundary_psdo([(ones, ones, p)], u)
        weighted = chart_boundary_psdo([(ones, ones, p)], u, geom=geom,
                                       tilde=True)
        kap = geom.kappa("bottom")
        assert np.max(np.abs(weighted.values - kap * plain.values)) < 1e-12
        flat_geom = build_strip_geometry(profile_sine(g, 0.0, 1))
        flat = chart_boundary_psdo([(ones, ones, p)], u, geom=flat_geom,
                                   tilde=True)
        assert np.max(np.abs(flat.values - plain.values)) < 1e-12


class TestCompositionRemainder:
    def test_multipliers_commute(self):
        g = grid()
        p1 = SymbolField.from_multiplier(g, bracket_weight, 1.0)
        p2 = SymbolField.from_multiplier(g, lambda xi: 1j * xi, 1.0)
        rep = composition_remainder(p1, p2)
        assert rep["max_norm"] < 1e-10

    def test_outer_coefficient_is_exact(self):
        # x-form: Op(a xi) Op(m(xi)) = Op(a xi m) exactly
        g = grid()
        x = g.tangential_coords()[0]
        a = 1.0 + 0.3 * np.abs(np.sin(x)) ** 1.4
        p1 = SymbolField.from_product(g, a, lambda xi: 1j * xi, 1.0)
        p2 = SymbolField.from_multiplier(g, lambda xi: 1j * xi, 1.0)
        rep = composition_remainder(p1, p2)
        assert rep["max_norm"] < 1e-10

    def test_rough_inner_coefficient_drops_order(self):
        # Op(xi) Op(a xi) - Op(a xi^2) = first-order-ish remainder: the
        # fitted order stays <= 2 - theta for theta below tau
        g = grid(nx=512)
        tau = 0.375
        a = 1.0 + weierstrass_profile(g, tau, amplitude=0.4, seed=18)
        p1 = SymbolField.from_multiplier(g, lambda xi: 1j * xi, 1.0)
        p2 = SymbolField.from_product(g, a, lambda xi: 1j * xi, 1.0, tau=tau)
        rep = composition_remainder(p1, p2, j_range=range(2, 8))
        theta = 0.3
        assert rep["fitted_order"] <= 2.0 - theta * 0.8

    def test_divergence_vs_x_form(self):
        # d(a du) - a u'' = a' u': measured order ~ 1 = 2 - 1 for smooth-ish a,
        # realized here with a rough profile so the drop is genuinely < 2
        g = grid(nx=512)
        tau = 0.375
        a = 1.0 + weierstrass_profile(g, tau, amplitude=0.4, seed=19)
        p_div_outer = SymbolField.from_multiplier(g, lambda xi: 1j * xi, 1.0)
        p_div_inner = SymbolField.from_product(g, a, lambda xi: 1j * xi, 1.0,
                                               tau=tau)
        rep = composition_remainder(p_div_outer, p_div_inner,
                                    j_range=range(2, 8))
        assert rep["fitted_order"] <= 2.0 - 0.24
        assert rep["max_norm"] > 1e-6
