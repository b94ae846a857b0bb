"""Divergence-form elliptic operators with rough coefficients on the strip.

The discrete operator is extracted row by row from a sesquilinear form with
half-node fluxes in the normal direction, spectral tangential derivatives
and trapezoid/Jacobian weights:

    form(u, v) = <A u, v>_{J, trapezoid}   for all grid functions u, v.

Assembling the conjugate form the same way yields the primed operator A'
with <A u, v> = <u, A' v> exactly (both sides equal the form), so the
discrete Green identity holds to machine precision with flux conormal
traces read off the two boundary rows.  The Krein/DtN layer leans on this
exactness.  High-order consistent conormals are provided separately for
the continuum convergence tests.

First-order terms come in two shapes, direct (sum a_j d_j u) and dual
(-sum d_j(b_j u)); the formal adjoint swaps them with a conjugation, which
makes double adjoints reproduce coefficient data exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ModelError
from .geometry import BOTTOM, TOP, StripGeometry
from .grids import SpectralField, boundary_field, interior_field, lift_semigroup

_CATALOG = {}


@dataclass
class CoefficientField:
    """Physical coefficients of A = -d_j(a_jk d_k u) + a_j d_j u
    - d_j(b_j u) + a_0 u, given as callables f(x', y)."""

    matrix: list
    first_direct: list = None
    first_dual: list = None
    zero: object = None
    q_meta: float = np.inf
    name: str = "custom"

    def __post_init__(self):
        n = len(self.matrix)
        zero_fn = _const(0.0)
        if self.first_direct is None:
            self.first_direct = [zero_fn] * n
        if self.first_dual is None:
            self.first_dual = [zero_fn] * n
        if self.zero is None:
            self.zero = zero_fn

    @property
    def dim(self):
        return len(self.matrix)

    def formal_adjoint(self) -> "CoefficientField":
        """a'_jk = conj(a_kj); the two first-order shapes swap under
        conjugation (a_j d_j has adjoint -d_j(conj(a_j) .))."""
        n = self.dim
        matrix = [[_conj_fn(self.matrix[k][j]) for k in range(n)]
                  for j in range(n)]
        return CoefficientField(
            matrix=matrix,
            first_direct=[_conj_fn(f) for f in self.first_dual],
            first_dual=[_conj_fn(f) for f in self.first_direct],
            zero=_conj_fn(self.zero),
            q_meta=self.q_meta,
            name=self.name + "'",
        )


def _const(c):
    return lambda x, y: c * np.ones_like(y)


def _conj_fn(f):
    return lambda x, y, f=f: np.conj(f(x, y))


def register_coefficients(name):
    def deco(fn):
        _CATALOG[name] = fn
        return fn
    return deco


@register_coefficients("laplacian")
def _laplacian(params=None):
    return CoefficientField([[_const(1.0), _const(0.0)],
                             [_const(0.0), _const(1.0)]], name="laplacian")


@register_coefficients("diagonal")
def _diagonal(params=None):
    params = params or {}
    d1, d2 = params.get("d1", 1.0), params.get("d2", 4.0)
    return CoefficientField([[_const(d1), _const(0.0)],
                             [_const(0.0), _const(d2)]], name="diagonal")


@register_coefficients("skew")
def _skew(params=None):
    params = params or {}
    s = params.get("s", 0.5)
    return CoefficientField([[_const(1.0), _const(s)],
                             [_const(-s), _const(1.0)]], name="skew")


@register_coefficients("rough")
def _rough(params=None):
    """a_11 = 1 + amp |sin x'|^expo: H^1_q membership for moderate q, and
    genuinely below C^{1/2+} smoothness at the zeros of sin."""
    params = params or {}
    amp = params.get("amp", 0.3)
    expo = params.get("exponent", 1.4)
    a11 = lambda x, y: (1.0 + amp * np.abs(np.sin(x)) ** expo) * np.ones_like(y)
    return CoefficientField([[a11, _const(0.0)],
                             [_const(0.0), _const(1.0)]],
                            q_meta=8.0, name="rough")


@register_coefficients("rough_drift")
def _rough_drift(params=None):
    params = params or {}
    base = _rough(params)
    drift = params.get("drift", 0.2)
    base.first_direct = [lambda x, y: drift * np.cos(x) * np.ones_like(y),
                         _const(0.0)]
    base.zero = _const(params.get("a0", 0.0))
    base.name = "rough_drift"
    return base


def coefficients_from_catalog(name, params=None) -> CoefficientField:
    if name not in _CATALOG:
        raise ArgumentError(f"unknown coefficient catalog entry {name!r}")
    return _CATALOG[name](params)


# ---------------------------------------------------------------------------
# ellipticity and Green coefficients
# ---------------------------------------------------------------------------

def _sample(geom: StripGeometry, fn) -> np.ndarray:
    xt = geom.grid.tangential_coords()[0][..., None]
    return np.broadcast_to(fn(xt, geom.diffeo.f_normal),
                           geom.grid.interior_shape()).astype(complex)


def check_strong_ellipticity(coeffs: CoefficientField, geom: StripGeometry,
                             directions: int = 64) -> float:
    """min over grid nodes and >= 64 unit directions of Re xi^T B(x) xi."""
    if coeffs.dim != 2:
        raise ArgumentError("only n = 2 is discretized")
    b = np.empty((2, 2) + geom.grid.interior_shape(), dtype=complex)
    for j in range(2):
        for k in range(2):
            b[j, k] = _sample(geom, coeffs.matrix[j][k])
    angles = np.linspace(0.0, np.pi, directions, endpoint=False)
    worst, worst_at = np.inf, None
    for th in angles:
        xi = (np.cos(th), np.sin(th))
        quad = np.real(b[0, 0] * xi[0] ** 2 + (b[0, 1] + b[1, 0])
                       * xi[0] * xi[1] + b[1, 1] * xi[1] ** 2)
        m = float(np.min(quad))
        if m < worst:
            worst = m
            worst_at = (np.unravel_index(int(np.argmin(quad)), quad.shape), th)
    if worst <= 0:
        raise ModelError(f"strong ellipticity fails: min = {worst:.3e} at "
                         f"node {worst_at[0]}, direction angle {worst_at[1]:.3f}")
    return worst


@dataclass
class GreenData:
    """Boundary coefficients of the conormal traces on one component.

    chi  = s0 gamma_1 + b1 . d_tau + b0 gamma_0   (b0 = nu . b_j, the
    dual-shape boundary term);
    chi' = conj(s0) gamma_1 + b1' . d_tau + b0' gamma_0  (b0' = nu . conj a_j).
    """

    s0: np.ndarray
    s0_inv: np.ndarray
    b1_tangent: np.ndarray      # b1 . unit tangent (scalar on the x'-grid)
    b1_prime_tangent: np.ndarray
    b0: np.ndarray
    b0_prime: np.ndarray


def green_coefficients(coeffs: CoefficientField, geom: StripGeometry,
                       component: str = BOTTOM, c0: float | None = None
                       ) -> GreenData:
    """s0 = nu^T B nu, tangential parts of nu^T B and nu^T B*, and the
    zeroth-order boundary terms of the two first-order shapes."""
    grid = geom.grid
    xt = grid.tangential_coords()[0]
    curve = (geom.bottom.gamma if component == BOTTOM else geom.top.gamma)
    b = np.empty((2, 2) + grid.boundary_shape(), dtype=complex)
    for j in range(2):
        for k in range(2):
            b[j, k] = coeffs.matrix[j][k](xt, curve)
    nu = geom.normal(component)
    # unit tangent oriented along +x' on both components, so that
    # t . grad u = (1/kappa) d/dx'(trace)
    if component == BOTTOM:
        tangent = np.stack([nu[1], -nu[0]])
    else:
        tangent = np.stack([-nu[1], nu[0]])
    nu_b = np.stack([nu[0] * b[0, m] + nu[1] * b[1, m] for m in range(2)])
    s0 = nu_b[0] * nu[0] + nu_b[1] * nu[1]
    b1_t = nu_b[0] * tangent[0] + nu_b[1] * tangent[1]
    nu_bp = np.stack([np.conj(nu[0] * b[m, 0] + nu[1] * b[m, 1])
                      for m in range(2)])
    b1p_t = nu_bp[0] * tangent[0] + nu_bp[1] * tangent[1]
    aj = [f(xt, curve) for f in coeffs.first_direct]
    bj = [f(xt, curve) for f in coeffs.first_dual]
    b0 = nu[0] * bj[0] + nu[1] * bj[1]
    b0p = nu[0] * np.conj(aj[0]) + nu[1] * np.conj(aj[1])
    if c0 is not None and np.min(np.abs(s0)) < c0 / 2:
        raise ModelError("s0 lost invertibility (|s0| < c0/2 at a node)")
    if np.min(np.abs(s0)) < 1e-12:
        raise ModelError("s0 vanishes at a boundary node")
    return GreenData(s0=s0, s0_inv=1.0 / s0, b1_tangent=b1_t,
                     b1_prime_tangent=b1p_t, b0=b0, b0_prime=b0p)


# ---------------------------------------------------------------------------
# assembly by form extraction
# ---------------------------------------------------------------------------

def _d0_matrix(nn, h):
    """First normal derivative: centered inside, one-sided second order at
    the ends."""
    d = np.zeros((nn, nn))
    for i in range(1, nn - 1):
        d[i, i - 1], d[i, i + 1] = -0.5 / h, 0.5 / h
    d[0, 0], d[0, 1], d[0, 2] = -1.5 / h, 2.0 / h, -0.5 / h
    d[-1, -1], d[-1, -2], d[-1, -3] = 1.5 / h, -2.0 / h, 0.5 / h
    return d


def _gamma1_weights(order: int, h: float) -> np.ndarray:
    if order == 1:
        return np.array([-1.0, 1.0]) / h
    if order == 2:
        return np.array([-1.5, 2.0, -0.5]) / h
    if order == 3:
        return np.array([-11.0 / 6, 3.0, -1.5, 1.0 / 3]) / h
    raise ArgumentError("one-sided derivative order must be 1, 2 or 3")


class DiscreteOperator:
    """Matrix-free transformed divergence-form operator (n = 2).

    ``apply`` returns all rows of the form extraction; its boundary rows are
    the flux functionals (O(1/h) as pointwise values, by design).
    ``apply_consistent`` re-evaluates the two boundary rows with one-sided
    consistent stencils for quadrature purposes.
    """

    def __init__(self, geom: StripGeometry, coeffs: CoefficientField):
        if coeffs.dim != 2:
            raise ArgumentError("only n = 2 is discretized")
        self.geom = geom
        self.coeffs = coeffs
        grid = geom.grid
        shape = grid.interior_shape()
        b_phys = np.empty((2, 2) + shape, dtype=complex)
        for j in range(2):
            for k in range(2):
                b_phys[j, k] = _sample(geom, coeffs.matrix[j][k])
        phi = geom.diffeo.phi()
        jac = geom.diffeo.det.astype(complex)
        bhat = np.einsum("jl...,jk...,km...->lm...", phi, b_phys, phi)
        self._c = jac * bhat                     # (t,n) x (t,n) slot layout
        self._jac = jac
        a_dir = np.stack([_sample(geom, f) for f in coeffs.first_direct])
        a_dual = np.stack([_sample(geom, f) for f in coeffs.first_dual])
        self._adir = np.einsum("j...,jm...->m...", a_dir, phi)
        self._adual = np.einsum("j...,jm...->m...", a_dual, phi)
        self._a0 = _sample(geom, coeffs.zero)
        nn = grid.points_normal
        self._theta = np.ones(nn)
        self._theta[0] = self._theta[-1] = 0.5
        self._h = grid.h_normal
        self._xi = grid.tangential_frequencies()[0]

    # -- small helpers ------------------------------------------------------

    def _dt(self, values):
        vhat = np.fft.fft(values, axis=0)
        return np.fft.ifft(1j * self._xi[:, None] * vhat, axis=0)

    @staticmethod
    def _avg(a):
        return 0.5 * (a[..., 1:] + a[..., :-1])

    def _halves_to_nodes_diff(self, flux):
        """(Psi[i-1/2] - Psi[i+1/2])/h with zero ghost halves: exactly the
        v-bar coefficients of a half-node flux against D+ v."""
        h = self._h
        out = np.zeros(flux.shape[:-1] + (flux.shape[-1] + 1,), dtype=complex)
        out[..., 1:] += flux / h
        out[..., :-1] -= flux / h
        return out

    def _halves_to_nodes_avg(self, g):
        out = np.zeros(g.shape[:-1] + (g.shape[-1] + 1,), dtype=complex)
        out[..., 1:] += 0.5 * g
        out[..., :-1] += 0.5 * g
        return out

    # -- main actions --------------------------------------------------------

    def apply(self, u) -> np.ndarray:
        vals = u.values if isinstance(u, SpectralField) else np.asarray(u)
        vals = vals.astype(complex)
        h = self._h
        du = (vals[..., 1:] - vals[..., :-1]) / h          # half nodes
        pu = self._dt(vals)                                # nodes
        pu_half = self._avg(pu)
        u_half = self._avg(vals)

        c_nn = self._avg(self._c[1, 1])
        c_nt = self._avg(self._c[1, 0])
        c_tn = self._avg(self._c[0, 1])
        c_tt = self._c[0, 0]
        jb_n = self._avg(self._jac * self._adual[1])
        ja_n = self._avg(self._jac * self._adir[1])

        theta_flux = c_nn * du + c_nt * pu_half + jb_n * u_half
        out = self._halves_to_nodes_diff(theta_flux)

        xi_flux = c_tn * du
        out -= self._dt(self._halves_to_nodes_avg(xi_flux))

        out -= self._dt(self._theta * c_tt * pu)

        out -= self._dt(self._theta * self._jac * self._adual[0] * vals)

        out += self._halves_to_nodes_avg(ja_n * du)

        out += self._theta * self._jac * (self._adir[0] * pu
                                          + self._a0 * vals)

        return out / (self._theta * self._jac)

    def apply_interior(self, u) -> np.ndarray:
        return self.apply(u)[..., 1:-1]

    def apply_consistent(self, u) -> np.ndarray:
        """Pointwise-consistent action at all rows (one-sided at the ends);
        used by quadratures of the continuum Green identity."""
        vals = u.values if isinstance(u, SpectralField) else np.asarray(u)
        vals = vals.astype(complex)
        d0 = _d0_matrix(self.geom.grid.points_normal, self._h)
        dnu = np.einsum("ij,...j->...i", d0, vals)
        pu = self._dt(vals)
        w_n = (self._c[1, 1] * dnu + self._c[1, 0] * pu
               + self._jac * self._adual[1] * vals)
        w_t = (self._c[0, 1] * dnu + self._c[0, 0] * pu
               + self._jac * self._adual[0] * vals)
        div = np.einsum("ij,...j->...i", d0, w_n) + self._dt(w_t)
        first = self._adir[0] * pu + self._adir[1] * dnu + self._a0 * vals
        return -div / self._jac + first

    def form_pairing(self, au_rows, v) -> complex:
        """<A u, v>_{J, trapezoid} given precomputed rows of apply()."""
        grid = self.geom.grid
        vvals = v.values if isinstance(v, SpectralField) else np.asarray(v)
        dens = au_rows * np.conj(vvals) * self._jac * self._theta
        return complex(grid.tangential_cell * grid.h_normal * np.sum(dens))

    def interior_pairing(self, a_vals, b_vals) -> complex:
        """<a, b>_{J, interior rows only} (weight h at rows 1..T-1)."""
        grid = self.geom.grid
        dens = (a_vals[..., 1:-1] * np.conj(b_vals[..., 1:-1])
                * self._jac[..., 1:-1])
        return complex(grid.tangential_cell * grid.h_normal * np.sum(dens))

    # -- flux conormal (exact Green companion) --------------------------------

    def flux_conormal(self, u, component: str = BOTTOM) -> SpectralField:
        """The trace making the discrete Green identity exact:
        chi u = -(h/2) (J/kappa) (A u)_{boundary row}."""
        rows = self.apply(u)
        grid = self.geom.grid
        kap = self.geom.kappa(component)
        idx = 0 if component == BOTTOM else -1
        val = -(self._h / 2.0) * self._jac[..., idx] / kap * rows[..., idx]
        return boundary_field(grid, val)

    # -- level blocks for the direct solver -----------------------------------

    def level_blocks(self, i: int, dense_dt: np.ndarray):
        """(L, D, U) coupling blocks of row level i (1 <= i <= T-1)."""
        nx = self.geom.grid.points_tangential[0]
        h = self._h
        c_nn = self._avg(self._c[1, 1])
        c_nt = self._avg(self._c[1, 0])
        c_tn = self._avg(self._c[0, 1])
        jb_n = self._avg(self._jac * self._adual[1])
        ja_n = self._avg(self._jac * self._adir[1])
        w = 1.0 / (self._theta[i] * self._jac[..., i])

        def diag(a):
            return np.diag(a)

        lm = np.zeros((nx, nx), dtype=complex)
        dm = np.zeros((nx, nx), dtype=complex)
        um = np.zeros((nx, nx), dtype=complex)

        # normal flux: (Theta[i-1/2] - Theta[i+1/2])/h rows
        lo, hi = i - 1, i
        lm += diag(-c_nn[..., lo] / h ** 2)
        dm += diag((c_nn[..., lo] + c_nn[..., hi]) / h ** 2)
        um += diag(-c_nn[..., hi] / h ** 2)
        lm += diag(c_nt[..., lo] / (2 * h)) @ dense_dt
        dm += diag((c_nt[..., lo] - c_nt[..., hi]) / (2 * h)) @ dense_dt
        um += diag(-c_nt[..., hi] / (2 * h)) @ dense_dt
        lm += diag(jb_n[..., lo] / (2 * h))
        dm += diag((jb_n[..., lo] - jb_n[..., hi]) / (2 * h))
        um += diag(-jb_n[..., hi] / (2 * h))

        # xi flux: -dt of half-node average of c_tn * du
        lm += dense_dt @ diag(c_tn[..., lo] / (2 * h))
        dm += dense_dt @ diag((c_tn[..., hi] - c_tn[..., lo]) / (2 * h))
        um += dense_dt @ diag(-c_tn[..., hi] / (2 * h))

        # tangential-tangential (theta_i = 1 at interior rows)
        dm -= dense_dt @ diag(self._c[0, 0][..., i]) @ dense_dt

        # dual tangential
        dm -= dense_dt @ diag(self._jac[..., i] * self._adual[0][..., i])

        # direct normal: + (G[i-1/2] + G[i+1/2])/2
        lm += diag(-ja_n[..., lo] / (2 * h))
        dm += diag(ja_n[..., lo] / (2 * h)) - diag(ja_n[..., hi] / (2 * h))
        um += diag(ja_n[..., hi] / (2 * h))

        # direct tangential + zeroth
        dm += diag(self._jac[..., i] * self._adir[0][..., i]) @ dense_dt
        dm += diag(self._jac[..., i] * self._a0[..., i])

        return w[:, None] * lm, w[:, None] * dm, w[:, None] * um


def assemble_operator(coeffs: CoefficientField, geom: StripGeometry,
                      check: bool = True) -> DiscreteOperator:
    if check:
        check_strong_ellipticity(coeffs, geom)
    return DiscreteOperator(geom, coeffs)


def assemble_adjoint(coeffs: CoefficientField, geom: StripGeometry
                     ) -> DiscreteOperator:
    """The companion primed operator: the same extraction applied to the
    conjugate form, i.e. assembly of the formal-adjoint coefficients."""
    return DiscreteOperator(geom, coeffs.formal_adjoint())


# ---------------------------------------------------------------------------
# consistent conormal traces
# ---------------------------------------------------------------------------

def boundary_normal_derivative(u, geom: StripGeometry,
                               component: str = BOTTOM,
                               order: int = 3) -> np.ndarray:
    """gamma_1 u = d_nu u: physical normal derivative via nu . Phi grad."""
    vals = u.values if isinstance(u, SpectralField) else np.asarray(u)
    grid = geom.grid
    h = grid.h_normal
    w = _gamma1_weights(order, h)
    idx = 0 if component == BOTTOM else -1
    sign = 1.0 if component == BOTTOM else -1.0
    stencil = vals[..., :len(w)] if component == BOTTOM \
        else vals[..., -len(w):][..., ::-1]
    dn = sign * np.tensordot(stencil, w, axes=([-1], [0]))
    xi = grid.tangential_frequencies()[0]
    trace = vals[..., idx]
    dt = np.fft.ifft(1j * xi * np.fft.fft(trace))
    phi = geom.diffeo.phi()
    nu = geom.normal(component)
    grad = np.stack([dt, dn])
    phys = np.einsum("jk...,k...->j...", phi[..., idx], grad)
    return nu[0] * phys[0] + nu[1] * phys[1]


def conormal_trace(u, coeffs: CoefficientField, geom: StripGeometry,
                   component: str = BOTTOM, primed: bool = False,
                   order: int = 3) -> SpectralField:
    """chi u = s0 gamma_1 u + b1 . d_tau (gamma_0 u)   (+ b0' gamma_0 u when
    primed); the tangential derivative runs along the boundary curve."""
    grid = geom.grid
    gd = green_coefficients(coeffs, geom, component)
    vals = u.values if isinstance(u, SpectralField) else np.asarray(u)
    idx = 0 if component == BOTTOM else -1
    trace = vals[..., idx]
    xi = grid.tangential_frequencies()[0]
    dtrace = np.fft.ifft(1j * xi * np.fft.fft(trace))
    kap = geom.kappa(component)
    gamma1 = boundary_normal_derivative(u, geom, component, order)
    if not primed:
        out = (gd.s0 * gamma1 + gd.b1_tangent * dtrace / kap
               + gd.b0 * trace)
    else:
        out = (np.conj(gd.s0) * gamma1 + gd.b1_prime_tangent * dtrace / kap
               + gd.b0_prime * trace)
    return boundary_field(grid, out)


def greens_identity_residual(u, v, coeffs: CoefficientField,
                             geom: StripGeometry, drop_kappa: bool = False,
                             order: int = 3) -> float:
    """|(Au, v) - (u, A'v) - (chi u, g0 v)_Sigma + (g0 u, chi' v)_Sigma|
    with pointwise-consistent operator rows and kappa-weighted boundary
    quadrature over both components (the negative control drops kappa)."""
    grid = geom.grid
    op = assemble_operator(coeffs, geom, check=False)
    opp = assemble_adjoint(coeffs, geom)
    au = op.apply_consistent(u)
    apv = opp.apply_consistent(v)
    w = np.ones(grid.points_normal)
    w[0] = w[-1] = 0.5
    uv = u.values if isinstance(u, SpectralField) else u
    vv = v.values if isinstance(v, SpectralField) else v
    jac = geom.diffeo.det
    vol = grid.tangential_cell * grid.h_normal * (
        np.sum(au * np.conj(vv) * jac * w)
        - np.sum(uv * np.conj(apv) * jac * w))
    bd = 0.0
    for comp in (BOTTOM, TOP):
        kap = 1.0 if drop_kappa else geom.kappa(comp)
        idx = 0 if comp == BOTTOM else -1
        chi_u = conormal_trace(u, coeffs, geom, comp, primed=False,
                               order=order).values
        chi_v = conormal_trace(v, coeffs, geom, comp, primed=True,
                               order=order).values
        bd += grid.tangential_cell * (
            np.sum(kap * chi_u * np.conj(vv[..., idx]))
            - np.sum(kap * uv[..., idx] * np.conj(chi_v)))
    return float(abs(vol - bd))


# ---------------------------------------------------------------------------
# right inverse of (chi, gamma_0)
# ---------------------------------------------------------------------------

def trace_right_inverse(phi_chi, phi_0, coeffs: CoefficientField,
                        geom: StripGeometry, component: str = BOTTOM,
                        order: int = 3) -> SpectralField:
    """K{v1, v2} = K0 v2 + K1 (v1 - chi K0 v2): gamma_0 exact, chi to O(h^2).

    K0 is the semigroup lifting; K1 = (first-moment lifting) o s1^{-1} with
    s1 = s0 * (nu^T Phi e_n), the effective coefficient of the reference
    normal derivative in chi.
    """
    grid = geom.grid
    gd = green_coefficients(coeffs, geom, component)
    phi = geom.diffeo.phi()
    nu = geom.normal(component)
    idx = 0 if component == BOTTOM else -1
    sign = 1.0 if component == BOTTOM else -1.0
    c_nu = sign * (nu[0] * phi[0, 1][..., idx] + nu[1] * phi[1, 1][..., idx])
    s1 = gd.s0 * c_nu
    if np.min(np.abs(s1)) < 1e-12:
        raise ModelError("s1 not invertible on this component")

    k0 = lift_semigroup(boundary_field(grid, np.asarray(phi_0, dtype=complex)),
                        grid, component)
    chi_k0 = conormal_trace(k0, coeffs, geom, component, order=order).values
    resid = np.asarray(phi_chi, dtype=complex) - chi_k0

    # first-moment lifting: modes w_hat(k) * dist * exp(-<k> dist)
    xi = grid.tangential_frequencies()[0]
    br = np.sqrt(1.0 + xi ** 2)
    xn = grid.normal_coords()
    dist = xn if component == BOTTOM else geom.grid.normal_extent - xn
    what = np.fft.fft(resid / s1)
    prof = (sign * dist)[None, :] * np.exp(-br[:, None] * dist[None, :])
    k1 = np.fft.ifft(what[:, None] * prof, axis=0)
    return interior_field(grid, k0.values + k1)
