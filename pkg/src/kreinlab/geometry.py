"""Periodicized graph domains and the lifting diffeomorphism.

The physical domain lies between the graph of a rough periodic function and
the image of a flat cap at reference height H.  The map

    F(x', x_n) = (x', x_n + Gamma(x', lambda_scale * x_n)),

with Gamma the semigroup lifting of the bottom profile, carries the
reference strip onto the physical domain; lambda_scale is shrunk until the
normal derivative of F_n stays >= 1/2 everywhere, which makes F a bijection
column by column.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ArgumentError
from .grids import (GridSpec, SpectralField, boundary_field, interior_field)

BOTTOM = "bottom"
TOP = "top"


@dataclass
class BoundaryGraph:
    """Samples of a periodic profile together with its smoothness class.

    tau = M - 3/2 - (n-1)/p must be positive.
    """

    grid: GridSpec
    gamma: np.ndarray
    smoothness_m: int = 2
    smoothness_p: float = 8.0

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.gamma.shape != self.grid.boundary_shape():
            raise ArgumentError("gamma samples must live on the tangential grid")
        if self.tau <= 0:
            raise ArgumentError(
                f"tau = {self.tau:.4f} <= 0: profile class too rough")

    @property
    def tau(self) -> float:
        n = self.grid.dim
        return self.smoothness_m - 1.5 - (n - 1) / self.smoothness_p

    def tangential_gradient(self):
        """Spectral gradient of the profile, one array per tangential axis."""
        xi = self.grid.tangential_frequencies()
        ghat = np.fft.fftn(self.gamma)
        return [np.real(np.fft.ifftn(1j * c * ghat)) for c in xi]

    def kappa(self) -> np.ndarray:
        grad = self.tangential_gradient()
        return np.sqrt(1.0 + sum(g ** 2 for g in grad))


def _lift_on_levels(gamma_hat, bracket_vals, levels):
    """Gamma(x', t_j) = sum_k gamma_hat(k) e^{ikx'} e^{-<k> t_j}."""
    prof = np.exp(-bracket_vals[..., None] * levels)
    return np.real(np.fft.ifftn(gamma_hat[..., None] * prof,
                                axes=range(gamma_hat.ndim)))


@dataclass
class DiffeoData:
    """Evaluated diffeomorphism: map heights, Jacobian data, surface factors."""

    grid: GridSpec
    lambda_scale: float
    f_normal: np.ndarray          # F_n(x', x_n) on the reference grid
    grad_gamma_lift: np.ndarray   # (n-1, grid) tangential derivatives of Gamma
    dn_term: np.ndarray           # lambda * (d_t Gamma)(x', lambda x_n)
    kappa_bottom: np.ndarray
    kappa_top: np.ndarray

    @property
    def det(self) -> np.ndarray:
        """det grad F = 1 + lambda * d_t Gamma, the volume element."""
        return 1.0 + self.dn_term

    def phi(self) -> np.ndarray:
        """Phi = (grad F)^{-1} per node, shape (n, n) + grid.

        grad F = I + c e_n^T with c = (grad' Gamma, lambda d_t Gamma), so
        Phi = I - c e_n^T / (1 + lambda d_t Gamma).
        """
        n = self.grid.dim
        shape = self.grid.interior_shape()
        out = np.zeros((n, n) + shape)
        for j in range(n):
            out[j, j] = 1.0
        b = self.det
        for j in range(n - 1):
            out[j, n - 1] = -self.grad_gamma_lift[j] / b
        out[n - 1, n - 1] = 1.0 / b
        return out

    def check_invariants(self, tol: float = 1e-10):
        if np.min(self.det) < 0.5 - 1e-12:
            raise ArgumentError("normal Jacobian entry dropped below 1/2")
        if np.min(self.kappa_bottom) < 1.0 - 1e-12:
            raise ArgumentError("kappa must be >= 1")
        # Phi * grad F = I at every node
        n = self.grid.dim
        phi = self.phi()
        gradf = np.zeros_like(phi)
        for j in range(n):
            gradf[j, j] = 1.0
        for j in range(n - 1):
            gradf[j, n - 1] = self.grad_gamma_lift[j]
        gradf[n - 1, n - 1] = self.det
        prod = np.einsum("jk...,kl...->jl...", phi, gradf)
        target = np.zeros_like(prod)
        for j in range(n):
            target[j, j] = 1.0
        if np.max(np.abs(prod - target)) > tol:
            raise ArgumentError("Phi is not the inverse Jacobian")


def build_diffeo(graph: BoundaryGraph) -> DiffeoData:
    """Construct the lifting diffeomorphism for a bottom profile.

    The scale is the largest value in {1, 1/2, 1/4, ...} keeping
    |lambda * d_t Gamma| <= 1/2 at all evaluation nodes, which is exactly
    the strict monotonicity margin of F_n.  Deterministic for fixed inputs.
    """
    grid = graph.grid
    ghat = np.fft.fftn(graph.gamma)
    xi = grid.tangential_frequencies()
    br = np.sqrt(1.0 + sum(np.abs(c) ** 2 for c in xi))
    xn = grid.normal_coords()

    lam = 1.0
    for _ in range(60):
        levels = lam * xn
        dgamma_dt = np.real(np.fft.ifftn(
            (-br * ghat)[..., None] * np.exp(-br[..., None] * levels),
            axes=range(ghat.ndim)))
        if np.max(np.abs(lam * dgamma_dt)) <= 0.5:
            break
        lam *= 0.5
    else:
        raise ArgumentError("no admissible scale found (profile too steep)")

    levels = lam * xn
    gamma_lift = _lift_on_levels(ghat, br, levels)
    grad_lift = np.stack([
        np.real(np.fft.ifftn((1j * c * ghat)[..., None]
                             * np.exp(-br[..., None] * levels),
                             axes=range(ghat.ndim)))
        for c in xi])
    dn_term = lam * np.real(np.fft.ifftn(
        (-br * ghat)[..., None] * np.exp(-br[..., None] * levels),
        axes=range(ghat.ndim)))

    f_normal = xn + gamma_lift
    top_profile = f_normal[..., -1]
    top_hat = np.fft.fftn(top_profile)
    top_grad = [np.real(np.fft.ifftn(1j * c * top_hat)) for c in xi]
    kappa_top = np.sqrt(1.0 + sum(g ** 2 for g in top_grad))

    data = DiffeoData(grid=grid, lambda_scale=lam, f_normal=f_normal,
                      grad_gamma_lift=grad_lift, dn_term=dn_term,
                      kappa_bottom=graph.kappa(), kappa_top=kappa_top)
    data.check_invariants()
    return data


@dataclass
class StripGeometry:
    """Physical domain between a rough bottom graph and its pushed-forward cap."""

    bottom: BoundaryGraph
    top: BoundaryGraph
    diffeo: DiffeoData

    @property
    def grid(self) -> GridSpec:
        return self.bottom.grid

    def kappa(self, component: str) -> np.ndarray:
        return (self.diffeo.kappa_bottom if component == BOTTOM
                else self.diffeo.kappa_top)

    def normal(self, component: str) -> np.ndarray:
        """Interior unit normal in physical coordinates, shape (n,) + bd grid."""
        n = self.grid.dim
        out = np.zeros((n,) + self.grid.boundary_shape())
        if component == BOTTOM:
            grad = self.bottom.tangential_gradient()
            kap = self.diffeo.kappa_bottom
            for j in range(n - 1):
                out[j] = -grad[j] / kap
            out[n - 1] = 1.0 / kap
        else:
            grad = self.top.tangential_gradient()
            kap = self.diffeo.kappa_top
            for j in range(n - 1):
                out[j] = grad[j] / kap
            out[n - 1] = -1.0 / kap
        return out

    def physical_heights(self) -> np.ndarray:
        """Uniform column grids spanning [gamma(x'), top(x')], interior shape."""
        s = np.linspace(0.0, 1.0, self.grid.points_normal)
        bottom = self.bottom.gamma[..., None]
        top = self.top.gamma[..., None]
        return bottom + (top - bottom) * s

    def sample_physical(self, func) -> SpectralField:
        """Sample func(x', y) on the column-uniform physical grid."""
        xt = self.grid.tangential_coords()
        y = self.physical_heights()
        vals = func(*(c[..., None] for c in xt), y)
        return interior_field(self.grid, np.broadcast_to(vals,
                                                         y.shape).copy())

    def sample_reference(self, func) -> SpectralField:
        """Sample the exact composition func(F(x)) on the reference grid."""
        xt = self.grid.tangential_coords()
        vals = func(*(c[..., None] for c in xt), self.diffeo.f_normal)
        return interior_field(self.grid,
                              np.broadcast_to(vals,
                                              self.grid.interior_shape()).copy())


def build_strip_geometry(graph: BoundaryGraph) -> StripGeometry:
    diffeo = build_diffeo(graph)
    top = BoundaryGraph(graph.grid, diffeo.f_normal[..., -1],
                        graph.smoothness_m, graph.smoothness_p)
    return StripGeometry(bottom=graph, top=top, diffeo=diffeo)


def flat_geometry(grid: GridSpec) -> StripGeometry:
    return build_strip_geometry(BoundaryGraph(grid,
                                              np.zeros(grid.boundary_shape())))


# ---------------------------------------------------------------------------
# pullbacks
# ---------------------------------------------------------------------------

def pullback(u: SpectralField, geom: StripGeometry) -> SpectralField:
    """F* u on the reference grid by columnwise cubic interpolation.

    u is sampled on the column-uniform physical grid; tangential nodes map
    to themselves since F fixes x'.
    """
    if u.location != "interior":
        raise ArgumentError("pullback expects an interior (physical) field")
    grid = geom.grid
    heights = geom.physical_heights()
    targets = geom.diffeo.f_normal
    flat_h = heights.reshape(-1, grid.points_normal)
    flat_t = targets.reshape(-1, grid.points_normal)
    flat_u = u.values.reshape(-1, grid.points_normal)
    out = np.empty_like(flat_u)
    eps = 1e-12 * max(1.0, float(np.max(np.abs(flat_h))))
    for i in range(flat_u.shape[0]):
        if (flat_t[i].min() < flat_h[i, 0] - eps
                or flat_t[i].max() > flat_h[i, -1] + eps):
            raise ArgumentError("evaluation point outside physical column")
        spline = CubicSpline(flat_h[i], flat_u[i])
        out[i] = spline(np.clip(flat_t[i], flat_h[i, 0], flat_h[i, -1]))
    return interior_field(grid, out.reshape(grid.interior_shape()))


def pushforward(v: SpectralField, geom: StripGeometry) -> SpectralField:
    """F^{-1,*} v: reference values interpolated at F_n^{-1}(column heights)."""
    if v.location != "interior":
        raise ArgumentError("pushforward expects an interior (reference) field")
    grid = geom.grid
    xn = grid.normal_coords()
    targets = geom.physical_heights()
    fn = geom.diffeo.f_normal
    flat_fn = fn.reshape(-1, grid.points_normal)
    flat_t = targets.reshape(-1, grid.points_normal)
    flat_v = v.values.reshape(-1, grid.points_normal)
    out = np.empty_like(flat_v)
    for i in range(flat_v.shape[0]):
        inverse = CubicSpline(flat_fn[i], xn)   # monotone by construction
        pre = np.clip(inverse(flat_t[i]), 0.0, grid.normal_extent)
        out[i] = CubicSpline(xn, flat_v[i])(pre)
    return interior_field(grid, out.reshape(grid.interior_shape()))


def reference_gradient(v: SpectralField) -> np.ndarray:
    """Gradient on the reference grid: spectral tangentially, second-order
    differences (one-sided at the rows next to the boundary) normally."""
    grid = v.grid
    xi = grid.tangential_frequencies()
    axes = tuple(range(len(grid.points_tangential)))
    vhat = np.fft.fftn(v.values, axes=axes)
    n = grid.dim
    out = np.empty((n,) + grid.interior_shape(), dtype=complex)
    for j in range(n - 1):
        out[j] = np.fft.ifftn(1j * xi[j][..., None] * vhat, axes=axes)
    h = grid.h_normal
    dn = np.empty_like(v.values)
    dn[..., 1:-1] = (v.values[..., 2:] - v.values[..., :-2]) / (2 * h)
    dn[..., 0] = (-3 * v.values[..., 0] + 4 * v.values[..., 1]
                  - v.values[..., 2]) / (2 * h)
    dn[..., -1] = (3 * v.values[..., -1] - 4 * v.values[..., -2]
                   + v.values[..., -3]) / (2 * h)
    out[n - 1] = dn
    return out


def transform_gradient(u: SpectralField, geom: StripGeometry) -> np.ndarray:
    """Phi * grad(F* u): the pullback of the physical gradient."""
    v = pullback(u, geom)
    gradv = reference_gradient(v)
    phi = geom.diffeo.phi()
    return np.einsum("jk...,k...->j...", phi, gradv)


def transform_hessian(u: SpectralField, geom: StripGeometry):
    """Principal part and first-order remainder of the Hessian pullback.

    principal[j,k] = sum_{l,m} Phi[j,l] Phi[k,m] d_l d_m (F*u)
    remainder[j,k] = sum_{l,m} Phi[j,l] (d_l Phi[k,m]) d_m (F*u)
    """
    v = pullback(u, geom)
    grid = geom.grid
    n = grid.dim
    gradv = reference_gradient(v)
    hess = np.empty((n, n) + grid.interior_shape(), dtype=complex)
    for m in range(n):
        dm = SpectralField(grid, gradv[m], "interior")
        hess[:, m] = reference_gradient(dm)
    phi = geom.diffeo.phi()
    dphi = np.empty((n, n, n) + grid.interior_shape(), dtype=complex)
    for k in range(n):
        for m in range(n):
            comp = SpectralField(grid, phi[k, m].astype(complex), "interior")
            dphi[:, k, m] = reference_gradient(comp)
    principal = np.einsum("jl...,km...,lm...->jk...", phi, phi, hess)
    remainder = np.einsum("jl...,lkm...,m...->jk...", phi, dphi, gradv)
    return principal, remainder


def boundary_pullback(u: SpectralField) -> SpectralField:
    """F*_{gamma,0}: graph charts fix x', so boundary arrays re-interpret."""
    if u.location != "boundary":
        raise ArgumentError("expects a boundary field")
    return u.copy_with(u.values.copy())


def tilde_pullback(u: SpectralField, geom: StripGeometry,
                   direction: str = "forward",
                   component: str = BOTTOM) -> SpectralField:
    """kappa-weighted boundary pullbacks.

    forward: F~* u = kappa * (F* u); inverse: F~^{-1,*} v = F^{-1,*}(kappa v).
    On graph charts both act on arrays as multiplication by kappa, so the
    composition is multiplication by kappa^2.
    """
    if u.location != "boundary":
        raise ArgumentError("expects a boundary field")
    kap = geom.kappa(component)
    if direction not in ("forward", "inverse"):
        raise ArgumentError(f"unknown direction {direction!r}")
    return u.copy_with(kap * u.values)


def boundary_pairing(geom: StripGeometry, a: SpectralField, b: SpectralField,
                     component: str = BOTTOM, weighted: bool = True) -> complex:
    """<a, b> over one boundary component; weighted uses the surface measure."""
    kap = geom.kappa(component) if weighted else 1.0
    return complex(geom.grid.tangential_cell
                   * np.sum(kap * a.values * np.conj(b.values)))


def volume_pairing(geom: StripGeometry, a: SpectralField, b: SpectralField,
                   include_boundary_cells: bool = True) -> complex:
    """L2(Omega) pairing through the reference grid: trapezoid x Jacobian."""
    grid = geom.grid
    w = np.ones(grid.points_normal)
    w[0] = w[-1] = 0.5
    if not include_boundary_cells:
        w[0] = w[-1] = 0.0
    dens = a.values * np.conj(b.values) * geom.diffeo.det * w
    return complex(grid.tangential_cell * grid.h_normal * np.sum(dens))


def gauss_residual(geom: StripGeometry, components, divergence) -> float:
    """|int_Omega div f dx + int_Sigma nu . f dsigma| for callables f, div f.

    components: list of n callables f_j(x', y); divergence: callable.
    The interior normal convention makes the two terms cancel.
    """
    grid = geom.grid
    div_ref = geom.sample_reference(divergence)
    ones = geom.sample_reference(lambda *a: np.ones_like(a[-1]))
    vol = volume_pairing(geom, div_ref, ones)
    total = vol
    xt = grid.tangential_coords()
    for comp in (BOTTOM, TOP):
        curve = geom.bottom.gamma if comp == BOTTOM else geom.top.gamma
        nu = geom.normal(comp)
        kap = geom.kappa(comp)
        flux = sum(nu[j] * components[j](*xt, curve) for j in range(grid.dim))
        total += grid.tangential_cell * np.sum(flux * kap)
    return float(abs(total))


def holder_seminorm(values: np.ndarray, tau: float, h: float) -> float:
    """Max first-difference quotient |f(x+h)-f(x)| / h^tau along axis 0."""
    diff = np.abs(np.roll(values, -1, axis=0) - values)
    return float(np.max(diff) / h ** tau)


# ---------------------------------------------------------------------------
# profile catalog and JSON interchange
# ---------------------------------------------------------------------------

def profile_sine(grid: GridSpec, amplitude: float = 0.1, frequency: int = 1,
                 m: int = 2, p: float = 8.0) -> BoundaryGraph:
    x = grid.tangential_coords()[0]
    return BoundaryGraph(grid, amplitude * np.sin(frequency * x), m, p)


def profile_rough_fourier(grid: GridSpec, m: int = 2, p: float = 8.0,
                          amplitude: float = 0.05, seed: int = 0,
                          levels: int = 5) -> BoundaryGraph:
    """Lacunary series with exactly the declared dyadic decay: one mode per
    block with amplitude 2^{-l(M-1/2)} / l, a genuine B^{M-1/2}_{p,2} profile."""
    rng = np.random.default_rng(seed)
    x = grid.tangential_coords()[0]
    s = m - 0.5
    vals = np.zeros_like(x)
    nyq = grid.points_tangential[0] // 2
    for l in range(1, levels + 1):
        k = 2 ** l
        if k >= nyq:
            break
        vals += (2.0 ** (-l * s) / l) * np.cos(k * x + rng.uniform(0, 2 * np.pi))
    return BoundaryGraph(grid, amplitude * vals, m, p)


def geometry_to_json(geom: StripGeometry) -> str:
    payload = {
        "periods": list(geom.grid.periods),
        "points_tangential": list(geom.grid.points_tangential),
        "points_normal": geom.grid.points_normal,
        "normal_extent": geom.grid.normal_extent,
        "gamma_bottom": geom.bottom.gamma.ravel().tolist(),
        "gamma_top": geom.top.gamma.ravel().tolist(),
        "M": geom.bottom.smoothness_m,
        "p": geom.bottom.smoothness_p,
    }
    return json.dumps(payload, indent=1)


def geometry_from_json(text: str) -> StripGeometry:
    data = json.loads(text)
    grid = GridSpec(dim=len(data["periods"]) + 1,
                    periods=tuple(data["periods"]),
                    points_tangential=tuple(data["points_tangential"]),
                    points_normal=int(data["points_normal"]),
                    normal_extent=float(data["normal_extent"]))
    gamma = np.array(data["gamma_bottom"], dtype=float).reshape(
        grid.boundary_shape())
    geom = build_strip_geometry(BoundaryGraph(grid, gamma,
                                              int(data["M"]),
                                              float(data["p"])))
    if "gamma_top" in data and data["gamma_top"] is not None:
        declared = np.array(data["gamma_top"], dtype=float).reshape(
            grid.boundary_shape())
        if np.max(np.abs(declared - geom.top.gamma)) > 1e-8 * max(
                1.0, float(np.max(np.abs(declared)))):
            raise ArgumentError(
                "gamma_top inconsistent with the pushed-forward cap")
    return geom
