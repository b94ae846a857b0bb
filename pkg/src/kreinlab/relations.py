"""Extension theory for dual pairs of linear relations in C^N.

A relation is a subspace of H x H = C^{2N} stored as an orthonormal basis of
its graph.  Everything the abstract theory needs (adjoints, kernels,
non-orthogonal decompositions, the operator correspondence T <-> realization,
E/F/G operators, M-functions, Krein resolvent formulas) turns into exact
dense linear algebra here, which makes this module the oracle for the PDE
layers.

Multivalued parts are genuine: restricting an invertible matrix to a proper
subspace and taking adjoints produces relations whose multivalued part plays
the role the boundary plays for differential operators.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, SingularityError

RANK_RTOL = 1e-10


# ---------------------------------------------------------------------------
# subspace utilities
# ---------------------------------------------------------------------------

def orth(cols: np.ndarray, rtol: float = RANK_RTOL,
         atol: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the column span, rank cut at rtol * sigma_max.

    ``atol`` guards the all-but-zero case (numerical junk columns)."""
    cols = np.atleast_2d(np.asarray(cols, dtype=complex))
    if cols.shape[1] == 0:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] <= atol:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > max(rtol * s[0], atol)))
    return u[:, :rank]


def complement(basis: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement in C^dim."""
    if basis.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    u, s, _ = np.linalg.svd(basis, full_matrices=True)
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    return u[:, rank:]


def null_space(mat: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return vh.conj().T
    rank = int(np.sum(s > rtol * s[0]))
    return vh.conj().T[:, rank:]


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral norm of the difference of orthogonal projectors."""
    pa = a @ a.conj().T
    pb = b @ b.conj().T
    if pa.shape != pb.shape:
        raise ArgumentError("subspaces live in different ambient spaces")
    return float(np.linalg.norm(pa - pb, 2))


def project(basis: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Orthogonal projection of column vectors onto span(basis)."""
    return basis @ (basis.conj().T @ vecs)


# ---------------------------------------------------------------------------
# relations
# ---------------------------------------------------------------------------

@dataclass
class SubspaceGraph:
    """Linear relation in C^N x C^N, stored by an orthonormal graph basis."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=complex)
        if self.basis.shape[0] != 2 * self.ambient_dim:
            raise ArgumentError("graph basis must have 2N rows")
        gram = self.basis.conj().T @ self.basis
        if not np.allclose(gram, np.eye(self.basis.shape[1]), atol=1e-12):
            raise ArgumentError("graph basis must be orthonormal")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_span(cls, ambient_dim: int, cols: np.ndarray) -> "SubspaceGraph":
        return cls(ambient_dim, orth(cols))

    @classmethod
    def from_operator(cls, mat: np.ndarray,
                      domain: np.ndarray | None = None) -> "SubspaceGraph":
        """Graph of a matrix, optionally restricted to span(domain)."""
        mat = np.asarray(mat, dtype=complex)
        n = mat.shape[0]
        dom = np.eye(n, dtype=complex) if domain is None else orth(domain)
        return cls.from_span(n, np.vstack([dom, mat @ dom]))

    # -- block accessors ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def top(self) -> np.ndarray:
        return self.basis[: self.ambient_dim]

    @property
    def bottom(self) -> np.ndarray:
        return self.basis[self.ambient_dim:]

    # -- derived subspaces --------------------------------------------------

    def domain_basis(self) -> np.ndarray:
        return orth(self.top)

    def range_basis(self) -> np.ndarray:
        return orth(self.bottom)

    def kernel_basis(self) -> np.ndarray:
        """Basis of ker = {u : (u, 0) in graph}."""
        coeff = null_space(self.bottom)
        return orth(self.top @ coeff)

    def mul_basis(self) -> np.ndarray:
        """Basis of the multivalued part {g : (0, g) in graph}."""
        coeff = null_space(self.top)
        return orth(self.bottom @ coeff)

    def is_operator_graph(self) -> bool:
        return self.mul_basis().shape[1] == 0

    # -- relation algebra ---------------------------------------------------

    def adjoint(self) -> "SubspaceGraph":
        """graph(S*) = (J graph(S))^perp with J(v, g) = (-g, v)."""
        n = self.ambient_dim
        rotated = np.vstack([-self.bottom, self.top])
        return SubspaceGraph(n, complement(rotated, 2 * n))

    def shifted(self, lam: complex) -> "SubspaceGraph":
        """Graph of S - lam: pairs (u, f - lam u)."""
        return SubspaceGraph.from_span(
            self.ambient_dim,
            np.vstack([self.top, self.bottom - lam * self.top]))

    def contains(self, other: "SubspaceGraph", tol: float = 1e-10) -> bool:
        resid = other.basis - project(self.basis, other.basis)
        return bool(np.linalg.norm(resid, 2) < tol)

    def distance(self, other: "SubspaceGraph") -> float:
        return subspace_distance(self.basis, other.basis)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """One representative f with (u, f) in the relation (least squares)."""
        u = np.asarray(u, dtype=complex)
        coeff, *_ = np.linalg.lstsq(self.top, u, rcond=None)
        resid = self.top @ coeff - u
        scale = max(np.linalg.norm(u), 1.0)
        if np.linalg.norm(resid) > 1e-8 * scale:
            raise ArgumentError("vector is not in the domain of the relation")
        return self.bottom @ coeff

    def inverse_matrix(self, lam: complex = 0.0,
                       cond_threshold: float = 1e12) -> np.ndarray:
        """Matrix of (S - lam)^{-1} when the shifted relation is bijective.

        Requires graph dimension N; raises SingularityError otherwise or
        when lam is (numerically) in the spectrum.
        """
        n = self.ambient_dim
        if self.dim != n:
            raise SingularityError(
                f"graph dimension {self.dim} != {n}: not an invertible relation",
                operator="relation")
        mat = self.bottom - lam * self.top
        s = np.linalg.svd(mat, compute_uv=False)
        if s[-1] == 0.0 or s[0] / s[-1] > cond_threshold:
            raise SingularityError(
                f"lambda={lam} is in the numerical spectrum "
                f"(cond ~ {s[0] / max(s[-1], 1e-300):.2e})", operator="shift")
        return self.top @ np.linalg.inv(mat)


# ---------------------------------------------------------------------------
# dual pairs
# ---------------------------------------------------------------------------

@dataclass
class DualPair:
    """A_min, A'_min and an invertible reference extension A_gamma.

    A_max = (A'_min)*, A'_max = (A_min)*; Z = ker A_max, Z' = ker A'_max.
    The reference extension must be invertible as a relation: trivial kernel
    and full range, so (A_gamma - lam)^{-1} is a matrix for lam in the
    resolvent set.
    """

    a_min: SubspaceGraph
    a_min_prime: SubspaceGraph
    a_gamma: SubspaceGraph

    def __post_init__(self):
        self.a_max = self.a_min_prime.adjoint()
        self.a_max_prime = self.a_min.adjoint()
        self._r_cache = {}

    def validate(self, tol: float = 1e-10):
        if not self.a_max.contains(self.a_min, tol):
            raise ArgumentError("A_min not contained in (A'_min)*")
        if not self.a_max_prime.contains(self.a_min_prime, tol):
            raise ArgumentError("A'_min not contained in (A_min)*")
        if not self.a_max.contains(self.a_gamma, tol):
            raise ArgumentError("A_gamma not contained in A_max")
        if not self.a_gamma.contains(self.a_min, tol):
            raise ArgumentError("A_min not contained in A_gamma")
        self.resolvent(0.0)  # raises if 0 not in the resolvent set

    @property
    def ambient_dim(self) -> int:
        return self.a_min.ambient_dim

    # -- resolvent family ---------------------------------------------------

    def resolvent(self, lam: complex = 0.0) -> np.ndarray:
        key = complex(lam)
        if key not in self._r_cache:
            self._r_cache[key] = self.a_gamma.inverse_matrix(lam)
        return self._r_cache[key]

    def resolvent_prime(self, lam: complex = 0.0) -> np.ndarray:
        """(A_gamma* - conj(lam))^{-1} = resolvent(lam)^H."""
        return self.resolvent(lam).conj().T

    def e_op(self, lam: complex) -> np.ndarray:
        n = self.ambient_dim
        return np.eye(n) + lam * self.resolvent(lam)

    def f_op(self, lam: complex) -> np.ndarray:
        n = self.ambient_dim
        return np.eye(n) - lam * self.resolvent(0.0)

    def e_op_prime(self, lam: complex) -> np.ndarray:
        """E'^{conj(lam)} = (E^lam)^H."""
        return self.e_op(lam).conj().T

    # -- kernels and decompositions ------------------------------------------

    def kernel(self, lam: complex = 0.0) -> np.ndarray:
        return self.a_max.shifted(lam).kernel_basis()

    def kernel_prime(self, lam: complex = 0.0) -> np.ndarray:
        return self.a_max_prime.shifted(lam).kernel_basis()

    def decompose(self, u: np.ndarray, lam: complex = 0.0):
        """u = u_gamma + u_zeta with u_gamma = (A_gamma-lam)^{-1}(A_max-lam)u.

        The representative of (A_max - lam)u is immaterial: the resolvent
        annihilates the multivalued part.
        """
        f = self.a_max.apply(u)
        u_gamma = self.resolvent(lam) @ (f - lam * np.asarray(u, dtype=complex))
        return u_gamma, u - u_gamma

    def decompose_prime(self, v: np.ndarray, lam: complex = 0.0):
        g = self.a_max_prime.apply(v)
        v_gamma = self.resolvent_prime(lam) @ (g - np.conj(lam) * np.asarray(v))
        return v_gamma, v - v_gamma

    def pr_zeta(self, vecs: np.ndarray, lam: complex = 0.0) -> np.ndarray:
        """Column-wise non-orthogonal projection onto Z_lam along D(A_gamma)."""
        vecs = np.atleast_2d(np.asarray(vecs, dtype=complex))
        out = np.empty_like(vecs)
        for j in range(vecs.shape[1]):
            _, uz = self.decompose(vecs[:, j], lam)
            out[:, j] = uz
        return out

    def pr_zeta_prime(self, vecs: np.ndarray, lam: complex = 0.0) -> np.ndarray:
        vecs = np.atleast_2d(np.asarray(vecs, dtype=complex))
        out = np.empty_like(vecs)
        for j in range(vecs.shape[1]):
            _, vz = self.decompose_prime(vecs[:, j], lam)
            out[:, j] = vz
        return out

    def shifted(self, lam: complex) -> "DualPair":
        """The dual pair of A - lam (reference shifted along)."""
        return DualPair(self.a_min.shifted(lam),
                        self.a_min_prime.shifted(np.conj(lam)),
                        self.a_gamma.shifted(lam))


def kernel_and_decompose(pair: DualPair, u: np.ndarray, lam: complex = 0.0):
    """Spec-level alias for the basic non-orthogonal decomposition."""
    return pair.decompose(u, lam)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _random_subspace(rng, n, dim):
    m = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return orth(m)


def random_dual_pair(n: int, defect: int, seed: int = 0,
                     max_shifts: int = 50) -> DualPair:
    """Generic dual pair: random M, random (n-defect)-dim minimal domains.

    M is shifted by multiples of the identity until the Dirichlet-like
    reference relation (M on D_min, multivalued part (D'_min)^perp) is
    invertible with decent condition.
    """
    if not 1 <= defect < n:
        raise ArgumentError("need 1 <= defect < n")
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    d_min = _random_subspace(rng, n, n - defect)
    d_min_prime = _random_subspace(rng, n, n - defect)
    mul_part = complement(d_min_prime, n)
    shift = 0.0
    for attempt in range(max_shifts):
        m_try = m + shift * np.eye(n)
        span = np.hstack([m_try @ d_min, mul_part])
        s = np.linalg.svd(span, compute_uv=False)
        if s[-1] > 1e-6 * s[0]:
            a_min = SubspaceGraph.from_operator(m_try, d_min)
            a_min_prime = SubspaceGraph.from_operator(m_try.conj().T,
                                                      d_min_prime)
            gamma_cols = np.vstack([
                np.hstack([d_min, np.zeros((n, defect))]),
                np.hstack([m_try @ d_min, mul_part])])
            a_gamma = SubspaceGraph.from_span(n, gamma_cols)
            pair = DualPair(a_min, a_min_prime, a_gamma)
            try:
                pair.validate()
                return pair
            except (ArgumentError, SingularityError):
                pass
        shift = float(attempt + 1) * 0.7
    raise SingularityError("could not shift M into invertibility")


def dirichlet_difference_pair(n: int, scale: float = 1.0) -> DualPair:
    """Second-difference matrix with minimal domain = interior coordinates.

    The maximal relation leaves the equation free at the two end rows, the
    kernel consists of the discrete linear functions, and the reference
    extension is the discrete Dirichlet realization.
    """
    if n < 4:
        raise ArgumentError("need n >= 4")
    m = (np.diag(2.0 * np.ones(n)) - np.diag(np.ones(n - 1), 1)
         - np.diag(np.ones(n - 1), -1)) * scale
    interior = np.eye(n, dtype=complex)[:, 1:-1]
    ends = np.eye(n, dtype=complex)[:, [0, n - 1]]
    a_min = SubspaceGraph.from_operator(m, interior)
    a_min_prime = SubspaceGraph.from_operator(m.T, interior)
    gamma_cols = np.vstack([
        np.hstack([interior, np.zeros((n, 2))]),
        np.hstack([m @ interior, ends])])
    a_gamma = SubspaceGraph.from_span(n, gamma_cols)
    return DualPair(a_min, a_min_prime, a_gamma)


def random_realization(pair: DualPair, extra_dim: int | None = None,
                       seed: int = 0) -> SubspaceGraph:
    """Random closed relation between A_min and A_max.

    Default extra_dim makes the graph dimension N, the generic invertible
    case used in resolvent tests.
    """
    rng = np.random.default_rng(seed)
    gmax = pair.a_max.basis
    gmin = pair.a_min.basis
    n = pair.ambient_dim
    if extra_dim is None:
        extra_dim = n - gmin.shape[1]
    cmin = gmax.conj().T @ gmin
    crand = (rng.standard_normal((gmax.shape[1], extra_dim))
             + 1j * rng.standard_normal((gmax.shape[1], extra_dim)))
    return SubspaceGraph.from_span(n, gmax @ np.hstack([cmin, crand]))


def realization_from_domain_constraints(pair: DualPair,
                                        constraints: np.ndarray
                                        ) -> SubspaceGraph:
    """Restriction of A_max to {(u, f) : C u = 0} (boundary-condition style)."""
    gmax = pair.a_max
    rows = np.asarray(constraints, dtype=complex) @ gmax.top
    coeff = null_space(rows)
    return SubspaceGraph.from_span(pair.ambient_dim, gmax.basis @ coeff)


def realization_from_pair_constraints(pair: DualPair,
                                      constraints: np.ndarray
                                      ) -> SubspaceGraph:
    """Restriction of A_max to {(u, f) : C [u; f] = 0}.

    Conditions coupling the free rows of f to traces of u are the discrete
    analog of Robin/Neumann-type couplings; they must vanish on graph(A_min)
    to stay inside the extension family.
    """
    gmax = pair.a_max
    rows = np.asarray(constraints, dtype=complex) @ gmax.basis
    coeff = null_space(rows)
    return SubspaceGraph.from_span(pair.ambient_dim, gmax.basis @ coeff)


# ---------------------------------------------------------------------------
# the 1-1 correspondence
# ---------------------------------------------------------------------------

@dataclass
class Correspondence:
    """Operator T : V -> W attached to a realization (bases orthonormal)."""

    v_basis: np.ndarray
    w_basis: np.ndarray
    t_matrix: np.ndarray

    @property
    def dim_v(self):
        return self.v_basis.shape[1]

    @property
    def dim_w(self):
        return self.w_basis.shape[1]


def realization_to_T(pair: DualPair, a_tilde: SubspaceGraph,
                     lam: complex = 0.0, check_tol: float = 1e-8
                     ) -> Correspondence:
    """Extract T : V_lam -> W_conj(lam) from the defining equation.

    T (pr_zeta u) = projection onto W of (A - lam)u for u in D(a_tilde);
    V = pr_zeta D(a_tilde), W = pr_zeta' D(a_tilde*).
    """
    if not pair.a_max.contains(a_tilde):
        raise ArgumentError("realization not contained in A_max")
    if not a_tilde.contains(pair.a_min):
        raise ArgumentError("realization does not contain A_min")
    shifted = a_tilde.shifted(lam)
    shifted_pair = pair if lam == 0 else pair.shifted(lam)

    u_cols = shifted.top
    f_cols = shifted.bottom
    # pr_zeta along D(A_gamma): the resolvent annihilates the multivalued
    # part, so the representative read off the graph columns is fine.
    r0 = shifted_pair.resolvent(0.0)
    uz = u_cols - r0 @ f_cols
    v_basis = orth(uz, atol=1e-9)

    adj = shifted.adjoint()
    r0p = shifted_pair.resolvent_prime(0.0)
    vz = adj.top - r0p @ adj.bottom
    w_basis = orth(vz, atol=1e-9)

    x = v_basis.conj().T @ uz
    y = w_basis.conj().T @ f_cols
    if x.shape[1]:
        t, *_ = np.linalg.lstsq(x.conj().T, y.conj().T, rcond=None)
        t_matrix = t.conj().T
    else:
        t_matrix = np.zeros((w_basis.shape[1], v_basis.shape[1]))
    scale = max(np.linalg.norm(y), np.linalg.norm(x), 1.0)
    if np.linalg.norm(t_matrix @ x - y) > check_tol * scale:
        raise ArgumentError(
            "defining equation is not a graph over pr_zeta D(a_tilde)")
    return Correspondence(v_basis, w_basis, t_matrix)


def T_to_realization(pair: DualPair, corr: Correspondence,
                     lam: complex = 0.0) -> SubspaceGraph:
    """Inverse direction: carve the realization out of A_max - lam + shift.

    graph = {(u, f) in A_max : pr_zeta u in V, pr_W (f - lam u) = T pr_zeta u},
    returned unshifted (as a relation between A_min and A_max).
    """
    z = pair.kernel(lam)
    if corr.dim_v and np.linalg.norm(
            corr.v_basis - project(z, corr.v_basis), 2) > 1e-8:
        raise ArgumentError("V is not a subspace of ker(A_max - lam)")
    zp = pair.kernel_prime(np.conj(lam))
    if corr.dim_w and np.linalg.norm(
            corr.w_basis - project(zp, corr.w_basis), 2) > 1e-8:
        raise ArgumentError("W is not a subspace of ker(A'_max - conj(lam))")

    shifted_pair = pair.shifted(lam) if lam != 0 else pair
    gmax = shifted_pair.a_max
    u_cols, f_cols = gmax.top, gmax.bottom
    uz = u_cols - shifted_pair.resolvent(0.0) @ f_cols
    v, w, t = corr.v_basis, corr.w_basis, corr.t_matrix

    c1 = uz - v @ (v.conj().T @ uz)
    c2 = w.conj().T @ f_cols - t @ (v.conj().T @ uz)
    coeff = null_space(np.vstack([c1, c2]))
    graph_shifted = gmax.basis @ coeff
    n = pair.ambient_dim
    top, bottom = graph_shifted[:n], graph_shifted[n:]
    return SubspaceGraph.from_span(n, np.vstack([top, bottom + lam * top]))


# ---------------------------------------------------------------------------
# G^lambda, M-functions, Krein formulas
# ---------------------------------------------------------------------------

def g_lambda(pair: DualPair, v_basis: np.ndarray, w_basis: np.ndarray,
             lam: complex) -> np.ndarray:
    """Matrix of G^lam_{V,W} = -pr_W lam E^lam inj_V in the given bases."""
    ev = pair.e_op(lam) @ v_basis
    return -lam * (w_basis.conj().T @ ev)


def m_function(pair: DualPair, a_tilde: SubspaceGraph, lam: complex,
               corr: Correspondence | None = None) -> np.ndarray:
    """M(lam) = pr_zeta (I - (a_tilde - lam)^{-1}(A_max - lam)) A_gamma^{-1} inj_W.

    Returned as a matrix from W-coordinates to V-coordinates of the
    correspondence at lam = 0.
    """
    if corr is None:
        corr = realization_to_T(pair, a_tilde)
    rt = a_tilde.inverse_matrix(lam)
    r0 = pair.resolvent(0.0)
    cols = []
    for j in range(corr.dim_w):
        w = corr.w_basis[:, j]
        x = r0 @ w
        # (x, w) is a pair of A_gamma, so w itself is the representative of
        # the (multivalued) A_max action that the formula needs.
        y = x - rt @ (w - lam * x)
        _, yz = pair.decompose(y, 0.0)
        cols.append(corr.v_basis.conj().T @ yz)
    if not cols:
        return np.zeros((corr.dim_v, 0))
    return np.stack(cols, axis=1)


def krein_resolvent_check(pair: DualPair, a_tilde: SubspaceGraph,
                          lam: complex) -> dict:
    """Compare (a_tilde - lam)^{-1} with both Krein-type expressions.

    Form 1: (A_gamma-lam)^{-1} + inj_{V_lam} (T^lam)^{-1} pr_{W_conj(lam)}.
    Form 2: (A_gamma-lam)^{-1} - inj_{V_lam} E^lam_V M(lam) (E'_W)^* pr_{W_lam}.
    Returns the max relative discrepancies.
    """
    rt = a_tilde.inverse_matrix(lam)
    rg = pair.resolvent(lam)

    corr_lam = realization_to_T(pair, a_tilde, lam=lam)
    v_lam, w_lam, t_lam = corr_lam.v_basis, corr_lam.w_basis, corr_lam.t_matrix
    if t_lam.shape[0] != t_lam.shape[1]:
        raise SingularityError("T^lambda is not square", operator="T_lambda")
    try:
        t_inv = np.linalg.inv(t_lam)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("T^lambda singular", operator="T_lambda") from exc
    form1 = rg + v_lam @ t_inv @ w_lam.conj().T

    corr0 = realization_to_T(pair, a_tilde)
    m = m_function(pair, a_tilde, lam, corr=corr0)
    e_v = v_lam.conj().T @ (pair.e_op(lam) @ corr0.v_basis)
    e_w = w_lam.conj().T @ (pair.e_op_prime(lam) @ corr0.w_basis)
    form2 = rg - v_lam @ e_v @ m @ e_w.conj().T @ w_lam.conj().T

    scale = np.linalg.norm(rt, 2)
    return {
        "lambda": complex(lam),
        "discrepancy_T_form": float(np.linalg.norm(form1 - rt, 2) / scale),
        "discrepancy_M_form": float(np.linalg.norm(form2 - rt, 2) / scale),
    }
