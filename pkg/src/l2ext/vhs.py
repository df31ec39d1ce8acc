"""Built-in representations, fiberwise Hodge decompositions, and the
group-theoretic holomorphic sections ``sigma(Z) = rho(Exp Z) v``.

Three families are built in:

* ``standard_sl2``: SL(2) on C^2, weight 1;
* ``sym_sl2``: Sym^k of the standard representation, weight k (k <= 6);
* ``standard_sp``: Sp(2g) on C^{2g}, weight 1 (g <= 3).

In every case the G_m factor acts by ``lambda Id -> lambda^{-n}`` and
``rho(h(z)) v = z^{-p} conj(z)^{-q} v`` on ``V^{p,q}``.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from math import comb, factorial

import numpy as np

from .errors import InconsistentFiber, InvalidBaseVector
from .hc_domain import (
    BoundedPoint,
    UnboundedPoint,
    bounded_margin,
    coords_to_matrix,
    factorize_pkp,
    hc_embed,
    matrix_to_coords,
    point_to_group,
)
from .lie_core import (
    DomainSpec,
    REFERENCE_ANGLE,
    as_square,
    circle_action,
    nullspace,
)

STANDARD_SL2 = "standard_sl2"
SYM_SL2 = "sym_sl2"
STANDARD_SP = "standard_sp"
BUILTIN_TAGS = (STANDARD_SL2, SYM_SL2, STANDARD_SP)

MAX_SYM_DEGREE = 6
MAX_SP_GENUS = 3
EIGEN_TOL = 1e-8


def _sym_power_rho(g, k):
    # column j: (g e1)^{k-j} (g e2)^j in the basis e1^{k-l} e2^l
    u = np.array([g[0, 0], g[1, 0]], dtype=complex)
    w = np.array([g[0, 1], g[1, 1]], dtype=complex)
    upow = [np.ones(1, dtype=complex)]
    wpow = [np.ones(1, dtype=complex)]
    for _ in range(k):
        upow.append(np.convolve(upow[-1], u))
        wpow.append(np.convolve(wpow[-1], w))
    out = np.zeros((k + 1, k + 1), dtype=complex)
    for j in range(k + 1):
        out[:, j] = np.convolve(upow[k - j], wpow[j])
    return out


def _sym_power_drho(X, k):
    # derivation extending X to degree-k monomials
    out = np.zeros((k + 1, k + 1), dtype=complex)
    xe1 = X[:, 0]
    xe2 = X[:, 1]
    for j in range(k + 1):
        if k - j:
            # e1^{k-j-1} e2^j times (X e1)
            out[j, j] += (k - j) * xe1[0]
            out[j + 1, j] += (k - j) * xe1[1]
        if j:
            out[j - 1, j] += j * xe2[0]
            out[j, j] += j * xe2[1]
    return out


@dataclass(frozen=True)
class Representation:
    """A built-in real algebraic representation of the group M."""

    spec: DomainSpec
    tag: str
    degree: int = 1

    def __post_init__(self):
        if self.tag not in BUILTIN_TAGS:
            raise ValueError(f"unknown representation tag {self.tag!r}")
        if self.tag in (STANDARD_SL2, SYM_SL2) and self.spec.genus != 1:
            raise ValueError(f"{self.tag} lives over the upper half plane (genus 1)")
        if self.tag == SYM_SL2 and not 1 <= self.degree <= MAX_SYM_DEGREE:
            raise ValueError(f"Sym^k needs 1 <= k <= {MAX_SYM_DEGREE}")
        if self.tag != SYM_SL2 and self.degree != 1:
            raise ValueError(f"{self.tag} has no degree parameter")
        if self.tag == STANDARD_SP and self.spec.genus > MAX_SP_GENUS:
            raise ValueError(f"standard_sp is built in for genus <= {MAX_SP_GENUS}")

    @property
    def dim(self):
        if self.tag == SYM_SL2:
            return self.degree + 1
        return self.spec.size

    @property
    def weight(self):
        return self.degree

    @property
    def label(self):
        if self.tag == SYM_SL2:
            return f"Sym^{self.degree}(SL2)"
        if self.tag == STANDARD_SL2:
            return "Std(SL2)"
        return f"Std(Sp{self.spec.size})"

    def rho(self, g):
        """Action of a group element of G_C (complex matrices allowed)."""
        g = as_square(g, "g")
        if self.tag == SYM_SL2:
            return _sym_power_rho(g, self.degree)
        return g.copy()

    def drho(self, X):
        X = as_square(X, "X")
        if self.tag == SYM_SL2:
            return _sym_power_drho(X, self.degree)
        return X.copy()

    def rho_h(self, z):
        """``rho(h(z))`` for ``z`` in C^*: ``|z|^{-n} rho(rotation by arg z)``."""
        z = complex(z)
        r = abs(z)
        return r ** (-self.weight) * self.rho(circle_action(self.spec, np.angle(z)))

    def hodge_indices(self):
        """``(p, q)`` pairs with ``p + q = n`` in decreasing ``p``."""
        n = self.weight
        if self.tag == SYM_SL2:
            return [(p, n - p) for p in range(n, -1, -1)]
        return [(1, 0), (0, 1)]

    @property
    def top_p(self):
        return self.hodge_indices()[0][0]

    def canonical_smallest_basis(self):
        """Columns spanning the smallest piece ``E_h = V^{p_max, q}`` at ``iI``.

        ``(i, 1)`` for SL(2), its k-th power for Sym^k, columns of
        ``(iI; I)`` for Sp(2g).
        """
        if self.tag == SYM_SL2:
            k = self.degree
            return np.array([[comb(k, j) * 1j ** (k - j)] for j in range(k + 1)], dtype=complex)
        g = self.spec.genus
        return np.vstack([1j * np.eye(g), np.eye(g)]).astype(complex)


def standard_sl2(spec=None):
    return Representation(spec or DomainSpec.upper_half_plane(), STANDARD_SL2)


def sym_sl2(k, spec=None):
    return Representation(spec or DomainSpec.upper_half_plane(), SYM_SL2, int(k))


def standard_sp(genus):
    return Representation(DomainSpec.siegel(genus), STANDARD_SP)


def builtin_representation(tag, spec, degree=1):
    return Representation(spec, tag, int(degree))


def _orth(A):
    if A.shape[1] == 0:
        return A
    q, r = np.linalg.qr(A)
    return q[:, : np.linalg.matrix_rank(A)]


def subspace_distance(A, B):
    """Sine of the largest principal angle between the column spans of ``A`` and ``B``."""
    qa = _orth(np.asarray(A, dtype=complex))
    qb = _orth(np.asarray(B, dtype=complex))
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    # ||(I - Q_b Q_b^H) Q_a||_2 keeps precision for small angles
    resid = qa - qb @ (qb.conj().T @ qa)
    return float(np.linalg.norm(resid, 2))


def span_residual(basis, Y):
    """Norm of the part of ``Y`` (columns) outside the column span of ``basis``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    if Y.shape[0] != np.shape(basis)[0]:
        Y = Y.T
    q = _orth(np.asarray(basis, dtype=complex))
    return float(np.linalg.norm(Y - q @ (q.conj().T @ Y)))


def weight_component(rep, n, via=None):
    """Basis of ``{v : rho(h'(r)) v = r^{-n} v}`` computed at ``r = 2``.

    ``via`` is an optional group element ``g`` so that ``h' = g h``.
    """
    A = rep.rho_h(2.0)
    if via is not None:
        rg = rep.rho(via)
        A = rg @ A @ np.linalg.inv(rg)
    return nullspace(A - 2.0 ** (-n) * np.eye(rep.dim), rtol=EIGEN_TOL)


def fiber_angle(weight):
    """Angle at which ``rho(h(e^{i theta}))`` separates all ``(p, q)`` of the given weight."""
    if weight <= 4:
        return REFERENCE_ANGLE
    return np.pi / (weight + 1)


@dataclass(frozen=True, eq=False)
class HodgeFiberDecomposition:
    point: UnboundedPoint
    components: tuple  # of (p, q, basis) with basis columns spanning V^{p,q}

    def basis(self, p):
        for pp, _, B in self.components:
            if pp == p:
                return B
        return np.zeros((self.components[0][2].shape[0], 0), dtype=complex)

    def filtration(self, p):
        """Columns spanning ``F^p = sum_{a >= p} V^{a, n-a}``."""
        blocks = [B for pp, _, B in self.components if pp >= p]
        if not blocks:
            return np.zeros((self.components[0][2].shape[0], 0), dtype=complex)
        return np.hstack(blocks)

    def project(self, v):
        """Split ``v`` into its ``(p, q)`` components, keyed by ``p``."""
        v = np.asarray(v, dtype=complex)
        full = np.hstack([B for _, _, B in self.components])
        coef, *_ = np.linalg.lstsq(full, v, rcond=None)
        resid = np.linalg.norm(full @ coef - v)
        if resid > 1e-8 * max(1.0, np.linalg.norm(v)):
            raise InconsistentFiber(f"decomposition does not reconstruct v (residual {resid:.2e})")
        out = {}
        start = 0
        for p, _, B in self.components:
            m = B.shape[1]
            out[p] = B @ coef[start:start + m]
            start += m
        return out

    def conjugation_residual(self):
        """Max over ``(p, q)`` of the distance between conj(V^{p,q}) and V^{q,p}."""
        worst = 0.0
        for p, q, B in self.components:
            worst = max(worst, subspace_distance(np.conj(B), self.basis(q)))
        return worst


def _reference_components(rep):
    theta = fiber_angle(rep.weight)
    A = rep.rho_h(np.exp(1j * theta))
    comps = []
    for p, q in rep.hodge_indices():
        lam = np.exp(-1j * theta * (p - q))
        comps.append((p, q, nullspace(A - lam * np.eye(rep.dim), rtol=EIGEN_TOL)))
    if sum(B.shape[1] for _, _, B in comps) != rep.dim:
        raise InconsistentFiber("eigenspaces of rho(h) do not fill V")
    return comps


def fiber_decompose(rep, point=None):
    """Hodge decomposition ``V_C = sum V^{p,q}_{h'}`` at ``point`` (default ``iI``).

    Computed at the reference point by classifying eigenvectors of
    ``rho(h(e^{i theta}))`` against the predicted eigenvalues, then moved
    to ``point`` by ``rho(point_to_group(point))``.
    """
    if point is None:
        point = UnboundedPoint.reference(rep.spec)
    comps = _reference_components(rep)
    rg = rep.rho(point_to_group(point))
    moved = tuple((p, q, rg @ B) for p, q, B in comps)
    return HodgeFiberDecomposition(point, moved)


@dataclass(frozen=True)
class ShiftingReport:
    raising: dict  # (basis index, p) -> residual for X in g^{1,-1}
    lowering: dict  # (basis index, p) -> residual for X in g^{-1,1}

    @property
    def max_residual(self):
        vals = list(self.raising.values()) + list(self.lowering.values())
        return max(vals, default=0.0)


def check_shifting(rep, frame):
    """Residuals of ``drho(X) V^{p,q} in V^{p+1,q-1}`` (X in g^{1,-1}) and the mirror."""
    decomp = fiber_decompose(rep)
    raising = {}
    lowering = {}
    for a, X in enumerate(frame.g_1m1):
        dX = rep.drho(X)
        for p, _, B in decomp.components:
            raising[(a, p)] = span_residual(decomp.basis(p + 1), dX @ B)
    for a, X in enumerate(frame.g_m11):
        dX = rep.drho(X)
        for p, _, B in decomp.components:
            lowering[(a, p)] = span_residual(decomp.basis(p - 1), dX @ B)
    return ShiftingReport(raising, lowering)


def multi_indices(n_vars, degree):
    """All exponent tuples of the given total degree, lexicographically descending."""
    out = [a for a in product(range(degree + 1), repeat=n_vars) if sum(a) == degree]
    return sorted(out, reverse=True)


def monomial(coords, alpha):
    """``prod_a coords[..., a] ** alpha[a]`` over a batch of coordinates."""
    coords = np.asarray(coords, dtype=complex)
    out = np.ones(coords.shape[:-1], dtype=complex)
    for a, e in enumerate(alpha):
        if e:
            out = out * coords[..., a] ** e
    return out


@dataclass(frozen=True, eq=False)
class HolomorphicSection:
    """``sigma(Z) = rho(Exp Z) v`` pulled back along the Harish-Chandra map."""

    rep: Representation
    frame: object
    base_vector: np.ndarray
    p_level: int

    @cached_property
    def generators(self):
        """``drho`` of the fixed g^{-1,1} basis; these commute and are nilpotent."""
        return np.array([self.rep.drho(X) for X in self.frame.g_m11])

    @cached_property
    def order(self):
        """Smallest ``m`` with ``drho(X)^m = 0`` on all of g^{-1,1}; bounds the degree by ``m - 1``."""
        rng = np.random.default_rng(0)
        c = rng.normal(size=self.frame.n_coords) + 1j * rng.normal(size=self.frame.n_coords)
        D = np.tensordot(c, self.generators, axes=1)
        P = np.eye(self.rep.dim, dtype=complex)
        scale = np.linalg.norm(D)
        for m in range(1, self.rep.dim + 2):
            P = P @ D
            if np.linalg.norm(P) <= 1e-12 * max(scale, 1.0) ** m:
                return m
        raise InconsistentFiber("drho(g^{-1,1}) is not nilpotent")

    def coefficients(self):
        """Taylor coefficients ``{alpha: vector}`` in the bounded coordinates.

        Since the generators commute, the coefficient of ``c^alpha`` is
        ``prod_a drho(B_a)^{alpha_a} v / alpha!``.
        """
        v = self.base_vector
        out = {}
        k = self.frame.n_coords
        for deg in range(self.order):
            for alpha in multi_indices(k, deg):
                w = v.copy()
                denom = 1
                for a, e in enumerate(alpha):
                    for _ in range(e):
                        w = self.generators[a] @ w
                    denom *= factorial(e)
                out[alpha] = w / denom
        return out

    def evaluate_coords(self, coords):
        """Values at a batch of bounded coordinates, shape ``(..., k) -> (..., dim V)``."""
        coords = np.asarray(coords, dtype=complex)
        D = np.tensordot(coords, self.generators, axes=([-1], [0]))
        term = np.broadcast_to(self.base_vector, coords.shape[:-1] + (self.rep.dim,)).astype(complex)
        total = term.copy()
        for m in range(1, self.order):
            term = np.einsum("...ij,...j->...i", D, term) / m
            total = total + term
        return total

    def scaled(self, factor):
        return HolomorphicSection(self.rep, self.frame, factor * self.base_vector, self.p_level)


def build_section(v, p_level, rep, frame):
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape != (rep.dim,):
        raise InvalidBaseVector(f"base vector must have length {rep.dim}")
    F = fiber_decompose(rep).filtration(p_level)
    if span_residual(F, v[:, None]) > 1e-10 * max(1.0, np.linalg.norm(v)):
        raise InvalidBaseVector(f"v is not in F^{p_level} at the reference point")
    return HolomorphicSection(rep, frame, v, int(p_level))


def eval_section(sec, point, path="exp"):
    """``sigma`` at an unbounded point.

    ``path="exp"`` evaluates ``rho(Exp X) v`` at the Harish-Chandra image
    ``X``; ``path="zeta"`` evaluates ``rho(zeta(g)) v`` through the
    ``P+ K_C P-`` factorization of ``g = point_to_group(point)``.
    """
    if path == "exp":
        return sec.evaluate_coords(hc_embed(point).coords)
    if path == "zeta":
        fac = factorize_pkp(point_to_group(point), sec.frame)
        return sec.rep.rho(fac.p_plus) @ sec.base_vector
    raise ValueError(f"unknown evaluation path {path!r}")


@dataclass(frozen=True)
class HolomorphyReport:
    degree_bound: int
    observed_degree: int
    holdout_residual: float
    n_fit: int

    @property
    def passed(self):
        return self.holdout_residual < 1e-10 and self.observed_degree <= self.degree_bound


def _random_bounded_coords(spec, n, rng, radius=0.6):
    out = []
    while len(out) < n:
        k = spec.n_coords
        c = rng.uniform(-1, 1, size=(4 * n, k)) + 1j * rng.uniform(-1, 1, size=(4 * n, k))
        c *= radius / max(1, spec.genus)
        Z = coords_to_matrix(spec.genus, c)
        ok = bounded_margin(Z) > 0.05
        out.extend(matrix_to_coords(Z[ok]))
    return np.array(out[:n])


def holomorphy_check(sec, seed=0):
    """Fit holomorphic polynomials of degree ``< order`` on random points and test held-out points."""
    rng = np.random.default_rng(seed)
    k = sec.frame.n_coords
    bound = sec.order - 1
    alphas = [a for d in range(bound + 1) for a in multi_indices(k, d)]
    n_fit = max(4 * len(alphas), 20)
    pts = _random_bounded_coords(sec.rep.spec, n_fit + 20, rng)
    V = np.stack([monomial(pts, a) for a in alphas], axis=1)
    values = sec.evaluate_coords(pts)
    coef, *_ = np.linalg.lstsq(V[:n_fit], values[:n_fit], rcond=None)
    resid = np.abs(V[n_fit:] @ coef - values[n_fit:]).max(initial=0.0)
    degs = [sum(a) for a, c in zip(alphas, coef) if np.abs(c).max() > 1e-9]
    return HolomorphyReport(bound, max(degs, default=0), float(resid), n_fit)


def bounded_point_coords(point):
    """Bounded-model coordinates of an unbounded or bounded point."""
    if isinstance(point, BoundedPoint):
        return point.coords
    return hc_embed(point).coords
