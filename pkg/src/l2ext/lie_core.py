"""Matrix Lie algebra arithmetic for sl(2) and sp(2g).

Group and algebra elements are plain complex ``numpy`` arrays.  The only
structured object here is :class:`HodgeFrame`, which records how the
complexified algebra splits under the adjoint action of the circle
``theta -> h(e^{i theta})`` at the reference point.

For genus ``g`` the ambient matrices are ``2g x 2g`` and use the block
convention ``(A B; C D)`` acting on the Siegel space by
``Omega -> (A Omega + B)(C Omega + D)^{-1}``.  The upper half plane is the
genus-one case.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .errors import InternalConsistencyError, NotNilpotent

__all__ = [
    "DomainSpec",
    "HodgeFrame",
    "REFERENCE_ANGLE",
    "adjoint",
    "as_square",
    "bracket",
    "circle_action",
    "hodge_decompose_algebra",
    "in_sp",
    "nilpotent_exp",
    "nilpotent_log",
    "nullspace",
    "sp_algebra_basis",
    "symplectic_form",
    "symmetric_units",
]

REFERENCE_ANGLE = np.pi / 5
NILPOTENT_RTOL = 1e-12
NILPOTENT_ATOL = 1e-28

# the fixed generator of g^{-1,1} for the upper half plane
HALF_PLANE_GENERATOR = np.array([[0.5, 0.5j], [0.5j, -0.5]])

UPPER_HALF_PLANE = "upper_half_plane"
SIEGEL = "siegel"


@dataclass(frozen=True)
class DomainSpec:
    """Which classical domain we are working on.

    ``UpperHalfPlane`` is the genus-one Siegel space; the two differ only
    in that points of the former are complex scalars rather than ``1x1``
    matrices.
    """

    kind: str = UPPER_HALF_PLANE
    genus: int = 1

    def __post_init__(self):
        if self.kind not in (UPPER_HALF_PLANE, SIEGEL):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if int(self.genus) != self.genus or self.genus < 1:
            raise ValueError(f"genus must be a positive integer, got {self.genus!r}")
        if self.kind == UPPER_HALF_PLANE and self.genus != 1:
            raise ValueError("the upper half plane has genus 1")

    @classmethod
    def upper_half_plane(cls):
        return cls(UPPER_HALF_PLANE, 1)

    @classmethod
    def siegel(cls, genus):
        return cls(SIEGEL, int(genus))

    @property
    def size(self):
        """Side length of the ambient matrices (2g)."""
        return 2 * self.genus

    @property
    def n_coords(self):
        """Complex dimension of the domain, g(g+1)/2."""
        return self.genus * (self.genus + 1) // 2

    @property
    def scalar_points(self):
        return self.kind == UPPER_HALF_PLANE

    def canonical(self):
        """The Siegel form of this spec (identifies H with H_1)."""
        return DomainSpec(SIEGEL, self.genus)

    @property
    def label(self):
        return "H" if self.scalar_points else f"H_{self.genus}"


def as_square(X, name="matrix"):
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"{name} must be square, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    return X


def symplectic_form(genus):
    """The form ``(0 -I; I 0)``; at genus one this is the elliptic-curve polarization."""
    g = int(genus)
    eye = np.eye(g)
    zero = np.zeros((g, g))
    return np.block([[zero, -eye], [eye, zero]])


def in_sp(X, atol=1e-12):
    """Membership of ``X`` in sp(2g, C): ``X J + J X^T = 0``."""
    X = as_square(X)
    J = symplectic_form(X.shape[0] // 2)
    return np.linalg.norm(X @ J + J @ X.T) <= atol * max(1.0, np.linalg.norm(X))


def circle_action(spec, theta):
    """The real matrix ``h(e^{i theta})``: block rotation by ``theta``."""
    g = spec.genus
    c, s = np.cos(theta), np.sin(theta)
    eye = np.eye(g)
    return np.block([[c * eye, s * eye], [-s * eye, c * eye]])


def bracket(X, Y):
    X = as_square(X, "X")
    Y = as_square(Y, "Y")
    if X.shape != Y.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return X @ Y - Y @ X


def adjoint(g, X):
    """``Ad(g) X = g X g^{-1}``."""
    g = as_square(g, "g")
    return g @ as_square(X, "X") @ np.linalg.inv(g)


def _nilpotent_powers(X):
    """Powers ``I, X, ..., X^{k-1}`` with ``X^k`` numerically zero."""
    X = as_square(X)
    n = X.shape[0]
    scale = np.linalg.norm(X)
    powers = [np.eye(n, dtype=complex)]
    if scale == 0.0:
        return powers
    P = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        P = P @ X
        # the absolute floor accepts pure rounding noise (e.g. log of a float identity)
        if np.linalg.norm(P) < max(NILPOTENT_RTOL * scale**k, NILPOTENT_ATOL):
            return powers
        powers.append(P)
    raise NotNilpotent(f"X^k does not vanish for k <= {n}")


def nilpotent_exp(X):
    """Exact exponential of a nilpotent matrix as a finite sum."""
    out = np.zeros_like(as_square(X))
    fact = 1.0
    for k, P in enumerate(_nilpotent_powers(X)):
        if k:
            fact *= k
        out = out + P / fact
    return out


def nilpotent_log(U):
    """Inverse of :func:`nilpotent_exp` on unipotent matrices."""
    U = as_square(U)
    N = U - np.eye(U.shape[0])
    out = np.zeros_like(N)
    for k, P in enumerate(_nilpotent_powers(N)):
        if k:
            out = out + (-1) ** (k + 1) * P / k
    return out


def nullspace(A, rtol=1e-8):
    """Orthonormal basis (columns) of the kernel of ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    _, s, vh = np.linalg.svd(A)
    scale = max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > rtol * scale))
    return vh[rank:].conj().T


def symmetric_units(genus):
    """Symmetric ``g x g`` matrices ``E_jk + E_kj`` (``E_jj`` on the diagonal), upper-triangle order."""
    g = int(genus)
    out = []
    for j, k in combinations_with_replacement(range(g), 2):
        E = np.zeros((g, g))
        E[j, k] = 1.0
        E[k, j] = 1.0
        out.append(E)
    return out


def _antisymmetric_units(genus):
    g = int(genus)
    out = []
    for j in range(g):
        for k in range(j + 1, g):
            E = np.zeros((g, g))
            E[j, k] = 1.0
            E[k, j] = -1.0
            out.append(E)
    return out


@lru_cache(maxsize=None)
def _sp_basis_cached(genus):
    g = genus
    zero = np.zeros((g, g))
    basis = []
    for j in range(g):
        for k in range(g):
            A = np.zeros((g, g))
            A[j, k] = 1.0
            basis.append(np.block([[A, zero], [zero, -A.T]]))
    for S in symmetric_units(g):
        basis.append(np.block([[zero, S], [zero, zero]]))
    for S in symmetric_units(g):
        basis.append(np.block([[zero, zero], [S, zero]]))
    return np.array(basis, dtype=complex)


def sp_algebra_basis(genus):
    """Real basis of sp(2g), also a complex basis of sp(2g, C)."""
    return _sp_basis_cached(int(genus)).copy()


def _coordinates(stack, X):
    """Least-squares coordinates of ``X`` in the span of the matrices in ``stack``."""
    B = stack.reshape(len(stack), -1).T
    coef, *_ = np.linalg.lstsq(B, np.asarray(X, dtype=complex).reshape(-1), rcond=None)
    return coef


def _span_residual(stack, X):
    coef = _coordinates(stack, X)
    return np.linalg.norm(np.tensordot(coef, stack, axes=1) - X)


@dataclass(frozen=True, eq=False)
class HodgeFrame:
    """Hodge decomposition of g_C at the reference point.

    Bases are stored as stacked arrays of shape ``(m, 2g, 2g)``.  The
    ``g_m11`` basis is the fixed normalized one: ``M (x) S`` for the
    symmetric units ``S``, where ``M = (1/2 i/2; i/2 -1/2)``, so that the
    coordinate of ``M (x) Z`` is the upper triangle of ``Z``.
    """

    spec: DomainSpec
    g00: np.ndarray
    g_m11: np.ndarray
    g_1m1: np.ndarray

    def circle_action(self, theta):
        return circle_action(self.spec, theta)

    @property
    def n_coords(self):
        return len(self.g_m11)

    def element(self, coords):
        """``sum_a coords[a] * g_m11[a]``; accepts a trailing batch axis of coordinates."""
        coords = np.asarray(coords, dtype=complex)
        return np.tensordot(coords, self.g_m11, axes=([-1], [0]))

    def coordinates(self, X):
        """Coordinates of ``X`` in the fixed g^{-1,1} basis (least squares)."""
        return _coordinates(self.g_m11, X)

    def residual_m11(self, X):
        return _span_residual(self.g_m11, X)

    def residual_1m1(self, X):
        return _span_residual(self.g_1m1, X)

    def residual_00(self, X):
        return _span_residual(self.g00, X)


def _fixed_m11_basis(genus):
    M = HALF_PLANE_GENERATOR
    return np.array([np.kron(M, S) for S in symmetric_units(genus)])


def _fixed_k_basis(genus):
    # Lie algebra of K = U(g): (A B; -B A), A antisymmetric, B symmetric
    g = int(genus)
    zero = np.zeros((g, g))
    out = [np.block([[A, zero], [zero, A]]) for A in _antisymmetric_units(g)]
    out += [np.block([[zero, B], [-B, zero]]) for B in symmetric_units(g)]
    return np.array(out, dtype=complex)


def ad_matrix(g, basis):
    """Matrix of ``Ad(g)`` on the span of ``basis`` in those coordinates."""
    ginv = np.linalg.inv(g)
    images = [g @ X @ ginv for X in basis]
    B = basis.reshape(len(basis), -1).T
    imgs = np.array(images).reshape(len(basis), -1).T
    coef, *_ = np.linalg.lstsq(B, imgs, rcond=None)
    return coef


@lru_cache(maxsize=None)
def _frame_cached(spec):
    g = spec.genus
    basis = _sp_basis_cached(g)
    A = ad_matrix(circle_action(spec, REFERENCE_ANGLE), basis)
    n = len(basis)

    def eigenspace(lam):
        vecs = nullspace(A - lam * np.eye(n))
        return np.tensordot(vecs.T, basis, axes=1)

    z2 = np.exp(2j * REFERENCE_ANGLE)
    computed = {
        "g00": eigenspace(1.0),
        "g_m11": eigenspace(z2),
        "g_1m1": eigenspace(np.conj(z2)),
    }
    expected = {"g00": g * g, "g_m11": g * (g + 1) // 2, "g_1m1": g * (g + 1) // 2}
    for key, dim in expected.items():
        if len(computed[key]) != dim:
            raise InternalConsistencyError(
                f"{key} has dimension {len(computed[key])}, expected {dim}"
            )

    fixed = {
        "g00": _fixed_k_basis(g),
        "g_m11": _fixed_m11_basis(g),
        "g_1m1": np.conj(_fixed_m11_basis(g)),
    }
    # the fixed bases must lie in (and, by dimension count, span) the computed eigenspaces
    for key, stack in fixed.items():
        for X in stack:
            if _span_residual(computed[key], X) > 1e-10 * max(1.0, np.linalg.norm(X)):
                raise InternalConsistencyError(f"fixed {key} basis leaves its eigenspace")
    return HodgeFrame(spec, fixed["g00"], fixed["g_m11"], fixed["g_1m1"])


def hodge_decompose_algebra(spec):
    """Eigenspace decomposition of sp(2g, C) under ``Ad(h(e^{i theta0}))``.

    The eigenspaces for ``1``, ``e^{2i theta0}`` and ``e^{-2i theta0}`` are
    computed numerically at ``theta0 = pi/5`` and then used to certify the
    fixed bases returned in the frame.
    """
    return _frame_cached(spec)
