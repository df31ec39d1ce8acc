"""Unbounded and bounded models of H and H_g, the Harish-Chandra map, and
the P+ K_C P- factorization.

Points of the upper half plane are complex scalars; points of ``H_g`` are
complex symmetric ``g x g`` matrices.  Bounded points carry the matrix
``Z`` of the Siegel disk (or the scalar ``t`` of the unit disk); their
coordinates in the fixed g^{-1,1} basis are the upper-triangular entries
of ``Z``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ActionUndefined, BoundaryPoint, DomainError, NotInBigCell
from .lie_core import (
    DomainSpec,
    as_square,
    nilpotent_log,
    symplectic_form,
)

PD_MARGIN = 1e-10
SYMMETRY_TOL = 1e-12
SINGULAR_RTOL = 1e-12


def _as_matrix(spec, value):
    g = spec.genus
    if spec.scalar_points:
        arr = np.asarray(value, dtype=complex)
        if arr.size != 1:
            raise ValueError(f"upper half plane point must be a scalar, got shape {arr.shape}")
        return arr.reshape(1, 1)
    arr = np.asarray(value, dtype=complex)
    if arr.shape != (g, g):
        raise ValueError(f"expected a {g}x{g} matrix, got shape {arr.shape}")
    return arr


def _from_matrix(spec, M):
    if spec.scalar_points:
        return complex(M[0, 0])
    return M


def _min_eig_hermitian(A):
    """Smallest eigenvalue of a stack of Hermitian matrices, shape ``(..., n, n)``."""
    n = A.shape[-1]
    if n == 1:
        return A[..., 0, 0].real
    if n == 2:
        a = A[..., 0, 0].real
        d = A[..., 1, 1].real
        b2 = np.abs(A[..., 0, 1]) ** 2
        half = 0.5 * (a + d)
        return half - np.sqrt(np.maximum(0.25 * (a - d) ** 2 + b2, 0.0))
    return np.linalg.eigvalsh(A)[..., 0]


def _symmetry_defect(M):
    return np.max(np.abs(M - np.swapaxes(M, -1, -2)), axis=(-2, -1), initial=0.0)


def unbounded_margin(M):
    """Smallest eigenvalue of ``Im Omega`` (batched)."""
    Y = (M - np.conj(M)) / 2j
    Y = 0.5 * (Y + np.swapaxes(Y, -1, -2))
    return _min_eig_hermitian(Y.astype(complex))


def bounded_margin(Z):
    """Smallest eigenvalue of ``I - conj(Z)^T Z`` (batched)."""
    n = Z.shape[-1]
    A = np.eye(n) - np.conj(np.swapaxes(Z, -1, -2)) @ Z
    return _min_eig_hermitian(A)


@dataclass(frozen=True, eq=False)
class UnboundedPoint:
    spec: DomainSpec
    value: object

    def __post_init__(self):
        M = _as_matrix(self.spec, self.value)
        if _symmetry_defect(M) > SYMMETRY_TOL * max(1.0, np.abs(M).max()):
            raise DomainError("Omega is not symmetric")
        if unbounded_margin(M) <= 0:
            raise DomainError(f"point {self.value!r} is not in {self.spec.label}")
        object.__setattr__(self, "value", _from_matrix(self.spec, M.copy()))

    @property
    def matrix(self):
        return _as_matrix(self.spec, self.value)

    @classmethod
    def reference(cls, spec):
        return cls(spec, _from_matrix(spec, 1j * np.eye(spec.genus)))


@dataclass(frozen=True, eq=False)
class BoundedPoint:
    spec: DomainSpec
    coord: object

    def __post_init__(self):
        Z = _as_matrix(self.spec, self.coord)
        if _symmetry_defect(Z) > SYMMETRY_TOL * max(1.0, np.abs(Z).max()):
            raise DomainError("Z is not symmetric")
        if bounded_margin(Z) <= 0:
            raise DomainError(f"point {self.coord!r} is not in the bounded model")
        object.__setattr__(self, "coord", _from_matrix(self.spec, Z.copy()))

    @property
    def matrix(self):
        return _as_matrix(self.spec, self.coord)

    @property
    def coords(self):
        """Coordinates in the fixed g^{-1,1} basis (upper triangle of Z)."""
        return matrix_to_coords(self.matrix)

    @classmethod
    def from_coords(cls, spec, coords):
        return cls(spec, _from_matrix(spec, coords_to_matrix(spec.genus, coords)))


def matrix_to_coords(Z):
    """Upper-triangular entries of symmetric ``Z`` (batched over leading axes)."""
    g = Z.shape[-1]
    rows, cols = np.triu_indices(g)
    return Z[..., rows, cols]


def coords_to_matrix(genus, coords):
    """Inverse of :func:`matrix_to_coords`."""
    coords = np.asarray(coords, dtype=complex)
    g = int(genus)
    rows, cols = np.triu_indices(g)
    Z = np.zeros(coords.shape[:-1] + (g, g), dtype=complex)
    Z[..., rows, cols] = coords
    Z[..., cols, rows] = coords
    return Z


@dataclass(frozen=True, eq=False)
class HCFactorization:
    p_plus: np.ndarray
    k_c: np.ndarray
    p_minus: np.ndarray

    def product(self):
        return self.p_plus @ self.k_c @ self.p_minus


def hc_embed(p):
    """Harish-Chandra embedding ``Omega -> (Omega - iI)(Omega + iI)^{-1}``."""
    M = p.matrix
    eye = np.eye(M.shape[0])
    Z = (M - 1j * eye) @ np.linalg.inv(M + 1j * eye)
    Z = 0.5 * (Z + Z.T)
    return BoundedPoint(p.spec, _from_matrix(p.spec, Z))


def hc_inverse(b):
    Z = b.matrix
    eye = np.eye(Z.shape[0])
    A = eye - Z
    if _nearly_singular(A, 1.0):
        raise BoundaryPoint("I - Z is singular: the point maps to infinity")
    M = 1j * (eye + Z) @ np.linalg.inv(A)
    M = 0.5 * (M + M.T)
    return UnboundedPoint(b.spec, _from_matrix(b.spec, M))


def contains(spec, candidate, model="bounded"):
    """Membership test with a margin of ``1e-10`` on the smallest eigenvalue.

    ``candidate`` may be a single point or a stack of points (leading batch
    axes); the result is then a boolean array.
    """
    arr = np.asarray(candidate, dtype=complex)
    g = spec.genus
    if spec.scalar_points and arr.shape[-2:] != (1, 1):
        arr = arr[..., None, None]
    if arr.shape[-2:] != (g, g):
        raise ValueError(f"candidate shape {arr.shape} does not match {spec.label}")
    sym_ok = _symmetry_defect(arr) <= SYMMETRY_TOL * np.maximum(1.0, np.abs(arr).max(axis=(-2, -1)))
    if model == "bounded":
        margin = bounded_margin(arr)
    elif model == "unbounded":
        margin = unbounded_margin(arr)
    else:
        raise ValueError(f"model must be 'bounded' or 'unbounded', got {model!r}")
    out = sym_ok & (margin > PD_MARGIN)
    return bool(out) if out.ndim == 0 else out


def is_real_symplectic(g, tol=1e-10):
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
        return False
    if np.abs(np.imag(g)).max(initial=0.0) > tol:
        return False
    gr = np.real(g)
    J = symplectic_form(g.shape[0] // 2)
    return np.linalg.norm(gr.T @ J @ gr - J) <= tol * max(1.0, np.linalg.norm(gr) ** 2)


def _nearly_singular(A, scale):
    """Smallest singular value below ``1e-12 * scale`` (``cond`` misses this for 1x1 blocks)."""
    return np.linalg.svd(A, compute_uv=False).min() < SINGULAR_RTOL * max(1.0, scale)


def _blocks(m):
    n = m.shape[0] // 2
    return m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:]


def group_act(g, p):
    """Action of ``g`` in Sp(2g, R) (SL(2, R) for H) by generalized Mobius maps."""
    g = as_square(g, "g")
    if g.shape[0] != p.spec.size:
        raise ValueError(f"group element of size {g.shape[0]} cannot act on {p.spec.label}")
    if not is_real_symplectic(g):
        raise ValueError("group element is not in G_R")
    A, B, C, D = _blocks(np.real(g))
    M = p.matrix
    den = C @ M + D
    if _nearly_singular(den, np.linalg.norm(g) * max(1.0, np.linalg.norm(M))):
        raise ActionUndefined("C Omega + D is singular")
    out = (A @ M + B) @ np.linalg.inv(den)
    out = 0.5 * (out + out.T)
    return UnboundedPoint(p.spec, _from_matrix(p.spec, out))


def point_to_group(p):
    """An element of G_R moving ``iI`` to ``p`` (upper-triangular, via Cholesky of Im Omega)."""
    M = p.matrix
    X = M.real
    Y = M.imag
    try:
        L = np.linalg.cholesky(0.5 * (Y + Y.T))
    except np.linalg.LinAlgError as exc:
        raise DomainError("Im Omega is not positive definite") from exc
    LinvT = np.linalg.inv(L).T
    g = p.spec.genus
    return np.block([[L, X @ LinvT], [np.zeros((g, g)), LinvT]])


def cayley_matrix(genus):
    """Unitary ``(I iI; iI I)/sqrt(2)``; conjugating by it makes K_C block diagonal."""
    eye = np.eye(int(genus))
    return np.block([[eye, 1j * eye], [1j * eye, eye]]) / np.sqrt(2.0)


def factorize_pkp(g, frame):
    """Unique factorization ``g = p_plus k_c p_minus`` in the big cell.

    In the Cayley basis ``g' = W^{-1} g W`` the three factors are block
    upper unipotent, block diagonal and block lower unipotent, so the
    factorization is a block LDU decomposition pivoting on the lower-right
    block.
    """
    g = as_square(g, "g")
    n = frame.spec.genus
    if g.shape[0] != 2 * n:
        raise ValueError(f"group element of size {g.shape[0]} does not match {frame.spec.label}")
    W = cayley_matrix(n)
    Winv = W.conj().T
    a, b, c, d = _blocks(Winv @ g @ W)
    if _nearly_singular(d, np.linalg.norm(g)):
        raise NotInBigCell("pivot block is singular")
    dinv = np.linalg.inv(d)
    X = b @ dinv
    Y = dinv @ c
    eye = np.eye(n)
    zero = np.zeros((n, n))
    upper = np.block([[eye, X], [zero, eye]])
    middle = np.block([[a - b @ dinv @ c, zero], [zero, d]])
    lower = np.block([[eye, zero], [Y, eye]])
    return HCFactorization(W @ upper @ Winv, W @ middle @ Winv, W @ lower @ Winv)


def zeta_coordinate(p, frame):
    """Bounded point of ``p`` computed as ``log zeta(g)`` in the fixed g^{-1,1} basis."""
    fac = factorize_pkp(point_to_group(p), frame)
    coords = frame.coordinates(nilpotent_log(fac.p_plus))
    return BoundedPoint.from_coords(p.spec, coords)
