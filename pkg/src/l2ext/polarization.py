"""Polarization forms of the built-in representations and the Hodge metric.

``S`` is a real ``G_R``-invariant bilinear form, ``S^h(v, w) = i^{-n} S(v, conj w)``
and the Hodge metric is ``sum_p (-1)^p S^h`` on the ``(p, q)`` components.
On the smallest piece ``E = V^{p_max, q}`` that reduces to
``(-1)^{p_max} S^h``, which is what all the integrals use.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidPolarization
from .hc_domain import UnboundedPoint, group_act, point_to_group
from .lie_core import circle_action, symplectic_form
from .vhs import STANDARD_SL2, STANDARD_SP, SYM_SL2, eval_section, fiber_decompose

POSITIVITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PolarizationForm:
    rep_tag: str
    matrix: np.ndarray
    weight: int
    top_p: int

    def bilinear(self, v, w):
        return np.asarray(v) @ self.matrix @ np.asarray(w)

    def hermitian(self, v, w):
        """``S^h(v, w) = i^{-n} S(v, conj w)``; batched over leading axes."""
        v = np.asarray(v, dtype=complex)
        w = np.asarray(w, dtype=complex)
        return (1j ** (-self.weight)) * np.sum((v @ self.matrix) * np.conj(w), axis=-1)

    def smallest_piece_metric(self, v, w):
        """``h_E(v, w) = (-1)^{p_max} S^h(v, w)`` for vectors already in E (batched)."""
        return (-1) ** self.top_p * self.hermitian(v, w)

    def scaled(self, factor):
        if factor <= 0:
            raise ValueError("polarization can only be rescaled by a positive factor")
        return PolarizationForm(self.rep_tag, factor * self.matrix, self.weight, self.top_p)


def _sym_power_form(k):
    # S_k(m_j, m_{k-j}) = (-1)^{k-j} / C(k, j): the unique form with S_k(u^k, w^k) = S(u, w)^k
    S = np.zeros((k + 1, k + 1))
    for j in range(k + 1):
        S[j, k - j] = (-1) ** (k - j) / comb(k, j)
    return S


def weil_operator(rep):
    """``rho(h(i))``, the operator ``C`` for which ``S(v, C w)`` is positive definite."""
    return rep.rho_h(1j)


def _sample_group(spec):
    """Deterministic spread of G_R elements for the invariance check."""
    from .hc_domain import UnboundedPoint as P

    g = spec.genus
    out = []
    for theta in (0.3, 1.1, 2.7):
        out.append(circle_action(spec, theta))
    rng = np.random.default_rng(1234)
    for _ in range(4):
        A = rng.normal(size=(g, g))
        M = 0.5 * (A + A.T) + 1j * (np.eye(g) + 0.3 * (A @ A.T) / g)
        out.append(point_to_group(P(spec, M[0, 0] if spec.scalar_points else M)))
    out.append(out[0] @ out[-1])
    return out


def verify_polarization(pol, rep):
    """Residuals of the three polarization axioms; raises on failure."""
    S = pol.matrix
    inv_resid = 0.0
    for g in _sample_group(rep.spec):
        r = rep.rho(g)
        inv_resid = max(inv_resid, np.abs(r.T @ S @ r - S).max())
    SC = S @ weil_operator(rep)
    sym_resid = np.abs(SC - SC.T).max()
    min_sc = np.linalg.eigvalsh(0.5 * (SC + SC.T).real).min()
    decomp = fiber_decompose(rep)
    min_hodge = np.inf
    for p, _, B in decomp.components:
        G = (-1) ** p * (1j ** (-pol.weight)) * (B.T @ S @ np.conj(B))
        G = 0.5 * (G + G.conj().T)
        min_hodge = min(min_hodge, np.linalg.eigvalsh(G).min())
    report = {
        "invariance_residual": float(inv_resid),
        "weil_symmetry_residual": float(sym_resid),
        "weil_min_eigenvalue": float(min_sc),
        "hodge_min_eigenvalue": float(min_hodge),
    }
    if inv_resid > 1e-11 * max(1.0, np.abs(S).max()) * rep.dim**2:
        raise InvalidPolarization(f"S is not G_R-invariant: {report}")
    if sym_resid > 1e-11 or min_sc <= POSITIVITY_TOL:
        raise InvalidPolarization(f"S(v, Cw) is not symmetric positive definite: {report}")
    if min_hodge <= POSITIVITY_TOL:
        raise InvalidPolarization(f"(-1)^p S^h is not positive on every V^{{p,q}}: {report}")
    return report


def builtin_polarization(rep):
    """The explicit polarization of a built-in representation, verified on construction."""
    if rep.tag == STANDARD_SL2:
        S = symplectic_form(1)
    elif rep.tag == STANDARD_SP:
        S = symplectic_form(rep.spec.genus)
    elif rep.tag == SYM_SL2:
        S = _sym_power_form(rep.degree)
        # sign fixed by positivity of (-1)^k S^h on V^{k,0}
        v = rep.canonical_smallest_basis()[:, 0]
        if ((-1) ** rep.degree * (1j ** (-rep.weight)) * (v @ S @ np.conj(v))).real < 0:
            S = -S
    else:
        raise InvalidPolarization(f"no built-in polarization for {rep.tag!r}")
    pol = PolarizationForm(rep.tag, S, rep.weight, rep.top_p)
    verify_polarization(pol, rep)
    return pol


def hodge_metric(pol, decomp, v, w):
    """``sum_p (-1)^p S^h(v_p, w_p)`` using the ``(p, q)`` split at ``decomp.point``."""
    vs = decomp.project(v)
    ws = decomp.project(w)
    return complex(sum((-1) ** p * pol.hermitian(vs[p], ws[p]) for p in vs))


def polarization_function(sec1, sec2, point, pol):
    """``h_E(sigma_1(h'), sigma_2(h'))`` with the metric taken in the fiber at ``point``."""
    decomp = fiber_decompose(sec1.rep, point)
    return hodge_metric(pol, decomp, eval_section(sec1, point), eval_section(sec2, point))


def s1_orbit_check(sec1, sec2, point, pol, n_samples=16):
    """Largest deviation of the polarization function along the circle orbit of ``point``."""
    base = polarization_function(sec1, sec2, point, pol)
    worst = 0.0
    for theta in np.linspace(0.0, np.pi, n_samples, endpoint=False):
        moved = group_act(circle_action(point.spec, theta), point)
        worst = max(worst, abs(polarization_function(sec1, sec2, moved, pol) - base))
    return worst


def random_k_element(spec, rng):
    """Random element of K = U(g) embedded as ``(Re U, Im U; -Im U, Re U)``."""
    g = spec.genus
    A = rng.normal(size=(g, g)) + 1j * rng.normal(size=(g, g))
    U, _ = np.linalg.qr(A)
    return np.block([[U.real, U.imag], [-U.imag, U.real]])


def k_invariance_residual(pol, rep, rng, n_samples=10):
    """Max ``|S^h(rho(k) v, rho(k) w) - S^h(v, w)|`` over sampled ``k`` in K and random ``v, w``."""
    worst = 0.0
    for i in range(n_samples):
        if i % 2 == 0:
            k = circle_action(rep.spec, rng.uniform(0, 2 * np.pi))
        else:
            k = random_k_element(rep.spec, rng)
        r = rep.rho(k)
        v = rng.normal(size=rep.dim) + 1j * rng.normal(size=rep.dim)
        w = rng.normal(size=rep.dim) + 1j * rng.normal(size=rep.dim)
        worst = max(worst, abs(pol.hermitian(r @ v, r @ w) - pol.hermitian(v, w)))
    return worst


def reference_point(spec):
    return UnboundedPoint.reference(spec)
