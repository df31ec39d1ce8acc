"""Numerical evidence that ``sigma(Z) = rho(Exp Z) v`` is the L2-minimal extension.

The criterion: ``sigma`` is minimal iff ``(f e_j, sigma)_{L2} = 0`` for every
holomorphic ``f`` vanishing at the reference point and every frame section
``e_j`` of the smallest piece.  Monomials of bounded degree stand in for
``f``.  Around that sit the circle-averaging mechanism behind the
vanishing, random competitors ``sigma + sum c f e_j``, and the constant
``C = ||sigma||^2 / h_E(v, v)``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBaseVector
from .lie_core import adjoint
from .quadrature import IntegralEstimate, polarization_values
from .vhs import build_section, monomial, multi_indices

DETERMINISTIC_TOL = 1e-10
N_SIGMA = 3.0
NODE_CHUNK = 1 << 13


@dataclass(frozen=True)
class MonomialCompetitor:
    alpha: tuple
    j: int

    def __post_init__(self):
        if sum(self.alpha) < 1 or min(self.alpha) < 0:
            raise ValueError("competitor monomials must vanish at the reference point")

    @property
    def key(self):
        return f"{''.join(map(str, self.alpha))}|{self.j}"


@dataclass(frozen=True, eq=False)
class CombinedSection:
    """``base + sum_i c_i f^{alpha_i} e_{j_i}`` for holomorphic sections ``base`` and ``e_j``."""

    base: object
    frame_sections: tuple
    terms: tuple  # of (coefficient, alpha, j)

    @property
    def rep(self):
        return self.base.rep

    @property
    def frame(self):
        return self.base.frame

    @property
    def base_vector(self):
        return self.base.base_vector

    def evaluate_coords(self, coords):
        coords = np.asarray(coords, dtype=complex)
        out = self.base.evaluate_coords(coords)
        cache = {}
        for c, alpha, j in self.terms:
            if j not in cache:
                cache[j] = self.frame_sections[j].evaluate_coords(coords)
            out = out + c * monomial(coords, alpha)[..., None] * cache[j]
        return out


def perturbed_section(sec, frames, eps):
    """``sigma + eps * t_1 * e_1``: a non-minimal extension of the same vector."""
    alpha = tuple([1] + [0] * (sec.frame.n_coords - 1))
    return CombinedSection(sec, tuple(frames), ((complex(eps), alpha, 0),))


def frame_sections(rep, frame):
    """Sections through a basis of the smallest piece at the reference point."""
    E = rep.canonical_smallest_basis()
    return [build_section(E[:, j], rep.top_p, rep, frame) for j in range(E.shape[1])]


def frame_gram_min_det(sections, pol, n_points=20, seed=0):
    """Smallest ``|det|`` of the Gram matrix ``h_E(e_i, e_j)`` over random points of D."""
    from .vhs import _random_bounded_coords

    rng = np.random.default_rng(seed)
    pts = _random_bounded_coords(sections[0].rep.spec, n_points, rng)
    vals = np.stack([s.evaluate_coords(pts) for s in sections], axis=1)  # (N, r, dim)
    gram = pol.smallest_piece_metric(vals[:, :, None, :], vals[:, None, :, :])
    return float(np.abs(np.linalg.det(gram)).min())


def competitors(n_coords, n_frames, max_degree, min_degree=1):
    return [
        MonomialCompetitor(alpha, j)
        for d in range(min_degree, max_degree + 1)
        for alpha in multi_indices(n_coords, d)
        for j in range(n_frames)
    ]


def _tolerance(integrator, est):
    if integrator.deterministic:
        return DETERMINISTIC_TOL
    return N_SIGMA * est.std_error


@dataclass
class CellResult:
    estimate: IntegralEstimate
    tolerance: float

    @property
    def magnitude(self):
        return abs(self.estimate.value)

    @property
    def passed(self):
        return self.magnitude <= self.tolerance

    def as_dict(self):
        out = self.estimate.as_dict()
        out.update(magnitude=self.magnitude, tolerance=self.tolerance, passed=self.passed)
        return out


@dataclass
class OrthogonalityReport:
    cells: dict = field(default_factory=dict)  # competitor key -> CellResult

    @property
    def passed(self):
        return all(c.passed for c in self.cells.values())

    @property
    def worst_ratio(self):
        """Largest ``magnitude / tolerance`` over the cells."""
        return max((c.magnitude / c.tolerance if c.tolerance > 0 else np.inf for c in self.cells.values()), default=0.0)

    def as_dict(self):
        return {
            "passed": self.passed,
            "worst_ratio": self.worst_ratio,
            "cells": {k: self.cells[k].as_dict() for k in sorted(self.cells)},
        }


def orthogonality_suite(sec, frames, pol, max_degree, integrator, workers=1):
    """``(f^alpha e_j, sigma)_{L2}`` for every monomial of degree ``1..max_degree``.

    The inner product is linear in its first slot, so each cell integrates
    ``f^alpha * h_E(e_j, sigma)``; the pointwise factor is computed once per ``j``.
    """
    pointwise = [polarization_values(e, sec, pol, integrator) for e in frames]
    nodes = integrator.nodes
    cells = competitors(nodes.shape[1], len(frames), max_degree)

    def run(cell):
        est = integrator.estimate(monomial(nodes, cell.alpha) * pointwise[cell.j])
        return cell.key, CellResult(est, _tolerance(integrator, est))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    return OrthogonalityReport(dict(results))


def coordinate_rotation(frame, theta):
    """Factor by which the bounded coordinates change under ``h(e^{i theta})``."""
    B = frame.g_m11[0]
    image = adjoint(frame.circle_action(theta), B)
    return complex(frame.coordinates(image)[0])


@dataclass
class AveragingResult:
    alpha: tuple
    theta: float
    integral: IntegralEstimate
    rotated: IntegralEstimate
    twist: complex

    @property
    def twist_residual(self):
        """``|I_rot - z^{2|alpha|} I|``; vanishes by circle invariance of the integrand's metric part."""
        return abs(self.rotated.value - self.twist * self.integral.value)

    def as_dict(self):
        return {
            "alpha": list(self.alpha),
            "theta": self.theta,
            "integral": self.integral.as_dict(),
            "rotated": self.rotated.as_dict(),
            "twist": [self.twist.real, self.twist.imag],
            "twist_residual": self.twist_residual,
        }


def s1_averaging_demo(sec, frames, pol, alpha, integrator, theta, j=0):
    """``I = int f^alpha h_E(e_j, sigma)`` and the same integrand at rotated coordinates.

    Rotating by ``h(e^{i theta})`` multiplies ``f^alpha`` by ``z^{2|alpha|}``
    and leaves ``h_E(e_j, sigma)`` unchanged, so ``I_rot = z^{2|alpha|} I``.
    Since the measure is also rotation invariant, ``I_rot = I``; both hold
    only if ``I = 0`` whenever ``z^{2|alpha|} != 1``.
    """
    alpha = tuple(alpha)
    if sum(alpha) < 1:
        raise ValueError("alpha must have positive total degree")
    nodes = integrator.nodes
    factor = coordinate_rotation(sec.frame, theta)
    rotated_nodes = factor * nodes

    def integrand(pts):
        return monomial(pts, alpha) * pol.smallest_piece_metric(
            frames[j].evaluate_coords(pts), sec.evaluate_coords(pts)
        )

    I = integrator.estimate(integrand(nodes))
    I_rot = integrator.estimate(integrand(rotated_nodes))
    return AveragingResult(alpha, float(theta), I, I_rot, factor ** sum(alpha))


def _chunks(n, size=NODE_CHUNK):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


@dataclass
class CompetitorReport:
    differences: list  # ||zeta||^2 - ||sigma||^2 estimates per trial
    pythagoras: list  # ||zeta||^2 - ||zeta - sigma||^2 - ||sigma||^2 estimates per trial
    difference_tol: list
    pythagoras_tol: list
    scaling_exponent: float
    scaling_tol: float = 0.01

    @property
    def min_difference_margin(self):
        """``min_i (diff_i + tol_i)``; non-negative iff no competitor beats sigma."""
        return min(d.value.real + t for d, t in zip(self.differences, self.difference_tol))

    @property
    def max_pythagoras_excess(self):
        return max(abs(p.value) - t for p, t in zip(self.pythagoras, self.pythagoras_tol))

    @property
    def passed(self):
        return (
            self.min_difference_margin >= 0
            and self.max_pythagoras_excess <= 0
            and abs(self.scaling_exponent - 2.0) <= self.scaling_tol
        )

    def as_dict(self):
        return {
            "passed": self.passed,
            "trials": len(self.differences),
            "min_difference": min(d.value.real for d in self.differences),
            "min_difference_margin": self.min_difference_margin,
            "max_pythagoras_residual": max(abs(p.value) for p in self.pythagoras),
            "max_pythagoras_excess": self.max_pythagoras_excess,
            "scaling_exponent": self.scaling_exponent,
            "scaling_tolerance": self.scaling_tol,
        }


def _competitor_integrands(sec, frames, pol, nodes, coef_sets, cells):
    """Pointwise ``h(zeta,zeta) - h(sigma,sigma)`` and the Pythagoras residual for each coefficient set.

    With ``zeta - sigma = sum_j P_j e_j`` the three pointwise norms are
    expanded through the frame Gram matrix ``h_E(e_j, e_k)`` and the cross
    terms ``h_E(e_j, sigma)``, which costs ``r^2`` instead of ``dim V^2``
    per node and competitor.  ``coef_sets`` has shape ``(T, len(cells))``;
    returns two ``(N, T)`` arrays.
    """
    n = nodes.shape[0]
    T = coef_sets.shape[0]
    r = len(frames)
    diff = np.empty((n, T))
    pyth = np.empty((n, T))
    alphas = sorted({c.alpha for c in cells})
    a_index = {a: i for i, a in enumerate(alphas)}
    # C[j] maps monomial values to the coefficient P_j of e_j
    C = np.zeros((r, len(alphas), T), dtype=complex)
    for k, c in enumerate(cells):
        C[c.j, a_index[c.alpha]] += coef_sets[:, k]
    for sl in _chunks(n):
        pts = nodes[sl]
        s = sec.evaluate_coords(pts)  # (m, dim)
        E = np.stack([e.evaluate_coords(pts) for e in frames], axis=1)  # (m, r, dim)
        mono = np.stack([monomial(pts, a) for a in alphas], axis=1)  # (m, A)
        P = [mono @ C[j] for j in range(r)]  # r arrays of shape (m, T)
        gram = pol.smallest_piece_metric(E[:, :, None, :], E[:, None, :, :])  # (m, r, r)
        cross = pol.smallest_piece_metric(E, s[:, None, :])  # (m, r)
        h_ss = pol.smallest_piece_metric(s, s).real[:, None]
        h_ds = np.zeros_like(P[0])  # h(zeta - sigma, sigma)
        h_dd = np.zeros(P[0].shape)
        for j in range(r):
            h_ds += P[j] * cross[:, j, None]
            h_dd += (P[j] * gram[:, j, j, None] * np.conj(P[j])).real
            for k in range(j + 1, r):
                h_dd += 2.0 * (P[j] * gram[:, j, k, None] * np.conj(P[k])).real
        h_zz = h_ss + 2.0 * h_ds.real + h_dd
        diff[sl] = h_zz - h_ss
        pyth[sl] = h_zz - h_dd - h_ss
    return diff, pyth


def _scale_tolerance(integrator, est, scale):
    if integrator.deterministic:
        return DETERMINISTIC_TOL * max(1.0, scale)
    return N_SIGMA * est.std_error


def competitor_test(sec, frames, pol, integrator, trials=100, seed=0, max_degree=4, scales=(1.0, 10.0, 100.0)):
    """Random competitors ``zeta = sigma + sum c_{alpha,j} f^alpha e_j`` with complex Gaussian ``c``.

    Norms are computed literally from pointwise ``h_E`` values of ``zeta``,
    ``zeta - sigma`` and ``sigma``.  Deterministic rules use an absolute
    tolerance of ``1e-10`` scaled by the size of ``||zeta||^2``; Monte Carlo
    uses three standard errors of the estimated quantity.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    cells = competitors(integrator.nodes.shape[1], len(frames), max_degree)
    m = len(cells)
    coefs = (rng.normal(size=(trials, m)) + 1j * rng.normal(size=(trials, m))) / np.sqrt(2.0)
    diff, pyth = _competitor_integrands(sec, frames, pol, integrator.nodes, coefs, cells)
    norm_sigma = integrator.estimate(pol.smallest_piece_metric(
        sec.evaluate_coords(integrator.nodes), sec.evaluate_coords(integrator.nodes)).real).value.real
    diff_est = integrator.estimate(diff)
    pyth_est = integrator.estimate(pyth)
    diff_tol = [_scale_tolerance(integrator, d, d.value.real + norm_sigma) for d in diff_est]
    pyth_tol = [_scale_tolerance(integrator, p, d.value.real + norm_sigma) for p, d in zip(pyth_est, diff_est)]

    # growth of ||zeta||^2 - ||sigma||^2 under c -> s c for the first competitor
    scaled = np.array([s * coefs[0] for s in scales])
    sdiff, _ = _competitor_integrands(sec, frames, pol, integrator.nodes, scaled, cells)
    growth = np.array([e.value.real for e in integrator.estimate(sdiff)])
    slope = float(np.polyfit(np.log(scales), np.log(growth), 1)[0]) if np.all(growth > 0) else float("nan")
    return CompetitorReport(diff_est, pyth_est, diff_tol, pyth_tol, slope)


@dataclass
class ConstantReport:
    constant: IntegralEstimate  # ||sigma||^2 / h_E(v, v)
    volume: IntegralEstimate  # mu(D)
    gap: IntegralEstimate  # mu(D) - C, estimated from one integrand

    @property
    def ratio(self):
        return self.constant.value.real / self.volume.value.real

    @property
    def strict(self):
        """``C < mu(D)``: gap above ``1e-10`` (deterministic) or above three standard errors."""
        margin = max(N_SIGMA * self.gap.std_error, DETERMINISTIC_TOL)
        return self.gap.value.real > margin

    def as_dict(self):
        return {
            "C": self.constant.as_dict(),
            "mu_D": self.volume.as_dict(),
            "gap": self.gap.as_dict(),
            "ratio": self.ratio,
            "strict_inequality": self.strict,
        }


def extension_constant(sec, pol, integrator):
    v = sec.base_vector
    hv = float(pol.smallest_piece_metric(v, v).real)
    if hv <= 0:
        raise InvalidBaseVector("base vector has zero Hodge norm")
    vals = sec.evaluate_coords(integrator.nodes)
    ratio = pol.smallest_piece_metric(vals, vals).real / hv
    C = integrator.estimate(ratio)
    C = IntegralEstimate(complex(C.value.real), C.std_error, C.n_points)
    vol = integrator.volume()
    gap = integrator.estimate(1.0 - ratio)
    gap = IntegralEstimate(complex(gap.value.real), gap.std_error, gap.n_points)
    return ConstantReport(C, vol, gap)


@dataclass
class MinimalityReport:
    orthogonality: OrthogonalityReport
    competitors: CompetitorReport
    constant: ConstantReport

    @property
    def passed(self):
        return self.orthogonality.passed and self.competitors.passed and self.constant.strict

    def as_dict(self):
        return {
            "passed": self.passed,
            "orthogonality": self.orthogonality.as_dict(),
            "competitors": self.competitors.as_dict(),
            "constant": self.constant.as_dict(),
        }


def minimality_report(sec, frames, pol, integrator, max_degree, trials=100, seed=0, workers=1):
    return MinimalityReport(
        orthogonality_suite(sec, frames, pol, max_degree, integrator, workers),
        competitor_test(sec, frames, pol, integrator, trials, seed),
        extension_constant(sec, pol, integrator),
    )
