import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_taus
from l2ext.errors import InconsistentFiber, InvalidBaseVector
from l2ext.harness import random_points
from l2ext.hc_domain import UnboundedPoint, group_act, hc_embed, point_to_group
from l2ext.lie_core import DomainSpec, bracket, circle_action, hodge_decompose_algebra, nilpotent_exp
from l2ext.vhs import (
    build_section,
    check_shifting,
    eval_section,
    fiber_angle,
    fiber_decompose,
    holomorphy_check,
    span_residual,
    standard_sl2,
    standard_sp,
    subspace_distance,
    sym_sl2,
    weight_component,
)

REPS = [standard_sl2(), sym_sl2(2), sym_sl2(3), sym_sl2(6), standard_sp(1), standard_sp(2), standard_sp(3)]
ids = [r.label for r in REPS]


def _random_algebra(spec, rng, scale=0.5):
    frame = hodge_decompose_algebra(spec)
    basis = np.concatenate([frame.g00, frame.g_m11, frame.g_1m1])
    c = scale * (rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis)))
    return np.tensordot(c, basis, axes=1)


@pytest.mark.parametrize("rep", REPS, ids=ids)
def test_representation_axioms(rep, rng):
    for _ in range(5):
        X = _random_algebra(rep.spec, rng)
        Y = _random_algebra(rep.spec, rng)
        g1, g2 = expm(X), expm(Y)
        lhs = rep.rho(g1 @ g2)
        assert np.abs(lhs - rep.rho(g1) @ rep.rho(g2)).max() < 1e-11 * max(1.0, np.abs(lhs).max())
        assert np.abs(rep.drho(bracket(X, Y)) - bracket(rep.drho(X), rep.drho(Y))).max() < 1e-11
        assert np.abs(rep.rho(expm(X)) - expm(rep.drho(X))).max() < 1e-11 * max(1.0, np.abs(lhs).max())


@pytest.mark.parametrize("rep", REPS, ids=ids)
def test_rho_exp_on_nilpotent(rep, rng):
    frame = hodge_decompose_algebra(rep.spec)
    X = frame.element(rng.normal(size=frame.n_coords) + 1j * rng.normal(size=frame.n_coords))
    assert np.abs(rep.rho(nilpotent_exp(X)) - nilpotent_exp(rep.drho(X))).max() < 1e-12 * max(1, np.abs(X).max()) ** rep.weight


def test_weight_component_examples():
    assert weight_component(standard_sl2(), 1).shape[1] == 2
    assert weight_component(standard_sl2(), 0).shape[1] == 0
    assert weight_component(standard_sp(2), 1).shape[1] == 4


@pytest.mark.parametrize("rep", [standard_sl2(), sym_sl2(4), standard_sp(2)], ids=lambda r: r.label)
def test_weight_component_independent_of_base_point(rep, rng):
    ref = weight_component(rep, rep.weight)
    for p in random_points(rep.spec, 10, rng):
        moved = weight_component(rep, rep.weight, via=point_to_group(p))
        assert subspace_distance(ref, moved) < 1e-10


def test_fiber_decompose_half_plane():
    rep = standard_sl2()
    d = fiber_decompose(rep)
    assert subspace_distance(d.basis(1), np.array([[1j], [1]])) < 1e-14
    assert subspace_distance(d.basis(0), np.array([[-1j], [1]])) < 1e-14
    tau = 0.7 + 2.1j
    d = fiber_decompose(rep, UnboundedPoint(rep.spec, tau))
    assert subspace_distance(d.basis(1), np.array([[tau], [1]])) < 1e-14


def test_fiber_decompose_siegel_reference():
    rep = standard_sp(2)
    d = fiber_decompose(rep)
    E = np.vstack([1j * np.eye(2), np.eye(2)])
    assert subspace_distance(d.basis(1), E) < 1e-14


@pytest.mark.parametrize("rep", REPS, ids=ids)
def test_fiber_decompose_invariants(rep, rng):
    for p in [None] + random_points(rep.spec, 3, rng):
        d = fiber_decompose(rep, p)
        full = np.hstack([B for _, _, B in d.components])
        assert full.shape == (rep.dim, rep.dim)
        assert np.linalg.matrix_rank(full) == rep.dim
        assert d.conjugation_residual() < 1e-10


def test_fiber_angle_separates_all_weights():
    for n in range(1, 7):
        theta = fiber_angle(n)
        vals = [np.exp(-1j * theta * (2 * p - n)) for p in range(n + 1)]
        gaps = [abs(a - b) for i, a in enumerate(vals) for b in vals[i + 1:]]
        assert min(gaps) > 1e-3


def test_project_rejects_inconsistent_vector():
    d = fiber_decompose(standard_sl2())
    d_bad = type(d)(d.point, ((1, 0, d.basis(1)), (0, 1, d.basis(1))))
    with pytest.raises(InconsistentFiber):
        d_bad.project(np.array([1.0, 0.0]))


@pytest.mark.parametrize("rep", REPS, ids=ids)
def test_shifting(rep):
    report = check_shifting(rep, hodge_decompose_algebra(rep.spec))
    assert report.max_residual < 1e-12


def test_shifting_example():
    X = np.array([[1, -1j], [-1j, -1]]) / 2
    assert span_residual(np.array([[1j], [1]]), X @ np.array([-1j, 1])) < 1e-15
    # nothing sits above the top piece
    assert np.abs(X @ np.array([1j, 1])).max() < 1e-15


@pytest.mark.parametrize("rep", REPS, ids=ids)
def test_sections_lie_in_filtration(rep, rng):
    frame = hodge_decompose_algebra(rep.spec)
    ref = fiber_decompose(rep)
    points = random_points(rep.spec, 5, rng)
    for p_level, _, _ in ref.components:
        for v in ref.filtration(p_level).T:
            sec = build_section(v, p_level, rep, frame)
            assert np.abs(eval_section(sec, UnboundedPoint.reference(rep.spec)) - v).max() < 1e-15
            for p in points:
                val = eval_section(sec, p)
                F = fiber_decompose(rep, p).filtration(p_level)
                assert span_residual(F, val) < 1e-10 * max(1.0, np.linalg.norm(val))


def test_half_plane_section_formula(rng):
    rep = standard_sl2()
    sec = build_section(np.array([1j, 1]), 1, rep, hodge_decompose_algebra(rep.spec))
    coeffs = sec.coefficients()
    np.testing.assert_allclose(coeffs[(0,)], [1j, 1])
    np.testing.assert_allclose(coeffs[(1,)], [1j, -1])
    for tau in random_taus(rng, 100):
        p = UnboundedPoint(rep.spec, tau)
        t = hc_embed(p).coord
        expected = 2j / (tau + 1j) * np.array([tau, 1])
        np.testing.assert_allclose(eval_section(sec, p), [1j * (1 + t), 1 - t], atol=1e-12)
        assert np.abs(eval_section(sec, p, "exp") - expected).max() < 1e-12
        assert np.abs(eval_section(sec, p, "zeta") - expected).max() < 1e-12
        F = fiber_decompose(rep, p).basis(1)
        assert span_residual(F, eval_section(sec, p)) < 1e-10


@pytest.mark.parametrize("rep", REPS, ids=ids)
def test_two_paths_agree(rep, rng):
    frame = hodge_decompose_algebra(rep.spec)
    E = rep.canonical_smallest_basis()
    sec = build_section(E[:, -1], rep.top_p, rep, frame)
    for p in random_points(rep.spec, 10, rng):
        a = eval_section(sec, p, "exp")
        b = eval_section(sec, p, "zeta")
        assert np.abs(a - b).max() < 1e-10 * max(1.0, np.abs(a).max())


def test_build_section_rejects_vector_outside_filtration():
    rep = standard_sl2()
    frame = hodge_decompose_algebra(rep.spec)
    with pytest.raises(InvalidBaseVector):
        build_section(np.array([-1j, 1]), 1, rep, frame)
    with pytest.raises(InvalidBaseVector):
        build_section(np.array([1, 2, 3]), 1, rep, frame)


def test_zero_section():
    rep = standard_sp(2)
    sec = build_section(np.zeros(4), 1, rep, hodge_decompose_algebra(rep.spec))
    p = random_points(rep.spec, 1, np.random.default_rng(0))[0]
    assert np.array_equal(eval_section(sec, p), np.zeros(4))
    report = holomorphy_check(sec)
    assert report.passed and report.observed_degree == 0


@pytest.mark.parametrize("rep", REPS, ids=ids)
def test_holomorphy(rep):
    frame = hodge_decompose_algebra(rep.spec)
    sec = build_section(rep.canonical_smallest_basis()[:, 0], rep.top_p, rep, frame)
    report = holomorphy_check(sec)
    assert report.passed
    if rep.spec.genus == 1:
        assert report.observed_degree == rep.weight
    else:
        assert report.observed_degree <= rep.spec.genus


def test_sym_power_section_is_power_of_standard(rng):
    std = standard_sl2()
    frame = hodge_decompose_algebra(std.spec)
    base = build_section(np.array([1j, 1]), 1, std, frame)
    for k in (2, 3, 5):
        rep = sym_sl2(k)
        sec = build_section(rep.canonical_smallest_basis()[:, 0], k, rep, frame)
        for tau in random_taus(rng, 5):
            p = UnboundedPoint(std.spec, tau)
            a, b = eval_section(base, p)
            expected = [rep.canonical_smallest_basis()[j, 0] / 1j ** (k - j) * a ** (k - j) * b**j
                        for j in range(k + 1)]
            np.testing.assert_allclose(eval_section(sec, p), expected, rtol=1e-10, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-4, 4), st.floats(0.05, 30), st.floats(0, 2 * np.pi))
def test_section_equivariance_under_circle(x, y, theta):
    # sigma(k . tau) = rho(k) sigma(tau) * (automorphy factor), so the lines agree
    rep = standard_sl2()
    sec = build_section(np.array([1j, 1]), 1, rep, hodge_decompose_algebra(rep.spec))
    p = UnboundedPoint(rep.spec, complex(x, y))
    k = circle_action(rep.spec, theta)
    moved = eval_section(sec, group_act(k, p))
    assert span_residual(rep.rho(k) @ eval_section(sec, p)[:, None], moved) < 1e-10 * max(1, np.linalg.norm(moved))


def test_unsupported_representations():
    with pytest.raises(ValueError):
        sym_sl2(7)
    with pytest.raises(ValueError):
        standard_sp(4)
    with pytest.raises(ValueError):
        sym_sl2(2, DomainSpec.siegel(2))
