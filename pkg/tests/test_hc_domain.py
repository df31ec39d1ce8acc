import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scipy.linalg import expm

from conftest import random_taus
from l2ext.errors import ActionUndefined, BoundaryPoint, DomainError, NotInBigCell
from l2ext.harness import random_points
from l2ext.hc_domain import (
    BoundedPoint,
    UnboundedPoint,
    cayley_matrix,
    contains,
    factorize_pkp,
    group_act,
    hc_embed,
    hc_inverse,
    is_real_symplectic,
    point_to_group,
    zeta_coordinate,
)
from l2ext.lie_core import (
    DomainSpec,
    adjoint,
    circle_action,
    hodge_decompose_algebra,
    nilpotent_exp,
    nilpotent_log,
    symplectic_form,
)
from l2ext.polarization import random_k_element

H = DomainSpec.upper_half_plane()
H2 = DomainSpec.siegel(2)
H3 = DomainSpec.siegel(3)
M = np.array([[0.5, 0.5j], [0.5j, -0.5]])


def test_point_validation():
    with pytest.raises(DomainError):
        UnboundedPoint(H, -1j)
    with pytest.raises(DomainError):
        UnboundedPoint(H2, np.array([[1j, 1.0], [0.0, 1j]]))
    with pytest.raises(DomainError):
        BoundedPoint(H, 1.0)
    with pytest.raises(ValueError):
        UnboundedPoint(H2, 1j)


def test_hc_embed_examples():
    assert hc_embed(UnboundedPoint(H, 1j)).coord == 0
    eps = 0.37
    t = hc_embed(UnboundedPoint(H, 1j * (1 + eps))).coord
    assert abs(t - eps / (2 + eps)) < 1e-15
    Z = hc_embed(UnboundedPoint(H2, 2j * np.eye(2))).matrix
    np.testing.assert_allclose(Z, np.eye(2) / 3, atol=1e-15)
    assert contains(H2, Z)


def test_hc_inverse_examples():
    assert hc_inverse(BoundedPoint(H, 0.0)).value == 1j
    assert abs(hc_inverse(BoundedPoint(H, 0.5)).value - 3j) < 1e-15
    np.testing.assert_allclose(hc_inverse(BoundedPoint(H2, np.eye(2) / 3)).matrix, 2j * np.eye(2), atol=1e-15)


def test_hc_inverse_boundary():
    # inside the disk, but I - Z is numerically singular
    with pytest.raises(BoundaryPoint):
        hc_inverse(BoundedPoint(H, 1.0 - 1e-14))


def test_contains_examples():
    assert not contains(H, -1j, "unbounded")
    assert contains(H, 2j, "unbounded")
    assert contains(H2, 0.9 * np.eye(2))
    assert not contains(H2, np.eye(2))
    assert not contains(H2, np.array([[0.1, 0.2], [0.0, 0.1]]))


def test_contains_batched():
    Z = np.stack([0.9 * np.eye(2), np.eye(2), np.zeros((2, 2))])
    np.testing.assert_array_equal(contains(H2, Z), [True, False, True])


def test_group_act_examples():
    tau = 0.4 + 1.3j
    assert group_act(np.eye(2), UnboundedPoint(H, tau)).value == tau
    a, b = 3.0, 4.0
    A = np.array([[np.sqrt(b), a / np.sqrt(b)], [0, 1 / np.sqrt(b)]])
    assert abs(group_act(A, UnboundedPoint(H, 1j)).value - (a + 1j * b)) < 1e-14


def test_group_act_rejects_non_symplectic():
    with pytest.raises(ValueError):
        group_act(np.diag([2.0, 2.0]), UnboundedPoint(H, 1j))


def test_group_act_composition(rng):
    for p, q, r in zip(random_points(H2, 20, rng), random_points(H2, 20, rng), random_points(H2, 20, rng)):
        g1, g2 = point_to_group(q), point_to_group(r) @ circle_action(H2, rng.uniform(0, 6))
        lhs = group_act(g1 @ g2, p).matrix
        rhs = group_act(g1, group_act(g2, p)).matrix
        assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(lhs).max())


def test_point_to_group_examples():
    assert np.array_equal(point_to_group(UnboundedPoint(H, 1j)), np.eye(2))
    np.testing.assert_allclose(point_to_group(UnboundedPoint(H, 3 + 4j)), [[2, 1.5], [0, 0.5]])
    g = point_to_group(UnboundedPoint(H2, 2j * np.eye(2)))
    expected = np.block([[np.sqrt(2) * np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2) / np.sqrt(2)]])
    np.testing.assert_allclose(g, expected, atol=1e-15)
    np.testing.assert_allclose(group_act(g, UnboundedPoint(H2, 1j * np.eye(2))).matrix, 2j * np.eye(2))


@pytest.mark.parametrize("spec", [H, H2, H3], ids=lambda s: s.label)
def test_roundtrips(spec, rng):
    for p in random_points(spec, 100, rng):
        back = hc_inverse(hc_embed(p)).matrix
        assert np.abs(back - p.matrix).max() < 1e-12 * max(1.0, np.abs(p.matrix).max()) ** 2
        b = hc_embed(p)
        assert np.abs(hc_embed(hc_inverse(b)).matrix - b.matrix).max() < 1e-12


@pytest.mark.parametrize("spec", [H, H2, H3], ids=lambda s: s.label)
def test_zeta_coordinate_matches_hc_embed(spec, rng):
    frame = hodge_decompose_algebra(spec)
    for p in random_points(spec, 100, rng):
        assert np.abs(zeta_coordinate(p, frame).coords - hc_embed(p).coords).max() < 1e-10


def test_zeta_coordinate_examples():
    frame = hodge_decompose_algebra(H)
    assert abs(zeta_coordinate(UnboundedPoint(H, 1j), frame).coord) < 1e-15
    assert abs(zeta_coordinate(UnboundedPoint(H, 3j), frame).coord - 0.5) < 1e-15
    assert abs(hc_embed(UnboundedPoint(H, 3j)).coord - 0.5) < 1e-15


def test_factorize_identity():
    frame = hodge_decompose_algebra(H2)
    fac = factorize_pkp(np.eye(4), frame)
    for part in (fac.p_plus, fac.k_c, fac.p_minus):
        np.testing.assert_allclose(part, np.eye(4), atol=1e-15)


def test_factorize_half_plane_p_plus(rng):
    frame = hodge_decompose_algebra(H)
    for tau in random_taus(rng, 20):
        t = (tau - 1j) / (tau + 1j)
        fac = factorize_pkp(point_to_group(UnboundedPoint(H, tau)), frame)
        assert np.abs(fac.p_plus - nilpotent_exp(t * M)).max() < 1e-12


def test_factorize_near_identity(rng):
    frame = hodge_decompose_algebra(H2)
    for _ in range(50):
        A = 0.3 * rng.normal(size=(4, 4))
        X = symplectic_form(2) @ (A + A.T)  # J S with S symmetric lies in sp(4, R)
        g = expm(X)
        assert is_real_symplectic(g)
        fac = factorize_pkp(g, frame)
        assert np.linalg.norm(fac.product() - g) < 1e-12
        assert frame.residual_m11(nilpotent_log(fac.p_plus)) < 1e-12
        assert frame.residual_1m1(nilpotent_log(fac.p_minus)) < 1e-12
        again = factorize_pkp(fac.product(), frame)
        assert np.abs(again.p_plus - fac.p_plus).max() < 1e-10
        assert np.abs(again.k_c - fac.k_c).max() < 1e-10


def test_factorize_outside_big_cell():
    frame = hodge_decompose_algebra(H)
    # an element of SL(2, C) whose Cayley conjugate (0 1; -1 0) has a zero pivot block
    W = cayley_matrix(1)
    g = W @ np.array([[0, 1], [-1, 0]]) @ W.conj().T
    with pytest.raises(NotInBigCell):
        factorize_pkp(g, frame)


def test_group_act_undefined():
    g = np.array([[0.0, 1.0], [-1.0, 0.0]])

    class Fake:
        spec = H
        matrix = np.zeros((1, 1), dtype=complex)

    with pytest.raises(ActionUndefined):
        group_act(g, Fake())


@pytest.mark.parametrize("spec", [H, H2], ids=lambda s: s.label)
def test_circle_equivariance(spec, rng):
    frame = hodge_decompose_algebra(spec)
    for p in random_points(spec, 10, rng):
        theta = rng.uniform(0, 2 * np.pi)
        k = circle_action(spec, theta)
        moved = hc_embed(group_act(k, p))
        X = frame.element(hc_embed(p).coords)
        expected = frame.coordinates(adjoint(k, X))
        assert np.abs(moved.coords - expected).max() < 1e-10
        if spec.genus == 1:
            assert abs(moved.coord - np.exp(2j * theta) * hc_embed(p).coord) < 1e-10


def test_zeta_conjugation_equivariance(rng):
    frame = hodge_decompose_algebra(H2)
    for p in random_points(H2, 10, rng):
        g = point_to_group(p)
        k = random_k_element(H2, rng)
        lhs = factorize_pkp(k @ g @ k.T, frame).p_plus
        rhs = k @ factorize_pkp(g, frame).p_plus @ k.T
        assert np.abs(lhs - rhs).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 50), st.floats(-3, 3), st.floats(-3, 3))
def test_action_preserves_domain(x, y, a, theta):
    p = UnboundedPoint(H, complex(x, y))
    g = point_to_group(UnboundedPoint(H, complex(a, 1.0))) @ circle_action(H, theta)
    q = group_act(g, p)
    assert contains(H, q.value, "unbounded")
    assert contains(H, hc_embed(q).coord)
