import numpy as np
import pytest
from hypothesis import given, settings
from numpy.testing import assert_allclose

from lpstat import ContingencyTable, JointDist, lp_comoments
from lpstat.copula import (
    canonical_svd,
    copula_grid,
    copula_slice,
    fit_canonical_copula,
    fit_exponential_copula,
    fit_l2_copula,
    two_by_two_identities,
)

from conftest import joint_tables


def full_comoments(P):
    j = JointDist.from_probabilities(P)
    return lp_comoments(j, m=(j.x.k - 1, j.y.k - 1))


def test_fisher_l2_leading_terms(fisher):
    model = fit_l2_copula(lp_comoments(fisher), "threshold")
    for (j, k), v in {(0, 0): 0.423, (1, 1): 0.157, (1, 0): 0.115}.items():
        assert model.selected[j, k]
        assert abs(model.coef[j, k]) == pytest.approx(v, abs=0.005)


def test_empty_selection_is_independence(fisher):
    model = fit_l2_copula(lp_comoments(fisher), "none")
    assert_allclose(model.grid(np.linspace(0, 1, 5), np.linspace(0, 1, 7)), 1.0)


@given(joint_tables(max_i=6, max_j=6))
@settings(max_examples=60, deadline=None)
def test_full_l2_reproduces_cell_ratios(P):
    model = fit_l2_copula(full_comoments(P), "all")
    ratio = P / np.outer(P.sum(1), P.sum(0))
    assert np.max(np.abs(model.cell_density() - ratio)) < 1e-9
    assert model.total_mass() == pytest.approx(1.0, abs=1e-8)


@given(joint_tables(max_i=6, max_j=6))
@settings(max_examples=60, deadline=None)
def test_canonical_equals_l2(P):
    cm = full_comoments(P)
    l2 = fit_l2_copula(cm, "all")
    can = fit_canonical_copula(cm)
    g = np.linspace(0, 1, 23)
    assert np.max(np.abs(l2.grid(g, g) - can.grid(g, g))) < 1e-10
    assert np.all(np.diff(can.singular_values) <= 1e-15)
    px = cm.x_basis.dist.masses
    phi = can.U.T @ cm.x_basis.table
    assert np.max(np.abs((phi * px) @ phi.T - np.eye(phi.shape[0]))) < 1e-9


def test_l2_margins_uniform(fisher):
    cm = full_comoments(fisher.probs)
    model = fit_l2_copula(cm, "all")
    cells = model.cell_density()
    assert_allclose(cells @ cm.y_basis.dist.masses, 1.0, atol=1e-8)
    assert_allclose(cm.x_basis.dist.masses @ cells, 1.0, atol=1e-8)


def test_fisher_singular_values(fisher):
    model = fit_canonical_copula(lp_comoments(fisher))
    s = model.singular_values
    assert_allclose(s, [0.446, 0.173, 0.029], atol=0.005)
    assert np.sum(s[:2] ** 2) / np.sum(s**2) == pytest.approx(0.996, abs=0.001)


def test_diagonal_svd():
    U, s, V = canonical_svd(np.diag([0.5, -0.3, 0.1]))
    assert_allclose(s, [0.5, 0.3, 0.1])
    assert_allclose(np.abs(U), np.eye(3))
    assert_allclose(U @ np.diag(s) @ V.T, np.diag([0.5, -0.3, 0.1]), atol=1e-15)
    assert np.all(U[0, 0] > 0)


def test_exponential_zero_targets():
    P = np.outer([0.2, 0.3, 0.5], [0.4, 0.6])
    model = fit_exponential_copula(full_comoments(P), "all")
    assert np.max(np.abs(model.coef)) < 1e-10
    assert_allclose(model.cell_density(), 1.0, atol=1e-10)


@given(joint_tables(max_i=4, max_j=4))
@settings(max_examples=40, deadline=None)
def test_exponential_matches_targets(P):
    cm = full_comoments(P)
    model = fit_exponential_copula(cm, "all")
    cells = model.cell_density()
    px, py = cm.x_basis.dist.masses, cm.y_basis.dist.masses
    joint = cells * np.outer(px, py)
    assert joint.sum() == pytest.approx(1.0, abs=1e-8)
    got = cm.x_basis.table @ joint @ cm.y_basis.table.T
    assert_allclose(got, cm.entries, atol=1e-6)
    # saturated: the exponential model reproduces the table itself
    assert_allclose(joint, P, atol=1e-8)


def test_exponential_sample_copula_uses_quadrature():
    rng = np.random.default_rng(0)
    x = rng.normal(size=400)
    y = 0.6 * x + rng.normal(size=400)
    cm = lp_comoments(x, y, m=2)
    model = fit_exponential_copula(cm, "threshold")
    assert model.selected[0, 0]
    u, w = np.polynomial.legendre.leggauss(64)
    u, w = (u + 1) / 2, w / 2
    assert w @ model.grid(u, u) @ w == pytest.approx(1.0, abs=1e-8)


def test_two_by_two_hand_example():
    r = two_by_two_identities([[0.3, 0.2], [0.2, 0.3]])
    assert r.phi == pytest.approx(0.2)
    assert r.lambda1 == pytest.approx(0.2, abs=1e-12)
    assert r.gamma1 == pytest.approx(r.log_odds_term, abs=1e-10)


def test_two_by_two_independent():
    r = two_by_two_identities(np.outer([0.4, 0.6], [0.3, 0.7]))
    assert r.lambda1 == pytest.approx(0, abs=1e-12)
    assert r.gamma1 == pytest.approx(0, abs=1e-10)


def test_two_by_two_genest_zero_cell():
    r = two_by_two_identities([[0.3, 0], [0, 0.7]])
    assert r.lambda1 == pytest.approx(1.0)
    assert r.gamma1 is None and r.gamma_error == "odds ratio undefined"


@given(joint_tables(max_i=2, max_j=2))
@settings(max_examples=100, deadline=None)
def test_two_by_two_identities_random(P):
    if P.shape != (2, 2):
        return
    r = two_by_two_identities(P)
    assert abs(r.lambda1 - r.phi) < 1e-10
    assert abs(r.gamma1 - r.log_odds_term) < 1e-8


def test_slice_independence_and_mass(fisher):
    cm = lp_comoments(fisher)
    flat = fit_l2_copula(cm, "none")
    assert_allclose(copula_slice(flat, 0.3)(np.linspace(0, 1, 9)), 1.0)
    model = fit_l2_copula(cm, "all")
    sl = copula_slice(model, 0.6)
    px = cm.y_basis.dist.masses
    assert px @ sl(cm.y_basis.dist.mid) == pytest.approx(1.0, abs=1e-9)


def test_fisher_canonical_slices(fisher):
    cm = lp_comoments(fisher)
    model = fit_canonical_copula(cm, rank=2)
    expected = np.array([-0.400, -0.441, 0.034, 0.703])
    got = [copula_slice(model, u).canonical_coeffs[0] for u in cm.x_basis.dist.mid]
    assert_allclose(got, expected, atol=0.01)


def test_grid_export_shape(fisher):
    rows = copula_grid(fit_l2_copula(lp_comoments(fisher)))
    assert rows.shape == (101 * 101, 3)
    assert rows[0, 0] == 0 and rows[-1, 1] == 1
