import math

import numpy as np
import pytest
from scipy import integrate

from rfplan.errors import ContractViolation, EmptyDataset, UnsupportedKernel
from rfplan.geometry import free_space, shrink
from rfplan.kde import (Bandwidth, Kernel, KdeModel, evaluate, kde, mc_mass, paper_radius, refit,
                        support_radius, truncate, weights)


def direct_sum(data, kernel, H, x):
    """Naive oracle: loop over points with an explicit inverse square root."""
    vals, vecs = np.linalg.eigh(H)
    inv_sqrt = vecs @ np.diag(vals ** -0.5) @ vecs.T
    k = Kernel(kernel, data.shape[1])
    total = 0.0
    for xi in data:
        u = inv_sqrt @ (x - xi)
        total += float(k.profile(u @ u))
    return total / (len(data) * math.sqrt(np.linalg.det(H)))


@pytest.mark.parametrize("kind,p", [("box", 1), ("box", 2), ("box", 3),
                                    ("epanechnikov", 1), ("epanechnikov", 2),
                                    ("epanechnikov", 3), ("gaussian", 2)])
def test_kernel_integrates_to_one(kind, p):
    k = Kernel(kind, p)
    upper = np.inf if kind == "gaussian" else 1.0
    surface = p * math.pi ** (p / 2) / math.gamma(p / 2 + 1)
    mass, _ = integrate.quad(lambda r: surface * r ** (p - 1) * float(k.profile(r * r)), 0, upper)
    assert mass == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind,p,mu2", [("epanechnikov", 1, 1 / 5), ("box", 1, 1 / 3),
                                        ("epanechnikov", 2, 1 / 6), ("box", 2, 1 / 4),
                                        ("epanechnikov", 3, 1 / 7), ("gaussian", 2, 1.0)])
def test_second_moment(kind, p, mu2):
    assert Kernel(kind, p).second_moment() == pytest.approx(mu2, rel=1e-9)


def test_box_single_point():
    m = kde([[0.0, 0.0]], "box", 4 * np.eye(2))
    assert evaluate(m, (0, 0)) == pytest.approx(1 / (4 * math.pi))
    assert evaluate(m, (0, 0)) == pytest.approx(0.07957747154594767)


def test_epanechnikov_outside_support():
    m = kde([[0.0, 0.0]], "epanechnikov", np.eye(2))
    assert evaluate(m, (1.0001, 0)) == 0.0
    assert evaluate(m, (0.6, 0.8)) == 0.0
    assert evaluate(m, (0.5, 0)) > 0


def test_evaluate_dimension_mismatch():
    m = kde([[0.0, 0.0]], "box", np.eye(2))
    with pytest.raises(ContractViolation):
        evaluate(m, (1, 2, 3))


def test_evaluate_matches_direct_sum():
    rng = np.random.default_rng(5)
    data = rng.normal(size=(60, 2)) * [2, 1]
    H = np.array([[1.2, 0.4], [0.4, 0.7]])
    for kind in ("box", "epanechnikov", "gaussian"):
        m = kde(data, kind, H)
        q = rng.normal(size=(40, 2)) * 2
        got = m.density(q)
        want = np.array([direct_sum(data, kind, H, x) for x in q])
        assert np.allclose(got, want, rtol=1e-12, atol=1e-15)


def test_evaluate_1d_batch():
    m = kde(np.array([0.0, 1.0]), "epanechnikov", 1.0)
    got = evaluate(m, np.array([0.0, 0.5, 3.0]))
    assert got.shape == (3,)
    assert got[2] == 0.0
    assert got[1] == pytest.approx(0.75 * 0.75)


def test_toy_integral(toy):
    # Riemann sum over a 1000 x 1000 grid covering every support
    m = toy[1].base_model()
    lo = m.data.min(axis=0) - 1.5
    hi = m.data.max(axis=0) + 1.5
    k = 1000
    axes = [lo[d] + (np.arange(k) + 0.5) * (hi[d] - lo[d]) / k for d in range(2)]
    g = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2)
    total = m.density(g).sum() * np.prod((hi - lo) / k)
    assert abs(total - 1.0) < 1e-3


def test_3d_integral():
    rng = np.random.default_rng(2)
    data = rng.normal(size=(50, 3))
    m = kde(data, "epanechnikov", 0.3 * np.eye(3))
    lo, hi = data.min(0) - 0.6, data.max(0) + 0.6
    k = 90
    axes = [lo[d] + (np.arange(k) + 0.5) * (hi[d] - lo[d]) / k for d in range(3)]
    g = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    total = m.density(g).sum() * np.prod((hi - lo) / k)
    assert abs(total - 1.0) < 1e-2


@pytest.mark.parametrize("H,r", [(4 * np.eye(2), 2.0), (np.diag([1.0, 9.0]), 3.0),
                                 (2 * np.eye(2), math.sqrt(2))])
def test_support_radius(H, r):
    m = kde([[0.0, 0.0]], "epanechnikov", H)
    assert support_radius(m) == pytest.approx(r, rel=1e-14)
    assert support_radius(m) == pytest.approx(math.sqrt(np.linalg.eigvalsh(H).max()))


def test_support_radius_gaussian_rejected():
    m = kde([[0.0, 0.0]], "gaussian", np.eye(2))
    with pytest.raises(UnsupportedKernel):
        support_radius(m)
    with pytest.raises(UnsupportedKernel):
        paper_radius(m)


@pytest.mark.parametrize("kind,factor", [("epanechnikov", 5.0), ("box", 3.0)])
def test_paper_radius_1d(kind, factor):
    h = 0.7
    m = kde(np.array([0.0]), kind, h * h)
    assert paper_radius(m) == pytest.approx(factor * h, rel=1e-9)


def test_paper_radius_vanishes():
    radii = [paper_radius(kde([[0.0, 0.0]], "box", e * np.eye(2))) for e in (1e-4, 1e-8, 1e-12)]
    assert radii[-1] < 1e-5 and radii[0] > radii[1] > radii[2]


def test_paper_radius_orders():
    m = kde([[0.0, 0.0]], "epanechnikov", np.array([[2.0, 0.5], [0.5, 1.0]]))
    s = m.bandwidth.sqrt
    assert paper_radius(m, 1) == pytest.approx(np.abs(s).sum(0).max() * 6)
    assert paper_radius(m, "inf") == pytest.approx(np.abs(s).sum(1).max() * 6)
    with pytest.raises(ContractViolation):
        paper_radius(m, 3)


def test_weights_single_point():
    for kind in ("box", "epanechnikov"):
        H = np.array([[2.0, 0.3], [0.3, 1.0]])
        m = kde([[1.0, 2.0]], kind, H)
        want = Kernel(kind, 2).peak / math.sqrt(np.linalg.det(H))
        assert weights(m) == pytest.approx([want])


def test_weights_isolated_points_equal():
    m = kde([[0.0, 0.0], [5.0, 0.0]], "epanechnikov", np.eye(2))
    w = weights(m)
    assert w[0] == w[1] > 0


def test_weights_collinear():
    # direct-sum oracle values for points at 0, 0.5, 1 with c_2 = 2 / pi
    m = kde([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]], "epanechnikov", np.eye(2))
    w = weights(m)
    assert np.allclose(w, [0.3713615338810891, 0.5305164769729844, 0.3713615338810891], rtol=1e-12)
    assert w[1] > w[0] and w[1] > w[2]


def test_bandwidth_validation():
    with pytest.raises(ContractViolation):
        Bandwidth(np.array([[1.0, 0.2], [0.1, 1.0]]))
    with pytest.raises(ContractViolation):
        Bandwidth(np.diag([1.0, -1.0]))
    b = Bandwidth(np.array([[3.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(b.sqrt @ b.sqrt, b.H, rtol=1e-10)
    assert np.allclose(b.inv_sqrt @ b.H @ b.inv_sqrt, np.eye(2), atol=1e-10)
    assert b.det_inv_sqrt == pytest.approx(5 ** -0.5)


def test_truncate_no_effect():
    data = np.array([[5.0, 5.0], [6.0, 5.0]])
    w2 = shrink(free_space([(0, 0), (10, 0), (10, 10), (0, 10)]), 1.0)
    t = truncate(kde(data, "epanechnikov", np.eye(2)), w2, 10**5, seed=1)
    assert len(t.data) == 2
    assert abs(t.normalization - 1.0) <= 3 * t.normalization_se + 1e-12


def test_truncate_half_mass():
    # w2 keeps the point at (2, 5) and excludes the one at (18, 5) with its whole support
    data = np.array([[2.0, 5.0], [18.0, 5.0]])
    w1 = free_space([(0, 0), (20, 0), (20, 10), (0, 10)], [[(10, -1), (20, -1), (20, 11), (10, 11)]])
    w2 = shrink(w1, 1.0)
    m = truncate(kde(data, "box", np.eye(2)), w2, 10**5, seed=4)
    assert len(m.data) == 1 and np.array_equal(m.data[0], [2.0, 5.0])
    assert abs(m.normalization - 0.5) <= 3 * m.normalization_se
    assert evaluate(m, (18, 5)) == 0.0
    assert evaluate(m, (2, 5)) == pytest.approx(1 / (2 * math.pi * m.normalization))


def test_truncate_toy(toy, toy_prepared):
    m = toy_prepared.model
    assert 0 < m.normalization < 1
    # exact count from the distance-to-boundary oracle on the seed-1 data
    assert len(m.data) == 1091 < 1500
    assert len(m.source) == 1500


def test_truncate_errors():
    w2 = shrink(free_space([(0, 0), (10, 0), (10, 10), (0, 10)]), 1.0)
    with pytest.raises(EmptyDataset):
        truncate(kde([[0.5, 0.5]], "box", 0.1 * np.eye(2)), w2, 10**4)
    with pytest.raises(ContractViolation):
        truncate(kde([[5.0, 5.0]], "box", np.eye(2)), w2, 100)


def test_refit_uses_kept_points():
    w2 = shrink(free_space([(0, 0), (10, 0), (10, 10), (0, 10)]), 1.0)
    m = refit(kde([[0.5, 0.5], [5.0, 5.0]], "box", np.eye(2)), w2)
    assert len(m.source) == len(m.data) == 1 and m.normalization == 1.0


def test_mc_mass_matches_exact():
    w2 = shrink(free_space([(0, 0), (10, 0), (10, 10), (0, 10)]), 1.0)
    # box bump centred on the eroded edge: exactly half the mass survives
    m = kde([[1.0, 5.0]], "box", 0.25 * np.eye(2))
    mass, se = mc_mass(m, w2, 10**5, seed=9)
    assert abs(mass - 0.5) <= 3 * se


def test_duplicate_point_keeps_unit_mass():
    data = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    m = KdeModel(data, "box", np.eye(2))
    lo, hi = np.array([-1.2, -1.2]), np.array([2.2, 1.2])
    k = 600
    axes = [lo[d] + (np.arange(k) + 0.5) * (hi[d] - lo[d]) / k for d in range(2)]
    g = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2)
    assert abs(m.density(g).sum() * np.prod((hi - lo) / k) - 1) < 5e-3
