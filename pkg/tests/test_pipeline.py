import math

import numpy as np
import pytest
import shapely

from rfplan.errors import ContractViolation, EmptyDataset, EmptyFreeSpace, GuaranteeViolation
from rfplan.geometry import free_space
from rfplan.kde import KdeModel
from rfplan.pipeline import PreparedSampler, Scenario, prepare, validate
from rfplan.sampler import RandomStream, generate
from rfplan.scenarios import TOY_POLYGON, builtin

from conftest import SQUARE


def test_toy_prepare(toy, toy_prepared):
    s = toy[1]
    p = toy_prepared
    assert p.rho_radius == pytest.approx(math.sqrt(2), rel=1e-15)
    assert p.dropped_count == 409 > 0
    assert p.dropped_count == len(s.data) - len(p.xbar)
    assert p.w2.contains_many(p.xbar).all()
    # exact-distance oracle: inside P and at least rho from its boundary
    poly = shapely.Polygon(TOY_POLYGON)
    d = shapely.distance(poly.exterior, shapely.points(p.xbar))
    assert np.all(d >= p.rho_radius)
    assert shapely.contains_xy(poly, p.xbar[:, 0], p.xbar[:, 1]).all()


def test_interior_data_kept():
    w1 = free_space(SQUARE)
    data = np.random.default_rng(0).uniform(3, 7, size=(100, 2))
    p = prepare(Scenario(w1, data, "epanechnikov", 0.5 * np.eye(2)))
    assert p.dropped_count == 0 and len(p.xbar) == 100


def test_no_change_epoch_is_plain_kde():
    # W1 == W0 and no safety distance: sampling reduces to plain KDE sampling of X
    w1 = free_space(SQUARE)
    data = np.random.default_rng(1).uniform(2, 8, size=(50, 2))
    p = prepare(Scenario(w1, data, "box", 0.25 * np.eye(2)))
    plain = KdeModel(data, "box", 0.25 * np.eye(2))
    assert np.array_equal(p.model.data, plain.data)
    assert abs(p.model.normalization - 1) <= 3 * p.model.normalization_se + 1e-12
    q = np.random.default_rng(2).uniform(1.5, 8.5, size=(200, 2))
    assert np.allclose(p.model.density(q) * p.model.normalization, plain.density(q))


def test_validate_toy(toy_prepared):
    r = validate(toy_prepared, 10**5, RandomStream(1))
    assert r["total_violations"] == 0
    assert set(r["violations"]) == {"kde_biased", "kde_uniform"}
    assert 0 < r["occupancy"]["kde_biased"] <= 1


def test_validate_drone(drone_prepared):
    assert validate(drone_prepared, 10**5, RandomStream(2))["total_violations"] == 0


def test_validate_negative_control(toy, toy_prepared):
    s = toy[1]
    base = s.base_model()
    skipped = PreparedSampler(s.workspace_free1, s.workspace_free1, s.data, base, 0.0, 0, base)
    r = validate(skipped, 10**5, RandomStream(3), strict=False)
    assert r["total_violations"] > 0
    with pytest.raises(GuaranteeViolation) as info:
        validate(skipped, 10**5, RandomStream(3))
    assert not s.workspace_free1.contains(info.value.point)


def test_validate_needs_probe(toy_prepared):
    with pytest.raises(ContractViolation):
        validate(toy_prepared, 0, 1)


def test_w2_inside_w1(toy_prepared):
    p = toy_prepared
    lo, hi = p.w2.bbox
    pts = lo + (hi - lo) * np.random.default_rng(4).random((40_000, 2))
    pts = pts[p.w2.contains_many(pts)][:10_000]
    assert len(pts) == 10_000
    assert p.w1.contains_many(pts).all()


def test_ball_around_w2_points_in_w1(toy_prepared):
    p = toy_prepared
    rng = np.random.default_rng(5)
    lo, hi = p.w2.bbox
    pts = lo + (hi - lo) * rng.random((5000, 2))
    pts = pts[p.w2.contains_many(pts)][:500]
    ang = 2 * np.pi * rng.random(64)
    ring = p.rho_radius * np.column_stack([np.cos(ang), np.sin(ang)])
    probes = (pts[:, None, :] + ring[None, :, :]).reshape(-1, 2)
    assert p.w1.contains_many(probes).all()


def test_larger_bandwidth_keeps_fewer(toy):
    s = toy[1]
    counts = []
    for scale in (0.5, 1.0, 2.0, 4.0):
        H = s.H.copy()
        H[0, 0] *= scale
        counts.append(len(prepare(Scenario(s.workspace_free1, s.data, s.kernel, H)).xbar))
    assert counts == sorted(counts, reverse=True)


def test_prepare_is_pure(toy):
    a, b = prepare(toy[1]), prepare(toy[1])
    assert a.rho_radius == b.rho_radius and a.dropped_count == b.dropped_count
    assert np.array_equal(a.xbar, b.xbar)
    assert a.model.normalization == b.model.normalization
    pa = generate(a.spec("kde_uniform"), 1000, RandomStream(6)).points
    pb = generate(b.spec("kde_uniform"), 1000, RandomStream(6)).points
    assert np.array_equal(pa, pb)


def test_paper_radius_choice(toy):
    p = prepare(Scenario(toy[1].workspace_free1, toy[1].data, "epanechnikov", 2 * np.eye(2),
                         radius_choice="paper"))
    assert p.rho_radius == pytest.approx(6 * math.sqrt(2))
    assert p.dropped_count > 409


def test_refit_option(toy):
    s = toy[1]
    p = prepare(Scenario(s.workspace_free1, s.data, s.kernel, s.H, truncation="refit"))
    assert len(p.model.source) == len(p.xbar) and p.model.normalization == 1.0


def test_empty_free_space_diagnostics():
    w1 = free_space([(0, 0), (4, 0), (4, 4), (0, 4)])
    with pytest.raises(EmptyFreeSpace) as info:
        prepare(Scenario(w1, [[2.0, 2.0]], "box", 4.41 * np.eye(2)))
    assert info.value.rho == pytest.approx(2.1)
    assert "volume" in str(info.value)


def test_empty_dataset_diagnostics():
    w1 = free_space(SQUARE)
    with pytest.raises(EmptyDataset) as info:
        prepare(Scenario(w1, [[0.5, 0.5], [9.5, 9.5]], "box", np.eye(2)))
    assert info.value.diagnostics["n"] == 2 and info.value.diagnostics["rho"] == 1.0


def test_scenario_validation():
    w1 = free_space(SQUARE)
    with pytest.raises(ContractViolation):
        Scenario(w1, [[1.0, 1.0]], "box", np.eye(2), start=(11, 5))
    with pytest.raises(ContractViolation):
        Scenario(w1, np.empty((0, 2)), "box", np.eye(2))
    with pytest.raises(ContractViolation):
        Scenario(w1, [[1.0, 1.0]], "box", np.eye(2), radius_choice="loose")


def test_zero_radius_permitted():
    # a degenerate bandwidth gives rho ~ 0: free2 equals free1 up to the round-off margin
    # (refit, since an MC normalisation cannot resolve a near point mass)
    w1 = free_space(SQUARE)
    p = prepare(Scenario(w1, [[5.0, 5.0]], "box", 1e-30 * np.eye(2), truncation="refit"))
    assert p.rho_radius == pytest.approx(1e-15)
    assert p.w2.volume == pytest.approx(100, rel=1e-9)


def test_builtin_scenarios_prepare():
    for kind in ("drone", "channel"):
        sf, s = builtin(kind, 2)
        p = prepare(s)
        assert len(p.xbar) > 0 and p.w2.epoch == "free2"
