"""Built-in synthetic scenarios.

``toy``
    Two bivariate normal clusters (means (0, 0) and (20, 10), covariances
    diag(10, 20) and diag(45, 35)), 1500 points, pentagon boundary, H = 2I,
    Epanechnikov kernel.
``drone``
    3D inspection analog: a tank with a windowed bulkhead, a new obstacle
    blocking part of the historical routes, safety distance 0.3, H = 0.18I.
``channel``
    2D confined-water analog: an S-shaped channel filling about a quarter
    of its bounding box, ship tracks along the fairway, box kernel.
"""
from pathlib import Path

import numpy as np
import shapely

from .files import ScenarioFile, write_points
from .geometry import free_space
from .sampler import RandomStream

TOY_POLYGON = [(-10.0, -10.0), (22.0, 3.0), (30.0, 27.0), (-12.0, 30.0), (-20.0, 0.0)]
TOY_MEANS = (np.array([0.0, 0.0]), np.array([20.0, 10.0]))
TOY_COVS = (np.diag([10.0, 20.0]), np.diag([45.0, 35.0]))
TOY_START = [-3.0, -4.0]
TOY_GOAL = [26.0, 16.0]


def toy_data(seed, split=(750, 750)):
    gen = RandomStream(seed).generator
    parts = []
    for mean, cov, n in zip(TOY_MEANS, TOY_COVS, split):
        z = gen.standard_normal((n, 2))
        parts.append(mean + z * np.sqrt(np.diag(cov)))
    return np.vstack(parts)


def toy_scenario(data_file="toy_data.csv"):
    return ScenarioFile(dimension=2, boundary=[list(v) for v in TOY_POLYGON], data_file=data_file,
                        kernel="epanechnikov", H=[2.0, 0.0, 0.0, 2.0],
                        start=list(TOY_START), goal=list(TOY_GOAL))


def toy_1d(seed, n=(700, 300)):
    """1D two-cluster data with unequal masses and spreads."""
    gen = RandomStream(seed).generator
    return np.concatenate([gen.normal(0.0, 1.0, n[0]), gen.normal(6.0, 1.5, n[1])])


DRONE_BOUNDS = [0.0, 0.0, 0.0, 24.0, 16.0, 16.0]
# bulkhead at x in [10, 11] with a window y, z in [5, 11]
DRONE_WALL = [
    [10.0, 0.0, 0.0, 11.0, 5.0, 16.0],
    [10.0, 11.0, 0.0, 11.0, 16.0, 16.0],
    [10.0, 5.0, 0.0, 11.0, 11.0, 5.0],
    [10.0, 5.0, 11.0, 11.0, 11.0, 16.0],
]
DRONE_NEW_OBSTACLE = [16.0, 0.0, 0.0, 18.0, 6.5, 16.0]
DRONE_START = [3.0, 8.0, 8.0]
DRONE_GOAL = [21.0, 9.0, 8.0]


def drone_data(seed, n=1200):
    """Noisy historical inspection passes through the bulkhead window."""
    gen = RandomStream(seed).generator
    w0 = free_space(DRONE_BOUNDS, DRONE_WALL, epoch="free0")
    knots = np.array([[2.0, 8.0, 8.0], [8.0, 8.0, 8.0], [13.0, 8.0, 8.0], [22.0, 6.0, 8.0]])
    pts = []
    while sum(len(p) for p in pts) < n:
        s = gen.random(256)
        seg = np.minimum((s * (len(knots) - 1)).astype(int), len(knots) - 2)
        frac = s * (len(knots) - 1) - seg
        path = knots[seg] + (knots[seg + 1] - knots[seg]) * frac[:, None]
        cand = path + gen.standard_normal((256, 3)) * np.array([0.4, 0.9, 0.9])
        pts.append(cand[w0.contains_many(cand)])
    return np.vstack(pts)[:n]


def drone_scenario(data_file="drone_data.csv"):
    return ScenarioFile(dimension=3, boundary=list(DRONE_BOUNDS),
                        obstacles=[list(b) for b in DRONE_WALL] + [list(DRONE_NEW_OBSTACLE)],
                        safety_distance=0.3, data_file=data_file, kernel="epanechnikov",
                        H=[0.18, 0, 0, 0, 0.18, 0, 0, 0, 0.18],
                        start=list(DRONE_START), goal=list(DRONE_GOAL))


CHANNEL_CENTERLINE = [(0.0, 6.0), (30.0, 6.0), (50.0, 34.0), (80.0, 34.0)]
CHANNEL_HALF_WIDTH = 4.5


def channel_polygon():
    line = shapely.LineString(CHANNEL_CENTERLINE)
    poly = line.buffer(CHANNEL_HALF_WIDTH, cap_style="flat", join_style="mitre")
    return [list(map(float, c)) for c in poly.exterior.coords[:-1]]


def channel_data(seed, n=2000):
    """Ship positions along the fairway with lateral spread."""
    gen = RandomStream(seed).generator
    line = shapely.LineString(CHANNEL_CENTERLINE)
    w = free_space(channel_polygon(), epoch="free0")
    pts = []
    while sum(len(p) for p in pts) < n:
        along = shapely.line_interpolate_point(line, gen.random(512) * line.length)
        base = shapely.get_coordinates(along)
        cand = base + gen.standard_normal((512, 2)) * 1.3
        pts.append(cand[w.contains_many(cand)])
    return np.vstack(pts)[:n]


def channel_scenario(data_file="channel_data.csv"):
    return ScenarioFile(dimension=2, boundary=channel_polygon(), safety_distance=0.5,
                        data_file=data_file, kernel="box", H=[1.0, 0.0, 0.0, 1.0],
                        start=[3.0, 6.0], goal=[77.0, 34.0])


BUILTIN = {
    "toy": (toy_data, toy_scenario),
    "drone": (drone_data, drone_scenario),
    "channel": (channel_data, channel_scenario),
}


def write_builtin(kind, seed, out_dir, **data_kwargs):
    """Write ``<kind>_scenario.json`` and ``<kind>_data.csv`` into ``out_dir``."""
    make_data, make_scenario = BUILTIN[kind]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data_path = out / f"{kind}_data.csv"
    scen_path = out / f"{kind}_scenario.json"
    write_points(data_path, make_data(seed, **data_kwargs))
    make_scenario(data_path.name).save(scen_path)
    return scen_path, data_path


def builtin(kind, seed=1, radius_choice=None, **data_kwargs):
    """In-memory ``(ScenarioFile, Scenario)`` for a built-in scenario."""
    make_data, make_scenario = BUILTIN[kind]
    sf = make_scenario()
    return sf, sf.to_scenario(make_data(seed, **data_kwargs), radius_choice=radius_choice)
