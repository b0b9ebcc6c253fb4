"""Multivariate kernel density estimation with spherically symmetric kernels.

The estimate at ``x`` over source points ``x_i`` with bandwidth matrix ``H`` is

    f(x) = 1/(n * rho) * sum_i |H|^(-1/2) K(H^(-1/2) (x - x_i))

where ``rho`` is 1 for an ordinary model and the renormalisation constant for
a model truncated to an eroded free set (which also reports 0 outside it).

Finite-support kernels (box, Epanechnikov) are supported on the closed unit
ball and evaluated by exact summation over the data within one support radius
of the query, found with a k-d tree. The Gaussian kernel is only available for
density evaluation.
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from .errors import ContractViolation, EmptyDataset, UnsupportedKernel

KERNELS = ("box", "epanechnikov", "gaussian")
_CHUNK = 1 << 16


def unit_ball_volume(p):
    return math.pi ** (p / 2) / math.gamma(p / 2 + 1)


@dataclass(frozen=True)
class Kernel:
    kind: str
    dimension: int

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ContractViolation(f"kernel must be one of {KERNELS}, got {self.kind!r}")
        if self.dimension < 1:
            raise ContractViolation("kernel dimension must be >= 1")

    @property
    def finite_support(self):
        return self.kind != "gaussian"

    def require_finite_support(self):
        if not self.finite_support:
            raise UnsupportedKernel(
                "the gaussian kernel has unbounded support; rejection-free sampling "
                "needs a box or epanechnikov kernel")

    @property
    def peak(self):
        return float(self.profile(np.zeros(1))[0])

    def profile(self, r2):
        """Kernel value as a function of the squared norm ``r2 = |u|^2``."""
        p = self.dimension
        r2 = np.asarray(r2, dtype=float)
        if self.kind == "box":
            return np.where(r2 <= 1.0, 1.0 / unit_ball_volume(p), 0.0)
        if self.kind == "epanechnikov":
            c = (p + 2) / (2 * unit_ball_volume(p))
            return np.where(r2 <= 1.0, c * (1.0 - r2), 0.0)
        return np.exp(-0.5 * r2) / (2 * math.pi) ** (p / 2)

    def second_moment(self):
        """mu_2(K) = int u_1^2 K(u) du, by radial quadrature."""
        p = self.dimension
        upper = 1.0 if self.finite_support else np.inf
        radial, _ = integrate.quad(lambda r: r ** (p + 1) * float(self.profile(r * r)), 0.0, upper)
        return unit_ball_volume(p) * radial


@dataclass(frozen=True, eq=False)
class Bandwidth:
    """Symmetric positive definite bandwidth matrix with cached square roots."""

    H: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        if H.ndim != 2 or H.shape[0] != H.shape[1] or not np.all(np.isfinite(H)):
            raise ContractViolation("H must be a finite square matrix")
        scale = np.max(np.abs(H)) or 1.0
        if np.max(np.abs(H - H.T)) > 1e-12 * scale:
            raise ContractViolation("H must be symmetric")
        H = (H + H.T) / 2
        vals, vecs = np.linalg.eigh(H)
        if not np.all(vals > 0):
            raise ContractViolation(f"H must be positive definite (eigenvalues {vals.tolist()})")
        sqrt = (vecs * np.sqrt(vals)) @ vecs.T
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "sqrt", (sqrt + sqrt.T) / 2)
        inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.T
        object.__setattr__(self, "inv_sqrt", (inv_sqrt + inv_sqrt.T) / 2)
        object.__setattr__(self, "det_inv_sqrt", float(np.prod(vals) ** -0.5))

    @classmethod
    def scaled_identity(cls, value, dimension):
        return cls(value * np.eye(dimension))

    @property
    def dimension(self):
        return self.H.shape[0]


class KdeModel:
    """A kernel density estimate, optionally truncated to a region and renormalised.

    ``source`` holds the points summed in the estimate; ``data`` holds the
    points that sampling draws from. They coincide for an ordinary model.
    After ``truncate`` the sum still runs over the full historical set while
    ``data`` is reduced to the points inside the region.
    """

    def __init__(self, data, kernel, bandwidth, *, source=None, region=None,
                 normalization=1.0, normalization_se=0.0):
        data = np.ascontiguousarray(np.asarray(data, dtype=float))
        if data.ndim == 1:
            data = data[:, None]
        if len(data) < 1:
            raise EmptyDataset("a KDE needs at least one data point")
        if not np.all(np.isfinite(data)):
            raise ContractViolation("data points must be finite")
        if isinstance(kernel, str):
            kernel = Kernel(kernel, data.shape[1])
        if not isinstance(bandwidth, Bandwidth):
            bandwidth = Bandwidth(bandwidth)
        if kernel.dimension != data.shape[1] or bandwidth.dimension != data.shape[1]:
            raise ContractViolation("kernel, bandwidth and data dimensions differ")
        if not 0 < normalization <= 1 + 1e-9:
            raise ContractViolation(f"normalization must lie in (0, 1], got {normalization}")
        self.data = data
        self.source = data if source is None else np.ascontiguousarray(source, dtype=float)
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.region = region
        self.normalization = float(normalization)
        self.normalization_se = float(normalization_se)

    def __repr__(self):
        return (f"KdeModel(n={len(self.source)}, sampled={len(self.data)}, "
                f"kernel={self.kernel.kind!r}, rho={self.normalization:.6g})")

    @property
    def dimension(self):
        return self.data.shape[1]

    @property
    def truncated(self):
        return self.region is not None

    @cached_property
    def _tree(self):
        return cKDTree(self.source)

    def _check(self, pts):
        pts = np.ascontiguousarray(np.asarray(pts, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise ContractViolation(f"expected points of dimension {self.dimension}")
        if not np.all(np.isfinite(pts)):
            raise ContractViolation("query points must be finite")
        return pts

    def raw_density(self, pts):
        """Untruncated, unnormalised estimate over ``source`` at each row of ``pts``."""
        pts = self._check(pts)
        out = np.empty(len(pts))
        bw = self.bandwidth
        if self.kernel.finite_support:
            radius = support_radius(self) * (1 + 1e-9)
            for lo in range(0, len(pts), _CHUNK):
                q = pts[lo:lo + _CHUNK]
                pairs = cKDTree(q).sparse_distance_matrix(self._tree, radius, output_type="ndarray")
                u = (q[pairs["i"]] - self.source[pairs["j"]]) @ bw.inv_sqrt
                vals = self.kernel.profile(np.einsum("ij,ij->i", u, u))
                out[lo:lo + _CHUNK] = np.bincount(pairs["i"], weights=vals, minlength=len(q))
        else:
            step = max(1, _CHUNK // len(self.source))
            for lo in range(0, len(pts), step):
                diff = pts[lo:lo + step, None, :] - self.source[None, :, :]
                u = diff @ bw.inv_sqrt
                out[lo:lo + step] = self.kernel.profile(np.einsum("mnk,mnk->mn", u, u)).sum(axis=1)
        return out * (bw.det_inv_sqrt / len(self.source))

    def density(self, pts):
        vals = self.raw_density(pts)
        if self.region is not None:
            vals = np.where(self.region.contains_many(pts), vals, 0.0)
        return vals / self.normalization


def kde(data, kernel="epanechnikov", H=None):
    """Convenience constructor: ``kde(X, "box", 25 * np.eye(2))``."""
    data = np.asarray(data, dtype=float)
    p = 1 if data.ndim == 1 else data.shape[1]
    if H is None:
        raise ContractViolation("a bandwidth matrix H is required")
    H = np.asarray(H, dtype=float)
    if H.ndim == 0:
        H = H * np.eye(p)
    return KdeModel(data, kernel, Bandwidth(H))


def evaluate(m, x):
    """Density at a point ``x`` (returns a float) or at each row of an array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and m.dimension > 1 or x.ndim == 0:
        if x.size != m.dimension:
            raise ContractViolation(f"point has dimension {x.size}, model has {m.dimension}")
        return float(m.density(x.reshape(1, -1))[0])
    if x.ndim == 1:
        x = x[:, None]
    return m.density(x)


def support_radius(m):
    """Largest |H^(1/2) u| over the unit ball: sqrt of the largest eigenvalue of H."""
    m.kernel.require_finite_support()
    return float(math.sqrt(m.bandwidth.eigenvalues.max()))


def paper_radius(m, q=2):
    """The conservative radius ``|H^(1/2)|_q / mu_2(K)``.

    Never smaller than ``support_radius`` for the box and Epanechnikov kernels,
    since ``mu_2 <= 1`` and every induced norm bounds the spectral radius.
    """
    m.kernel.require_finite_support()
    order = {1: 1, 2: 2, "inf": np.inf, np.inf: np.inf}.get(q)
    if order is None:
        raise ContractViolation(f"norm order must be 1, 2 or inf, got {q!r}")
    return float(np.linalg.norm(m.bandwidth.sqrt, order) / m.kernel.second_moment())


def weights(m):
    """Density of the model at each of its sampled data points."""
    return m.density(m.data)


def truncate(m, w2, mc_budget=10**5, seed=0):
    """Restrict sampling to points inside ``w2`` and renormalise the density.

    The density is zeroed outside ``w2``; its remaining mass ``rho`` is a
    Monte Carlo estimate over the bounding box of ``w2`` with ``mc_budget``
    uniform points. The estimate's standard error is kept on the model.
    """
    if w2.epoch != "free2":
        raise ContractViolation(f"truncate expects a free2 workspace, got {w2.epoch}")
    if mc_budget < 10**4:
        raise ContractViolation("mc_budget must be at least 1e4")
    if w2.dimension != m.dimension:
        raise ContractViolation("workspace and model dimensions differ")
    keep = w2.contains_many(m.data)
    if not keep.any():
        raise EmptyDataset(n=len(m.data), kept=0)
    rho, se = mc_mass(m, w2, mc_budget, seed)
    if rho <= 0:
        raise EmptyDataset("truncated density has no mass", rho=rho)
    return KdeModel(m.data[keep], m.kernel, m.bandwidth, source=m.source, region=w2,
                    normalization=min(rho, 1.0), normalization_se=se)


def refit(m, w2):
    """Fit a fresh, untruncated KDE on the points of ``m`` that lie inside ``w2``."""
    keep = w2.contains_many(m.data)
    if not keep.any():
        raise EmptyDataset(n=len(m.data), kept=0)
    return KdeModel(m.data[keep], m.kernel, m.bandwidth)


def mc_mass(m, region, n, seed=0):
    """Monte Carlo mass of ``m``'s raw density inside ``region`` with its standard error."""
    lo, hi = region.bbox
    volume = float(np.prod(hi - lo))
    rng = np.random.Generator(np.random.Philox(seed))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n:
        k = min(n - done, _CHUNK * 4)
        pts = lo + (hi - lo) * rng.random((k, m.dimension))
        vals = np.where(region.contains_many(pts), m.raw_density(pts), 0.0) * volume
        total += float(vals.sum())
        total_sq += float(np.dot(vals, vals))
        done += k
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)
