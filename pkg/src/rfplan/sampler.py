"""State generation: baseline uniform draws and rejection-free KDE sampling.

KDE samples are ``x_k + t`` where ``x_k`` is a data point picked either
uniformly (``kde_biased``) or with probability proportional to the reciprocal
of its estimated density (``kde_uniform``), and ``t`` is a draw from the
scaled kernel. With a finite-support kernel ``|t|`` never exceeds the support
radius, which is what makes the sampling rejection-free.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractViolation, EmptyDataset
from .kde import KdeModel, weights

MODES = ("baseline_uniform", "kde_biased", "kde_uniform", "mixed")
DEFAULT_LAMBDA = 0.9


class RandomStream:
    """Seeded Philox-4x64 stream (counter based, platform independent).

    ``key`` selects an independent sub-stream of the same seed, so trial
    arms can share a seed yet never share random numbers.
    """

    def __init__(self, seed, key=()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ContractViolation(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, key={self.key})"

    def child(self, *key):
        return RandomStream(self.seed, self.key + key)


def generator_of(rng):
    """Accept a ``RandomStream``, a numpy ``Generator`` or a bare seed."""
    if isinstance(rng, RandomStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return RandomStream(rng).generator


class AliasTable:
    """Vose's alias method: O(n) construction, O(1) per draw."""

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float)
        if p.ndim != 1 or len(p) == 0 or np.any(p < 0) or not p.sum() > 0:
            raise ContractViolation("probabilities must be a non-empty non-negative vector")
        n = len(p)
        scaled = p * (n / p.sum())
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to round-off
        self.prob = prob
        self.alias = alias

    def __len__(self):
        return len(self.prob)

    def draw(self, gen, size):
        idx = gen.integers(0, len(self.prob), size=size)
        coin = gen.random(size)
        return np.where(coin < self.prob[idx], idx, self.alias[idx])


def reciprocal_probabilities(w):
    """Normalised reciprocals of positive weights: ``(0.2, 0.8) -> (0.8, 0.2)``."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or len(w) == 0 or not np.all(w > 0):
        raise ContractViolation("weights must be a non-empty positive vector")
    inv = 1.0 / w
    return inv / inv.sum()


def selection_probabilities(model):
    """Selection probability of each data point, proportional to 1 / density."""
    return reciprocal_probabilities(weights(model))


def _unit_ball(gen, size, p):
    if p == 1:
        return 2.0 * gen.random((size, 1)) - 1.0
    z = gen.standard_normal((size, p))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * gen.random((size, 1)) ** (1.0 / p)


def draw_kernel_offset(kernel, bandwidth, rng, size=None, rejection_free=True):
    """Draw ``t = H^(1/2) u`` with ``u`` distributed by the kernel on the unit ball.

    Box: ``u`` is uniform in the ball. Epanechnikov: uniform-ball proposals are
    accepted with probability ``1 - |u|^2`` (this is internal to the kernel and
    never rejects against the workspace).
    """
    gen = generator_of(rng)
    p = kernel.dimension
    n = 1 if size is None else int(size)
    if kernel.kind == "gaussian":
        if rejection_free:
            kernel.require_finite_support()
        u = gen.standard_normal((n, p))
    elif kernel.kind == "box":
        u = _unit_ball(gen, n, p)
    else:
        u = np.empty((n, p))
        filled = 0
        while filled < n:
            need = n - filled
            batch = int(need * (p + 2) / 2 * 1.1) + 16
            prop = _unit_ball(gen, batch, p)
            accept = gen.random(batch) < 1.0 - np.einsum("ij,ij->i", prop, prop)
            take = prop[accept][:need]
            u[filled:filled + len(take)] = take
            filled += len(take)
    t = u @ bandwidth.sqrt
    return t[0] if size is None else t


@dataclass(frozen=True, eq=False)
class SamplerSpec:
    """Sampling configuration.

    ``mixed`` draws from the ``kde_mode`` component with probability ``lam``
    and uniformly from ``bbox`` otherwise.
    """

    mode: str
    model: KdeModel = None
    bbox: tuple = None
    lam: float = None
    kde_mode: str = "kde_uniform"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ContractViolation(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode in ("kde_biased", "kde_uniform", "mixed"):
            if self.model is None:
                raise ContractViolation(f"{self.mode} needs a KDE model")
            self.model.kernel.require_finite_support()
        if self.mode in ("baseline_uniform", "mixed"):
            if self.bbox is None:
                raise ContractViolation(f"{self.mode} needs a bounding box")
            lo, hi = (np.asarray(b, dtype=float) for b in self.bbox)
            if lo.shape != hi.shape or not np.all(lo < hi):
                raise ContractViolation("bbox needs min < max on every axis")
            object.__setattr__(self, "bbox", (lo, hi))
        if self.mode == "mixed":
            lam = DEFAULT_LAMBDA if self.lam is None else float(self.lam)
            if not 0 < lam < 1:
                raise ContractViolation(f"lambda must lie strictly in (0, 1), got {lam}")
            object.__setattr__(self, "lam", lam)
            if self.kde_mode not in ("kde_biased", "kde_uniform"):
                raise ContractViolation("kde_mode must be kde_biased or kde_uniform")

    @property
    def dimension(self):
        return self.model.dimension if self.model is not None else len(self.bbox[0])

    @cached_property
    def alias(self):
        return AliasTable(selection_probabilities(self.model))

    @property
    def rejection_free(self):
        return self.mode in ("kde_biased", "kde_uniform")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray
    attempts: int
    mode: str
    from_kde: np.ndarray

    def __len__(self):
        return len(self.points)


def _kde_points(spec, mode, m, gen):
    model = spec.model
    if mode == "kde_biased":
        idx = gen.integers(0, len(model.data), size=m)
    else:
        idx = spec.alias.draw(gen, m)
    return model.data[idx] + draw_kernel_offset(model.kernel, model.bandwidth, gen, m)


def _uniform(bbox, m, gen):
    lo, hi = bbox
    return lo + (hi - lo) * gen.random((m, len(lo)))


def generate(spec, m, rng):
    """Draw ``m`` states according to ``spec``.

    ``baseline_uniform`` draws from the bounding box only; rejection against
    the free space is left to the caller, so ``attempts`` equals ``m`` in every
    mode here.
    """
    m = int(m)
    if m < 1:
        raise ContractViolation("m must be at least 1")
    gen = generator_of(rng)
    if spec.mode in ("kde_biased", "kde_uniform") and len(spec.model.data) == 0:
        raise EmptyDataset()
    if spec.mode == "baseline_uniform":
        pts = _uniform(spec.bbox, m, gen)
        from_kde = np.zeros(m, dtype=bool)
    elif spec.mode == "mixed":
        from_kde = gen.random(m) < spec.lam
        pts = np.empty((m, spec.dimension))
        k = int(from_kde.sum())
        if k:
            pts[from_kde] = _kde_points(spec, spec.kde_mode, k, gen)
        if k < m:
            pts[~from_kde] = _uniform(spec.bbox, m - k, gen)
    else:
        pts = _kde_points(spec, spec.mode, m, gen)
        from_kde = np.ones(m, dtype=bool)
    return SampleBatch(pts, m, spec.mode, from_kde)
