"""End-to-end construction of a rejection-free sampler for a changed free space.

Given historical states ``X`` recorded in an old free space, the new free set
``free1``, a finite-support kernel and a bandwidth matrix:

1. compute the kernel support radius (or the more conservative formula radius),
2. erode ``free1`` by that radius to obtain ``free2``,
3. keep the historical points inside ``free2``,
4. truncate and renormalise the KDE to ``free2`` (or refit it on the kept points).

Every KDE sample drawn from the kept points then lies in ``free1``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, EmptyDataset, EmptyFreeSpace, GuaranteeViolation
from .geometry import Workspace, shrink
from .kde import KdeModel, Bandwidth, Kernel, paper_radius, refit, support_radius, truncate
from .sampler import RandomStream, SamplerSpec, generate

# MC seed for the normalisation constant; fixed so prepare() is a pure function
NORMALIZATION_SEED = 0x5EED


@dataclass(frozen=True, eq=False)
class Scenario:
    workspace_free1: Workspace
    data: np.ndarray
    kernel: str
    H: np.ndarray
    start: np.ndarray = None
    goal: np.ndarray = None
    safety_distance: float = 0.0
    radius_choice: str = "tight"
    q: object = 2
    truncation: str = "renormalize"
    mc_budget: int = 10**5
    planner: dict = field(default_factory=dict)

    def __post_init__(self):
        w = self.workspace_free1
        data = np.ascontiguousarray(np.asarray(self.data, dtype=float))
        if data.ndim != 2 or data.shape[1] != w.dimension or len(data) == 0:
            raise ContractViolation(f"data must be a non-empty (n, {w.dimension}) array")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float).reshape(w.dimension,
                                                                              w.dimension))
        if self.radius_choice not in ("tight", "paper"):
            raise ContractViolation("radius_choice must be 'tight' or 'paper'")
        if self.truncation not in ("renormalize", "refit"):
            raise ContractViolation("truncation must be 'renormalize' or 'refit'")
        for name in ("start", "goal"):
            pt = getattr(self, name)
            if pt is None:
                continue
            pt = np.asarray(pt, dtype=float)
            if not w.contains(pt):
                raise ContractViolation(f"{name} {pt.tolist()} is not in the free1 workspace")
            object.__setattr__(self, name, pt)

    @property
    def dimension(self):
        return self.workspace_free1.dimension

    def base_model(self):
        return KdeModel(self.data, Kernel(self.kernel, self.dimension), Bandwidth(self.H))


@dataclass(frozen=True, eq=False)
class PreparedSampler:
    w1: Workspace
    w2: Workspace
    xbar: np.ndarray
    model: KdeModel
    rho_radius: float
    dropped_count: int
    base_model: KdeModel

    @property
    def bbox(self):
        return self.w1.bbox

    def spec(self, mode, lam=None, kde_mode="kde_uniform"):
        """A SamplerSpec over this sampler; baseline draws use the free1 bounding box."""
        needs_model = mode != "baseline_uniform"
        return SamplerSpec(mode, model=self.model if needs_model else None, bbox=self.bbox,
                           lam=lam, kde_mode=kde_mode)


def erosion_radius(model, choice="tight", q=2):
    if choice == "tight":
        return support_radius(model)
    if choice == "paper":
        return paper_radius(model, q)
    raise ContractViolation(f"unknown radius choice {choice!r}")


def prepare(s):
    """Build the eroded free set, surviving data and truncated model for ``s``.

    Raises ``EmptyFreeSpace`` when erosion leaves nothing and ``EmptyDataset``
    when no historical state survives; both carry the radius and sizes.
    """
    base = s.base_model()
    rho = erosion_radius(base, s.radius_choice, s.q)
    try:
        w2 = shrink(s.workspace_free1, rho)
    except EmptyFreeSpace as exc:
        raise EmptyFreeSpace(rho, f"{exc} (free1 volume {s.workspace_free1.volume:.6g})") from None
    keep = w2.contains_many(s.data)
    if not keep.any():
        raise EmptyDataset(rho=rho, n=len(s.data), free1_volume=s.workspace_free1.volume,
                           free2_volume=w2.volume)
    if s.truncation == "refit":
        model = refit(base, w2)
    else:
        model = truncate(base, w2, s.mc_budget, NORMALIZATION_SEED)
    return PreparedSampler(s.workspace_free1, w2, s.data[keep], model, rho,
                           int(len(s.data) - keep.sum()), base)


def validate(p, n_probe, rng, strict=True, modes=("kde_biased", "kde_uniform")):
    """Sample ``n_probe`` states per KDE mode and check every one against free1.

    Returns a report with the violation count per mode and the fraction of
    occupied cells of a 32-per-axis grid over the free1 bounding box. With
    ``strict`` any violation raises ``GuaranteeViolation``.
    """
    if n_probe < 1:
        raise ContractViolation("n_probe must be at least 1")
    stream = rng if isinstance(rng, RandomStream) else RandomStream(rng)
    lo, hi = p.bbox
    report = {"n_probe": int(n_probe), "violations": {}, "occupancy": {}}
    for k, mode in enumerate(modes):
        batch = generate(p.spec(mode), n_probe, stream.child(k))
        bad = ~p.w1.contains_many(batch.points)
        count = int(bad.sum())
        report["violations"][mode] = count
        if count and strict:
            raise GuaranteeViolation(batch.points[np.argmax(bad)], count)
        cells = np.clip(((batch.points - lo) / (hi - lo) * 32).astype(int), 0, 31)
        flat = np.ravel_multi_index(cells.T, (32,) * p.w1.dimension)
        report["occupancy"][mode] = len(np.unique(flat)) / 32 ** p.w1.dimension
    report["total_violations"] = sum(report["violations"].values())
    return report
