"""Rejection-free sampling for path planning in changed environments.

A kernel density estimate of historical states, eroded against the new free
space by the kernel support radius, yields a sampler whose every draw is
collision-free. ``planner.plan`` runs RRT* on top of it and ``bench`` compares
it with uniform rejection sampling.
"""
from ._kernels import available_backends, current_backend, use_backend
from .errors import (BenchAborted, ContractViolation, EmptyDataset, EmptyFreeSpace,
                     GuaranteeViolation, PlanningError, RfplanError, UnsupportedKernel)
from .geometry import Workspace, area_fraction, contains, erode, free_space, segment_free, shrink
from .kde import KdeModel, evaluate, kde, paper_radius, support_radius, truncate, weights
from .pipeline import PreparedSampler, Scenario, prepare, validate
from .planner import PlannerParams, PlanResult, Termination, path_cost, plan
from .sampler import RandomStream, SamplerSpec, generate

__version__ = "0.1.0"
