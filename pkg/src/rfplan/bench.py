"""Seeded Monte Carlo harness comparing the baseline (B) and rejection-free (R) samplers.

Trial ``i`` uses seed ``base_seed + i``; the two arms draw from independent
sub-streams of that seed (spawn keys 0 and 1). Records are sorted by trial
and arm before they are returned, so output does not depend on ``jobs``.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import csv
import json
import math
import time

import numpy as np

from .errors import BenchAborted, ContractViolation
from .files import fmt
from .pipeline import prepare
from .planner import PlannerParams, Termination, plan
from .sampler import RandomStream, generate

KINDS = ("sample_speed", "first_feasible", "cost_threshold")
ARMS = ("B", "R")
METRICS = ("samples", "feasible", "nodes", "cost", "time_ms")
CSV_FIELDS = ("trial_id", "arm", "samples", "feasible", "nodes", "cost", "time_ms", "seed", "status")
MAX_FAILURE_RATE = 0.10
_SPEED_BATCH = 4096


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """One experiment over a scenario.

    ``mode`` is the sampler of the R arm; B is always the baseline uniform
    sampler over the free1 bounding box. ``max_samples`` caps every planner
    run (``budget`` is an alias kept for the sample-budget reading of the
    first-feasible protocol).
    """

    scenario: object
    kind: str
    trials: int
    base_seed: int = 0
    jobs: int = 1
    m: int = 2500
    threshold: float = None
    max_samples: int = 20000
    max_time: float = None
    mode: str = "kde_uniform"
    lam: float = None
    params: PlannerParams = None
    timing: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"experiment kind must be one of {KINDS}")
        if int(self.trials) < 1:
            raise ContractViolation("trials must be at least 1")
        if self.jobs < 1:
            raise ContractViolation("jobs must be at least 1")
        if self.kind == "sample_speed" and self.m < 1:
            raise ContractViolation("m must be at least 1")
        if self.kind == "cost_threshold" and not (self.threshold and self.threshold > 0):
            raise ContractViolation("cost_threshold needs a positive threshold")
        if self.kind != "sample_speed" and self.max_samples is None and self.max_time is None:
            raise ContractViolation("planner experiments need max_samples or max_time")
        if self.mode == "baseline_uniform":
            raise ContractViolation("the R arm must use a KDE-based mode")


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    arm: str
    samples: int
    feasible: int
    nodes: int
    cost: float
    time_ms: float
    seed: int
    status: str
    message: str = field(default="", compare=False)

    def row(self):
        return [fmt(getattr(self, k)) if k not in ("arm", "status") else getattr(self, k)
                for k in CSV_FIELDS]


@dataclass(frozen=True)
class StatRow:
    metric: str
    b_mean: float
    b_median: float
    b_std: float
    r_mean: float
    r_median: float
    r_std: float
    delta_mean: float
    delta_median: float
    delta_std: float


def delta_pct(b, r):
    """(R - B) / B in percent; 0 when both are 0, nan when only B is 0."""
    if b == 0:
        return 0.0 if r == 0 else math.nan
    return (r - b) / b * 100.0


def describe(values):
    """Mean, lower-middle median and population standard deviation."""
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        return math.nan, math.nan, math.nan
    return float(v.mean()), float(v[(len(v) - 1) // 2]), float(v.std())


# per-process state, filled by _init
_STATE = {}


def _init(spec):
    s = spec.scenario
    _STATE["spec"] = spec
    _STATE["prepared"] = prepared = prepare(s)
    _STATE["samplers"] = {"B": prepared.spec("baseline_uniform"),
                          "R": prepared.spec(spec.mode, lam=spec.lam)}
    _STATE["params"] = spec.params or PlannerParams.from_dict(s.planner)


def _sample_speed(sampler, w1, m, stream):
    if sampler.rejection_free:
        generate(sampler, m, stream)
        return m, m
    feasible = attempts = 0
    while True:
        batch = generate(sampler, _SPEED_BATCH, stream)
        ok = batch.from_kde | w1.contains_many(batch.points)
        hits = np.cumsum(ok)
        if feasible + hits[-1] >= m:
            return attempts + int(np.searchsorted(hits, m - feasible)) + 1, m
        feasible += int(hits[-1])
        attempts += _SPEED_BATCH


def _trial(task):
    i, arm = task
    spec = _STATE["spec"]
    seed = spec.base_seed + i
    stream = RandomStream(seed, (ARMS.index(arm),))
    sampler = _STATE["samplers"][arm]
    w1 = _STATE["prepared"].w1
    t0 = time.perf_counter()
    try:
        if spec.kind == "sample_speed":
            samples, feasible = _sample_speed(sampler, w1, spec.m, stream)
            nodes, cost, status = 0, math.nan, "ok"
        else:
            s = spec.scenario
            kind = "first_feasible" if spec.kind == "first_feasible" else "cost_below"
            term = Termination(kind, threshold=spec.threshold, max_samples=spec.max_samples,
                               max_time=spec.max_time)
            res = plan(w1, s.start, s.goal, sampler, term, _STATE["params"], stream)
            samples, feasible, nodes, cost = res.samples_drawn, res.feasible_samples, res.nodes, res.cost
            if not res.solved:
                status = "no_path"
            elif kind == "cost_below" and not cost < spec.threshold:
                status = "capped"
            else:
                status = "ok"
        ms = (time.perf_counter() - t0) * 1e3 if spec.timing else 0.0
        return TrialRecord(i, arm, samples, feasible, nodes, float(cost), ms, seed, status)
    except Exception as exc:  # recorded, judged by the failure-rate rule
        return TrialRecord(i, arm, 0, 0, 0, math.nan, 0.0, seed, "error", repr(exc))


def run(spec):
    """Run every trial of ``spec`` for both arms and return records sorted by (trial, arm)."""
    if spec.scenario.start is None and spec.kind != "sample_speed":
        raise ContractViolation("planner experiments need start and goal in the scenario")
    tasks = [(i, arm) for i in range(int(spec.trials)) for arm in ARMS]
    if spec.jobs == 1:
        _init(spec)
        records = [_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(spec.jobs, initializer=_init, initargs=(spec,)) as pool:
            records = list(pool.map(_trial, tasks, chunksize=max(1, len(tasks) // (4 * spec.jobs))))
    records.sort(key=lambda r: (r.trial_id, ARMS.index(r.arm)))
    errors = [r for r in records if r.status == "error"]
    if len(errors) > MAX_FAILURE_RATE * len(records):
        raise BenchAborted(f"{len(errors)} of {len(records)} trials failed; first: {errors[0].message}")
    return records


def aggregate(records):
    """One StatRow per metric; failed trials and undefined costs are left out."""
    by_arm = {arm: [r for r in records if r.arm == arm and r.status != "error"] for arm in ARMS}
    if not by_arm["B"] or not by_arm["R"]:
        raise ContractViolation("aggregate needs records for both arms")
    rows = []
    for metric in METRICS:
        b = describe([v for v in (getattr(r, metric) for r in by_arm["B"]) if not math.isnan(v)])
        r = describe([v for v in (getattr(x, metric) for x in by_arm["R"]) if not math.isnan(v)])
        rows.append(StatRow(metric, *b, *r, *(delta_pct(x, y) for x, y in zip(b, r))))
    return rows


def write_trials_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow(r.row())


def read_trials_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = ("trial_id", "samples", "feasible", "nodes", "seed")
    return [TrialRecord(**{k: (int(v) if k in ints else v if k in ("arm", "status") else float(v))
                           for k, v in row.items()}) for row in rows]


def summary(spec, records):
    """JSON-ready summary: experiment settings, status counts and StatRows."""
    statuses = {}
    for r in records:
        statuses.setdefault(r.arm, {}).setdefault(r.status, 0)
        statuses[r.arm][r.status] += 1
    return {
        "kind": spec.kind, "trials": int(spec.trials), "base_seed": int(spec.base_seed),
        "m": spec.m if spec.kind == "sample_speed" else None,
        "threshold": spec.threshold, "mode": spec.mode,
        "max_samples": spec.max_samples, "statuses": statuses,
        "rows": [asdict(r) for r in aggregate(records)],
    }


def write_summary(path, spec, records):
    doc = summary(spec, records)

    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, list):
            return [clean(x) for x in v]
        return v

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clean(doc), fh, indent=2)
        fh.write("\n")
    return doc
