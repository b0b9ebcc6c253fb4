"""``rfplan`` command line.

Exit codes: 0 success, 1 I/O or unexpected runtime failure, 2 invalid input
(schema, contract, kernel or start/goal), 3 empty free space or empty data.
"""
import argparse
import json
import math
from pathlib import Path
import sys

import jsonschema
import numpy as np

from . import bench
from .errors import (BenchAborted, ContractViolation, EmptyDataset, EmptyFreeSpace,
                     PlanningError, UnsupportedKernel)
from .files import AXES, fmt, load_scenario, write_points
from .kde import paper_radius, support_radius
from .pipeline import prepare
from .planner import PlannerParams, Termination, plan
from .sampler import RandomStream, SamplerSpec, generate
from .scenarios import BUILTIN, write_builtin

MODE_NAMES = {"baseline": "baseline_uniform", "biased": "kde_biased",
              "uniform": "kde_uniform", "mixed": "mixed"}
DENSITY_GRID = {2: 128, 3: 24}


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _json_dump(path, doc):
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return v.item()
        return v

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clean(doc), fh, indent=2)
        fh.write("\n")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    return load_scenario(args.scenario, args.data, args.radius)


def cmd_toy(args):
    out = _out_dir(args)
    kwargs = {"split": tuple(args.split)} if args.kind == "toy" else {}
    scen, data = write_builtin(args.kind, args.seed, out, **kwargs)
    print(f"wrote {scen} and {data}")
    return 0


def _density_grid(prepared):
    w1 = prepared.w1
    lo, hi = w1.bbox
    k = DENSITY_GRID[w1.dimension]
    axes = [lo[d] + (np.arange(k) + 0.5) * (hi[d] - lo[d]) / k for d in range(w1.dimension)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, w1.dimension)
    return grid, prepared.model.density(grid)


def cmd_prepare(args):
    sf, s = _load(args)
    out = _out_dir(args)
    p = prepare(s)
    base = p.base_model
    report = {
        "radius_choice": s.radius_choice, "q": sf.q, "rho": p.rho_radius,
        "support_radius": support_radius(base), "paper_radius": paper_radius(base, s.q),
        "safety_distance": s.safety_distance, "n_data": len(s.data), "n_kept": len(p.xbar),
        "dropped_count": p.dropped_count, "free1_volume": p.w1.volume,
        "free2_volume": p.w2.volume, "truncation": s.truncation,
        "normalization": p.model.normalization, "normalization_se": p.model.normalization_se,
        "units": sf.units,
    }
    _json_dump(out / "w2.json", p.w2.to_dict())
    _json_dump(out / "report.json", report)
    write_points(out / "xbar.csv", p.xbar)
    grid, dens = _density_grid(p)
    write_points(out / "density.csv", grid, {"density": dens})
    print(f"rho={fmt(p.rho_radius)} kept={len(p.xbar)} dropped={p.dropped_count}")
    return 0


def cmd_sample(args):
    sf, s = _load(args)
    out = _out_dir(args)
    mode = MODE_NAMES[args.mode]
    p = prepare(s)
    spec = p.spec(mode, lam=args.lam)
    stream = RandomStream(args.seed)
    if spec.rejection_free:
        batch = generate(spec, args.m, stream)
        pts, flags, attempts = batch.points, batch.from_kde, args.m
    else:
        # non-KDE draws are rejected against free1 until m are kept
        keep_pts, keep_flags, attempts = [], [], 0
        kept = 0
        while kept < args.m:
            batch = generate(spec, 4096, stream)
            ok = batch.from_kde | p.w1.contains_many(batch.points)
            idx = np.flatnonzero(ok)[: args.m - kept]
            attempts += int(idx[-1]) + 1 if kept + len(idx) == args.m else 4096
            keep_pts.append(batch.points[idx])
            keep_flags.append(batch.from_kde[idx])
            kept += len(idx)
        pts, flags = np.vstack(keep_pts), np.concatenate(keep_flags)
    source = ["kde" if f else "uniform" for f in flags]
    write_points(out / "samples.csv", pts, {"source": source})
    if args.bins:
        lo, hi = p.bbox
        with open(out / "hist.csv", "w", encoding="utf-8") as fh:
            fh.write("axis,bin,count\n")
            for d in range(pts.shape[1]):
                counts, _ = np.histogram(pts[:, d], bins=args.bins, range=(lo[d], hi[d]))
                fh.writelines(f"{AXES[d]},{b},{c}\n" for b, c in enumerate(counts))
    _json_dump(out / "sample_report.json", {"mode": mode, "m": args.m, "attempts": attempts,
                                             "seed": args.seed, "lambda": spec.lam})
    print(f"{args.m} samples in {attempts} attempts ({mode})")
    return 0


def cmd_plan(args):
    sf, s = _load(args)
    out = _out_dir(args)
    if s.start is None or s.goal is None:
        raise ContractViolation("the scenario needs start and goal to plan")
    mode = MODE_NAMES[args.mode]
    p = prepare(s) if mode != "baseline_uniform" else None
    if p is not None:
        sampler = p.spec(mode, lam=args.lam)
    else:
        sampler = SamplerSpec("baseline_uniform", bbox=s.workspace_free1.bbox)
    if args.threshold is not None:
        term = Termination("cost_below", threshold=args.threshold, max_samples=args.max_samples)
    else:
        term = Termination("first_feasible", max_samples=args.max_samples)
    res = plan(s.workspace_free1, s.start, s.goal, sampler, term,
               PlannerParams.from_dict(s.planner), RandomStream(args.seed))
    write_points(out / "path.csv", res.path if res.solved else np.empty((0, s.dimension)))
    _json_dump(out / "result.json", {
        "solved": res.solved, "cost": res.cost if res.solved else None, "mode": mode,
        "samples_drawn": res.samples_drawn, "feasible_samples": res.feasible_samples,
        "nodes": res.nodes, "wall_time": 0.0 if args.no_timing else res.wall_time,
        "seed": res.seed, "cost_history": [[n, c] for n, c in res.cost_history],
    })
    print(f"cost={fmt(res.cost)} samples={res.samples_drawn} nodes={res.nodes}"
          if res.solved else f"no path after {res.samples_drawn} samples")
    return 0


def cmd_bench(args):
    sf, s = _load(args)
    out = _out_dir(args)
    mode = MODE_NAMES[args.mode]
    spec = bench.ExperimentSpec(
        s, args.experiment, args.trials, base_seed=args.seed, jobs=args.jobs, m=args.m,
        threshold=args.threshold, max_samples=args.max_samples, mode=mode, lam=args.lam,
        params=PlannerParams.from_dict(s.planner), timing=not args.no_timing)
    records = bench.run(spec)
    bench.write_trials_csv(out / "trials.csv", records)
    doc = bench.write_summary(out / "summary.json", spec, records)
    for row in doc["rows"]:
        cells = [row[k] for k in ("b_mean", "r_mean", "delta_mean")]
        b, r, d = ("-" if v is None else f"{v:.3f}" for v in cells)
        print(f"{row['metric']:>9}  B {b}  R {r}  delta {d}%")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="rfplan", description="Rejection-free KDE sampling for RRT*.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", required=True, help="scenario JSON file")
            sp.add_argument("--data", help="data CSV (overrides data_file in the scenario)")
            sp.add_argument("--radius", choices=("tight", "paper"), default=None)
        sp.add_argument("--seed", type=_seed, default=1)
        sp.add_argument("--out", default=".", help="output directory")

    def sampling(sp, default):
        sp.add_argument("--mode", choices=tuple(MODE_NAMES), default=default)
        sp.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="KDE share of the mixed sampler (default 0.9)")

    sp = sub.add_parser("toy", help="write a built-in synthetic scenario and its data")
    common(sp, scenario=False)
    sp.add_argument("--kind", choices=tuple(BUILTIN), default="toy")
    sp.add_argument("--split", type=int, nargs=2, default=(750, 750), metavar=("N1", "N2"),
                    help="points per mixture component (toy only)")
    sp.set_defaults(func=cmd_toy)

    sp = sub.add_parser("prepare", help="erode free1, filter data, truncate the KDE")
    common(sp)
    sp.set_defaults(func=cmd_prepare)

    sp = sub.add_parser("sample", help="draw states from a sampler")
    common(sp)
    sampling(sp, "uniform")
    sp.add_argument("--m", type=int, default=10000)
    sp.add_argument("--bins", type=int, default=0,
                    help="also write per-axis (bin, count) histograms over the free1 bbox")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("plan", help="run RRT* once")
    common(sp)
    sampling(sp, "uniform")
    sp.add_argument("--threshold", type=float, default=None,
                    help="stop once the cost drops below this (default: first feasible)")
    sp.add_argument("--max-samples", type=int, default=20000)
    sp.add_argument("--no-timing", action="store_true", help="write wall time as 0")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("bench", help="run a seeded B vs R experiment")
    common(sp)
    sampling(sp, "uniform")
    sp.add_argument("--experiment", choices=bench.KINDS, default="sample_speed")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--m", type=int, default=2500)
    sp.add_argument("--threshold", type=float, default=None)
    sp.add_argument("--max-samples", type=int, default=20000)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--no-timing", action="store_true", help="write time_ms as 0")
    sp.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "m", 1) < 1:
            raise ContractViolation("--m must be at least 1")
        return args.func(args)
    except (EmptyFreeSpace, EmptyDataset) as exc:
        print(f"rfplan: {exc}", file=sys.stderr)
        return 3
    except jsonschema.ValidationError as exc:
        print(f"rfplan: invalid scenario: {exc.message}", file=sys.stderr)
        return 2
    except (ContractViolation, UnsupportedKernel, PlanningError) as exc:
        print(f"rfplan: {exc}", file=sys.stderr)
        return 2
    except (OSError, BenchAborted) as exc:
        print(f"rfplan: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
