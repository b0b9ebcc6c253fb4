"""Compare the compiled and pure-Python backends on the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each case is timed under both backends; outputs are checked for equality so
the speedup is never bought with a different answer.
"""
import argparse
import json
import time

import numpy as np

from rfplan import _kernels
from rfplan.geometry import free_space
from rfplan.planner import Termination, plan
from rfplan.sampler import SamplerSpec
from rfplan.scenarios import TOY_POLYGON


def cases():
    rng = np.random.default_rng(0)
    w2 = free_space(TOY_POLYGON, [[(0, 0), (5, 8), (10, 0)], [(12, 12), (16, 12), (16, 16), (12, 16)]])
    w3 = free_space([0, 0, 0, 10, 10, 10], [[2, 2, 2, 4, 6, 4], [6, 0, 5, 8, 10, 7]])
    pts2 = rng.uniform([-20, -10], [30, 30], size=(200_000, 2))
    pts3 = rng.uniform(0, 10, size=(200_000, 3))
    seg_a = rng.uniform([-20, -10], [30, 30], size=(200, 2))
    seg_b = rng.uniform([-20, -10], [30, 30], size=(200, 50, 2))
    nodes = rng.random((5000, 2)) * 10
    queries = rng.random((2000, 2)) * 10
    box = free_space([(0, 0), (10, 0), (10, 10), (0, 10)])
    spec = SamplerSpec("baseline_uniform", bbox=box.bbox)

    yield "contain 2D (2e5 pts)", lambda: w2.contains_many(pts2)
    yield "contain 3D (2e5 pts)", lambda: w3.contains_many(pts3)
    yield "segments 2D (1e4)", lambda: [w2.segments_free_from(a, b) for a, b in zip(seg_a, seg_b)]
    yield "nearest (2000 q, 5000 nodes)", lambda: [_kernels.nearest_index(nodes, len(nodes), q)
                                                   for q in queries]
    yield "near r=0.5 (2000 q)", lambda: [_kernels.near_indices(nodes, len(nodes), q, 0.5)
                                          for q in queries]
    yield "RRT* 3000 samples", lambda: plan(box, (1, 5), (9, 5), spec,
                                            Termination("sample_budget", budget=3000), rng=1).cost


def same(a, b):
    if isinstance(a, list):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    backends = _kernels.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; nothing to compare")
        return 1
    prev = _kernels.current_backend()
    rows = []
    try:
        for name, fn in cases():
            best, out = {}, {}
            for backend in ("compiled", "python"):
                _kernels.use_backend(backend)
                times = []
                for _ in range(args.repeat):
                    t = time.perf_counter()
                    out[backend] = fn()
                    times.append(time.perf_counter() - t)
                best[backend] = min(times)
            ok = same(out["compiled"], out["python"])
            rows.append({"case": name, "compiled_s": best["compiled"], "python_s": best["python"],
                         "speedup": best["python"] / best["compiled"], "identical": bool(ok)})
            print(f"{name:<30} compiled {best['compiled']:8.4f} s  python {best['python']:8.4f} s  "
                  f"x{best['python'] / best['compiled']:6.1f}  {'identical' if ok else 'MISMATCH'}")
    finally:
        _kernels.use_backend(prev)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["identical"] for r in rows) else 2


if __name__ == "__main__":
    raise SystemExit(main())
