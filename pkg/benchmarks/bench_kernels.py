"""Time the compiled geometry kernels against the pure-Python fallback.

Workloads come from the packaged benchmark scene: every graph node paired
with every GPS satellite and LTE base station, for straight-segment blockage
tests and specular path tracing at one and two bounces.  Both backends run
the same call list; outputs are cross-checked before anything is timed.

Run:  python3 benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

from raimplan import benchmark_scene_path
from raimplan.raytrace import _kernels_py, pack_scene
from raimplan.world import load_scene

try:
    from raimplan.raytrace import _kernels as _compiled
except ImportError:
    _compiled = None


def _call_list(scene):
    geom = pack_scene(scene)
    rxs = [scene.graph.nodes[n] for n in sorted(scene.graph.nodes)]
    txs = [s.position_at(0.0) for s in scene.gps_satellites]
    txs += [b.position for b in scene.lte_base_stations]
    pairs = [
        (rx[0], rx[1], rx[2], tx[0], tx[1], tx[2]) for rx in rxs for tx in txs
    ]
    return geom, pairs


def _check_equal(geom, pairs):
    """Refuse to benchmark backends that disagree on any call."""
    for args in pairs:
        a = _compiled.segment_blocked(geom, *args)
        b = _kernels_py.segment_blocked(geom, *args)
        if a != b:
            raise SystemExit(f"backend mismatch: segment_blocked{args}")
    for bounces in (1, 2):
        for args in pairs:
            a = _compiled.trace_paths(geom, *args, bounces)
            b = _kernels_py.trace_paths(geom, *args, bounces)
            if [seq for seq, _ in a] != [seq for seq, _ in b]:
                raise SystemExit(f"backend mismatch: trace_paths{args}")


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats per workload (best-of is reported)")
    args = ap.parse_args()

    scene = load_scene(benchmark_scene_path())
    geom, pairs = _call_list(scene)
    print(
        f"scene: {scene.name}  buildings {len(scene.buildings)}  "
        f"calls per workload {len(pairs)}"
    )
    if _compiled is None:
        print("compiled extension not built; nothing to compare")
        return
    _check_equal(geom, pairs)

    workloads = [
        ("segment_blocked", lambda mod: [
            mod.segment_blocked(geom, *a) for a in pairs
        ]),
        ("trace_paths b=1", lambda mod: [
            mod.trace_paths(geom, *a, 1) for a in pairs
        ]),
        ("trace_paths b=2", lambda mod: [
            mod.trace_paths(geom, *a, 2) for a in pairs
        ]),
    ]
    header = f"{'workload':<18} {'python_ms':>10} {'compiled_ms':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, run in workloads:
        t_py = _time(lambda: run(_kernels_py), args.repeats)
        t_c = _time(lambda: run(_compiled), args.repeats)
        print(
            f"{name:<18} {t_py * 1e3:>10.2f} {t_c * 1e3:>12.2f} "
            f"{t_py / t_c:>7.1f}x"
        )


if __name__ == "__main__":
    main()
