"""Command-line entry points: plan, node, rays, validate.

Exit codes: 0 success (plan found a feasible route), 2 input/config errors,
3 candidates evaluated but none feasible.  All artifacts are written with
full double precision; the human-readable report rounds to 6 significant
digits.
"""

from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

import click

from . import benchmark_scene_path
from .config import ConfigError, RunConfig, apply_overrides, load_run_config
from .integrity import NodeIntegrityResult, evaluate_node
from .planner import NoRouteError, PlanOutcome, plan
from .raytrace import los_blocked, los_path, reflection_paths
from .world import (
    SceneFormatError,
    SceneModel,
    SceneValidationError,
    ScheduleEntry,
    load_scene,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NO_FEASIBLE = 3


def _resolve_scene_path(scene_path: str | None) -> str:
    if scene_path is None:
        raise ConfigError("no scene given (use --scene or the config file)")
    if scene_path == "benchmark":
        return benchmark_scene_path()
    return scene_path


def _load_inputs(config_path, **overrides) -> tuple[RunConfig, SceneModel]:
    cfg = load_run_config(config_path) if config_path else RunConfig()
    cfg = apply_overrides(cfg, **overrides)
    scene = load_scene(_resolve_scene_path(cfg.scene_path))
    return cfg, scene


def _fmt(value: float) -> str:
    """Full-precision text for dump tables (shortest round-trip repr)."""
    return repr(float(value))


def _sig(value: float) -> str:
    """6-significant-digit text for reports."""
    if math.isinf(value):
        return "inf"
    return format(value, ".6g")


def _open_csv(path: Path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _segment_dists(schedule) -> list[float]:
    from .world import distance3

    entries = schedule.entries
    dists = [0.0]
    dists += [
        distance3(a.position, b.position)
        for a, b in zip(entries, entries[1:])
    ]
    return dists


def _write_measurements(path: Path, outcome: PlanOutcome) -> None:
    fh, w = _open_csv(path)
    with fh:
        w.writerow(
            [
                "candidate",
                "node_id",
                "epoch",
                "tx_kind",
                "tx_id",
                "pseudorange_m",
                "sigma_m",
                "bias_m",
                "los_flag",
            ]
        )
        for cand in sorted(outcome.candidates):
            for res in outcome.node_results[cand]:
                for m in res.gps_measurements:
                    w.writerow(
                        [
                            cand,
                            res.node_id,
                            _fmt(res.epoch),
                            "gps",
                            m.sat_id,
                            _fmt(m.pseudorange_m),
                            _fmt(m.sigma_m),
                            _fmt(m.nlos_bias_m),
                            int(m.is_los),
                        ]
                    )
                for m in res.lte_measurements:
                    w.writerow(
                        [
                            cand,
                            res.node_id,
                            _fmt(res.epoch),
                            "lte",
                            m.bs_id,
                            _fmt(m.pseudorange_m),
                            _fmt(m.sigma_m),
                            _fmt(m.mp_bias_m),
                            int(m.is_los),
                        ]
                    )


def _write_integrity(path: Path, outcome: PlanOutcome) -> None:
    fh, w = _open_csv(path)
    with fh:
        w.writerow(
            ["candidate", "node_id", "epoch", "dist_m", "n_gps", "n_lte", "fault", "hpl_m"]
        )
        for cand in sorted(outcome.candidates):
            dists = _segment_dists(outcome.schedules[cand])
            for dist, res in zip(dists, outcome.node_results[cand]):
                w.writerow(
                    [
                        cand,
                        res.node_id,
                        _fmt(res.epoch),
                        _fmt(dist),
                        res.n_gps,
                        res.n_lte,
                        int(res.fault),
                        _fmt(res.hpl_m),
                    ]
                )


def _write_candidates(path: Path, outcome: PlanOutcome) -> None:
    chosen = outcome.result.chosen
    fh, w = _open_csv(path)
    with fh:
        w.writerow(
            [
                "candidate",
                "n_nodes",
                "total_distance_m",
                "avg_hpl_m",
                "max_hpl_m",
                "fault_ratio",
                "cost",
                "feasible",
                "chosen",
            ]
        )
        for ev in sorted(outcome.result.evaluations, key=lambda e: e.name):
            w.writerow(
                [
                    ev.name,
                    len(ev.candidate.nodes),
                    _fmt(ev.total_distance_m),
                    _fmt(ev.avg_hpl_m),
                    _fmt(ev.max_hpl_m),
                    _fmt(ev.fault_ratio),
                    _fmt(ev.cost),
                    int(ev.feasible),
                    int(chosen is not None and ev.name == chosen.name),
                ]
            )


def _plan_report(outcome: PlanOutcome, cfg: RunConfig, scene: SceneModel) -> str:
    lines = []
    lines.append(f"plan report: {scene.name}")
    lines.append(
        f"start {cfg.start_node}  goal {cfg.target_node}  "
        f"departure {_sig(cfg.departure_epoch_s)} s  speed {_sig(cfg.speed_mps)} m/s"
    )
    lines.append("")
    header = (
        f"{'candidate':<12} {'nodes':>5} {'distance_m':>12} {'avg_hpl_m':>10} "
        f"{'max_hpl_m':>10} {'fault_ratio':>11} {'cost':>14} {'feasible':>8}"
    )
    lines.append(header)
    lines.append("-" * len(header))
    chosen = outcome.result.chosen
    for ev in sorted(
        outcome.result.evaluations, key=lambda e: (e.total_distance_m, e.name)
    ):
        marker = "*" if chosen is not None and ev.name == chosen.name else " "
        lines.append(
            f"{ev.name:<11}{marker} {len(ev.candidate.nodes):>5} "
            f"{_sig(ev.total_distance_m):>12} {_sig(ev.avg_hpl_m):>10} "
            f"{_sig(ev.max_hpl_m):>10} {_sig(ev.fault_ratio):>11} "
            f"{_sig(ev.cost):>14} {'yes' if ev.feasible else 'no':>8}"
        )
    lines.append("")
    if chosen is None:
        lines.append("no feasible path")
    else:
        via = outcome.candidates[chosen.name].nodes
        lines.append(f"chosen: {chosen.name}")
        lines.append(f"route: {' -> '.join(via)}")
    lines.append("")
    return "\n".join(lines)


def _trace_rows(scene: SceneModel, entry: ScheduleEntry, cfg: RunConfig):
    """Ray-dump rows for one schedule entry against every transmitter."""
    rows = []
    rx = entry.position
    for sat in scene.gps_satellites:
        tx = sat.position_at(entry.epoch)
        paths = []
        if not los_blocked(rx, tx, scene):
            paths.append(los_path(rx, tx))
        paths.extend(reflection_paths(rx, tx, scene, cfg.gps_max_bounces))
        rows.extend(
            _ray_row(entry, "gps", sat.id, p) for p in paths
        )
    for bs in scene.lte_base_stations:
        tx = bs.position
        freq = bs.carrier_frequency_hz
        paths = []
        if not los_blocked(rx, tx, scene):
            paths.append(los_path(rx, tx, freq))
        paths.extend(
            reflection_paths(rx, tx, scene, cfg.lte_max_bounces, freq)
        )
        rows.extend(
            _ray_row(entry, "lte", bs.id, p) for p in paths
        )
    return rows


def _ray_row(entry: ScheduleEntry, kind: str, tx_id: str, p):
    verts = ";".join(
        f"{_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in p.vertices
    )
    return [
        entry.node_id,
        _fmt(entry.epoch),
        kind,
        tx_id,
        p.bounces,
        _fmt(p.total_length),
        _fmt(p.path_loss_db),
        verts,
    ]


def _write_rays(path: Path, rows) -> None:
    fh, w = _open_csv(path)
    with fh:
        w.writerow(
            [
                "node_id",
                "epoch",
                "tx_kind",
                "tx_id",
                "bounces",
                "total_length_m",
                "path_loss_db",
                "vertices",
            ]
        )
        w.writerows(rows)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_INPUT_ERROR)


@click.group()
def main() -> None:
    """Integrity-aware route planning over ray-traced GPS/LTE pseudoranges."""


_common = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="Run configuration YAML."),
    click.option("--scene", "scene_path", default=None,
                 help="Scene YAML path, or 'benchmark' for the packaged scene."),
]


def _with_common(fn):
    for deco in reversed(_common):
        fn = deco(fn)
    return fn


@main.command("plan")
@_with_common
@click.option("--start", "start_node", default=None, help="Start node id.")
@click.option("--goal", "target_node", default=None, help="Target node id.")
@click.option("--epoch", "departure_epoch_s", type=float, default=None,
              help="Departure epoch in seconds.")
@click.option("--speed", "speed_mps", type=float, default=None, help="Speed m/s.")
@click.option("--spacing", "node_spacing_m", type=float, default=None,
              help="Evaluation-node spacing in metres.")
@click.option("-k", "k_candidates", type=int, default=None,
              help="Number of generated shortest paths.")
@click.option("--mode", "candidate_mode",
              type=click.Choice(["k_shortest", "named"]), default=None)
@click.option("--out", "output_dir", type=click.Path(), default=None,
              help="Output directory.")
@click.option("--seed", "noise_seed", type=int, default=None,
              help="Enable seeded measurement noise.")
@click.option("--jobs", type=int, default=None, help="Parallel node evaluations.")
@click.option("--rays", "dump_rays", is_flag=True, default=None,
              help="Also write the ray dump.")
def plan_cmd(config_path, **overrides) -> None:
    """Run the full pipeline and write all artifacts."""
    try:
        cfg, scene = _load_inputs(config_path, **overrides)
        if cfg.start_node is None or cfg.target_node is None:
            raise ConfigError("start and target nodes are required")
        if cfg.start_node not in scene.graph.nodes:
            raise ConfigError(f"start node {cfg.start_node!r} not in scene")
        if cfg.target_node not in scene.graph.nodes:
            raise ConfigError(f"target node {cfg.target_node!r} not in scene")
        outcome = plan(
            scene,
            cfg.start_node,
            cfg.target_node,
            k=cfg.k_candidates,
            params=cfg.integrity,
            signal=cfg.signal_config(),
            speed_mps=cfg.speed_mps,
            spacing_m=cfg.node_spacing_m,
            start_epoch=cfg.departure_epoch_s,
            jobs=cfg.jobs,
            candidate_mode=cfg.candidate_mode,
        )
    except (ConfigError, SceneFormatError, SceneValidationError, NoRouteError) as exc:
        _fail(str(exc))
        return
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_measurements(out / "measurements.csv", outcome)
    _write_integrity(out / "integrity.csv", outcome)
    _write_candidates(out / "candidates.csv", outcome)
    report = _plan_report(outcome, cfg, scene)
    (out / "plan_report.txt").write_text(report, encoding="utf-8")
    if cfg.dump_rays:
        rows = []
        for cand in sorted(outcome.candidates):
            for entry in outcome.schedules[cand].entries:
                rows.extend(_trace_rows(scene, entry, cfg))
        _write_rays(out / "rays.csv", rows)
    click.echo(report, nl=False)
    sys.exit(EXIT_OK if outcome.result.chosen is not None else EXIT_NO_FEASIBLE)


def _print_node_report(res: NodeIntegrityResult) -> None:
    click.echo(f"node {res.node_id}  epoch {_sig(res.epoch)} s")
    click.echo(f"measurements: {res.n_gps} gps, {res.n_lte} lte")
    for m in res.gps_measurements:
        click.echo(
            f"  gps {m.sat_id}: pr {_sig(m.pseudorange_m)} m  sigma {_sig(m.sigma_m)} m"
            f"  nlos_bias {_sig(m.nlos_bias_m)} m  {'los' if m.is_los else 'nlos'}"
        )
    for m in res.lte_measurements:
        click.echo(
            f"  lte {m.bs_id}: pr {_sig(m.pseudorange_m)} m  sigma {_sig(m.sigma_m)} m"
            f"  mp_bias {_sig(m.mp_bias_m)} m  {'los' if m.is_los else 'nlos'}"
        )
    if res.per_mode:
        click.echo(f"fault modes: {len(res.per_mode)}")
        click.echo(
            f"  {'mode':>4} {'excluded':<16} {'sep_e':>10} {'sep_n':>10}"
            f" {'thr_e':>10} {'thr_n':>10} {'pl_e':>10} {'pl_n':>10} clamped"
        )
        for d in res.per_mode:
            excl = ",".join(str(i) for i in d.excluded)
            click.echo(
                f"  {d.mode_index:>4} {excl:<16} {_sig(d.separation_m[0]):>10}"
                f" {_sig(d.separation_m[1]):>10} {_sig(d.threshold_m[0]):>10}"
                f" {_sig(d.threshold_m[1]):>10} {_sig(d.pl_m[0]):>10}"
                f" {_sig(d.pl_m[1]):>10} {'yes' if d.k_md_clamped else 'no'}"
            )
    click.echo(f"fault: {'yes' if res.fault else 'no'}")
    click.echo(f"hpl: {_sig(res.hpl_m)} m")


@main.command("node")
@_with_common
@click.option("--node", "node_id", required=True, help="Node id to report on.")
@click.option("--epoch", "departure_epoch_s", type=float, default=None,
              help="Evaluation epoch in seconds.")
@click.option("--seed", "noise_seed", type=int, default=None)
def node_cmd(config_path, node_id, **overrides) -> None:
    """Single-node integrity report with per-mode detail."""
    try:
        cfg, scene = _load_inputs(config_path, **overrides)
        if node_id not in scene.graph.nodes:
            raise ConfigError(f"unknown node {node_id!r}")
    except (ConfigError, SceneFormatError, SceneValidationError) as exc:
        _fail(str(exc))
        return
    entry = ScheduleEntry(
        node_id, scene.graph.nodes[node_id], cfg.departure_epoch_s
    )
    res = evaluate_node(entry, scene, cfg.integrity, cfg.signal_config())
    _print_node_report(res)
    sys.exit(EXIT_OK)


@main.command("rays")
@_with_common
@click.option("--node", "node_id", default=None,
              help="Limit the dump to one node (default: all graph nodes).")
@click.option("--epoch", "departure_epoch_s", type=float, default=None)
@click.option("--out", "output_dir", type=click.Path(), default=None)
def rays_cmd(config_path, node_id, **overrides) -> None:
    """Write the ray dump for one node or the whole graph."""
    try:
        cfg, scene = _load_inputs(config_path, **overrides)
        if node_id is not None and node_id not in scene.graph.nodes:
            raise ConfigError(f"unknown node {node_id!r}")
    except (ConfigError, SceneFormatError, SceneValidationError) as exc:
        _fail(str(exc))
        return
    node_ids = [node_id] if node_id else sorted(scene.graph.nodes)
    rows = []
    for nid in node_ids:
        entry = ScheduleEntry(nid, scene.graph.nodes[nid], cfg.departure_epoch_s)
        rows.extend(_trace_rows(scene, entry, cfg))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_rays(out / "rays.csv", rows)
    click.echo(f"wrote {len(rows)} rays to {out / 'rays.csv'}")
    sys.exit(EXIT_OK)


@main.command("validate")
@_with_common
def validate_cmd(config_path, **overrides) -> None:
    """Lint a scene (and config) without running anything."""
    try:
        cfg, scene = _load_inputs(config_path, **overrides)
    except (ConfigError, SceneFormatError, SceneValidationError) as exc:
        _fail(str(exc))
        return
    click.echo(
        f"scene OK: {scene.name} ({len(scene.buildings)} buildings, "
        f"{len(scene.graph.nodes)} nodes, {len(scene.gps_satellites)} satellites, "
        f"{len(scene.lte_base_stations)} base stations)"
    )
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
