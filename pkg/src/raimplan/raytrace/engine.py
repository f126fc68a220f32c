"""Propagation engine: packed geometry, specular paths, losses, and the CIR.

Buildings are extruded prisms; each CCW footprint edge becomes a vertical
rectangular wall whose outward normal is (dy, -dx) normalized.  Reflections are
specular off those walls (image method), blockage is tested against the open
prism interiors, and every surviving path carries the materials it struck so
the loss can be priced per bounce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..constants import FSPL_CONST_DB, SPEED_OF_LIGHT
from ..world import Point3, SceneModel, distance3
from . import kernels


class NoCoverageError(Exception):
    """No propagation path with acceptable loss reaches the receiver."""


@dataclass
class GeomTables:
    """Flat geometry arrays shared by both kernel backends.

    np_walls rows: x0, y0, ex, ey, len2, zlo, zhi, nx, ny, pd where (ex, ey)
    is the edge vector, len2 its squared length, (nx, ny) the unit outward
    normal and pd the plane offset n . p0.
    """

    np_poly_xy: np.ndarray
    np_poly_off: np.ndarray
    np_bbox: np.ndarray
    np_prism_zlo: np.ndarray
    np_prism_zhi: np.ndarray
    np_walls: np.ndarray
    max_vertices: int
    wall_material: list[str]
    wall_building: list[str]

    @cached_property
    def py_prisms(self):
        out = []
        off = self.np_poly_off
        for b in range(len(off) - 1):
            poly = [tuple(p) for p in self.np_poly_xy[off[b] : off[b + 1]]]
            out.append(
                (
                    poly,
                    tuple(self.np_bbox[b]),
                    float(self.np_prism_zlo[b]),
                    float(self.np_prism_zhi[b]),
                )
            )
        return out

    @cached_property
    def py_walls(self):
        return [tuple(row) for row in self.np_walls]


def pack_scene(scene: SceneModel) -> GeomTables:
    """Build (and cache on the scene) the flat geometry tables."""
    cached = getattr(scene, "_geom_tables", None)
    if cached is not None:
        return cached
    xs: list[Point3] = []
    offs = [0]
    bboxes = []
    zlos = []
    zhis = []
    wall_rows = []
    wall_material: list[str] = []
    wall_building: list[str] = []
    g = scene.ground_elevation
    max_vertices = 3
    for b in scene.buildings:
        poly = b.footprint
        max_vertices = max(max_vertices, len(poly))
        xs.extend(poly)
        offs.append(len(xs))
        px = [p[0] for p in poly]
        py = [p[1] for p in poly]
        bboxes.append((min(px), min(py), max(px), max(py)))
        zlo = g
        zhi = g + b.height
        zlos.append(zlo)
        zhis.append(zhi)
        for (x0, y0), (x1, y1) in zip(poly, poly[1:] + poly[:1]):
            ex = x1 - x0
            ey = y1 - y0
            norm = math.hypot(ex, ey)
            nx = ey / norm
            ny = -ex / norm
            wall_rows.append(
                (x0, y0, ex, ey, ex * ex + ey * ey, zlo, zhi, nx, ny, nx * x0 + ny * y0)
            )
            wall_material.append(b.material)
            wall_building.append(b.id)
    tables = GeomTables(
        np_poly_xy=np.array(xs, dtype=np.float64).reshape(len(xs), 2),
        np_poly_off=np.array(offs, dtype=np.int64),
        np_bbox=np.array(bboxes, dtype=np.float64).reshape(len(bboxes), 4),
        np_prism_zlo=np.array(zlos, dtype=np.float64),
        np_prism_zhi=np.array(zhis, dtype=np.float64),
        np_walls=np.array(wall_rows, dtype=np.float64).reshape(len(wall_rows), 10),
        max_vertices=max_vertices,
        wall_material=wall_material,
        wall_building=wall_building,
    )
    scene._geom_tables = tables
    return tables


@dataclass(frozen=True)
class PropagationPath:
    """One specular (or direct) path from a transmitter to a receiver.

    vertices run from tx through the bounce points to rx.  path_loss_db holds
    the total loss when a carrier frequency was supplied to the tracer, and
    just the accumulated material loss otherwise.
    """

    vertices: tuple[Point3, ...]
    total_length: float
    bounces: int
    path_loss_db: float
    materials: tuple[str, ...] = ()
    bounce_loss_db: float = 0.0
    wall_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class ChannelImpulseResponse:
    """Multipath taps as (amplitude, absolute delay seconds), delay-sorted.

    The first tap is the earliest arrival and is the amplitude reference
    (alpha_0 == 1); later taps carry linear amplitudes relative to it.
    """

    components: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("CIR needs at least one component")
        if self.components[0][0] != 1.0:
            raise ValueError("first CIR amplitude must be exactly 1")
        delays = [tau for _, tau in self.components]
        if any(t1 < t0 for t0, t1 in zip(delays, delays[1:])):
            raise ValueError("CIR delays must be non-decreasing")
        if any(a <= 0.0 for a, _ in self.components):
            raise ValueError("CIR amplitudes must be positive")

    @property
    def first_delay_s(self) -> float:
        return self.components[0][1]

    @property
    def amplitudes(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.components)

    @property
    def delays_s(self) -> tuple[float, ...]:
        return tuple(t for _, t in self.components)


def free_space_loss_db(length_m: float, frequency_hz: float) -> float:
    """Free-space loss 20 log10(d) + 20 log10(f) - 147.55 dB."""
    if length_m <= 0.0 or frequency_hz <= 0.0:
        raise ValueError("free_space_loss_db needs positive length and frequency")
    return 20.0 * math.log10(length_m) + 20.0 * math.log10(frequency_hz) - FSPL_CONST_DB


def los_blocked(rx: Point3, tx: Point3, scene: SceneModel) -> bool:
    """True if any building interior cuts the straight rx-tx segment."""
    geom = pack_scene(scene)
    return kernels.segment_blocked(
        geom, rx[0], rx[1], rx[2], tx[0], tx[1], tx[2]
    )


def los_path(rx: Point3, tx: Point3, frequency_hz: float | None = None) -> PropagationPath:
    """Direct path record (no blockage test here; see los_blocked)."""
    length = distance3(tx, rx)
    loss = free_space_loss_db(length, frequency_hz) if frequency_hz is not None else 0.0
    return PropagationPath(
        vertices=(tuple(tx), tuple(rx)),
        total_length=length,
        bounces=0,
        path_loss_db=loss,
    )


def reflection_paths(
    rx: Point3,
    tx: Point3,
    scene: SceneModel,
    max_bounces: int,
    frequency_hz: float | None = None,
) -> list[PropagationPath]:
    """All unobstructed specular paths with 1..max_bounces wall reflections.

    Output is sorted by (total_length, wall index sequence) so equal-length
    mirror-image paths keep a stable order.
    """
    if max_bounces < 0:
        raise ValueError("max_bounces must be >= 0")
    geom = pack_scene(scene)
    raw = kernels.trace_paths(
        geom, rx[0], rx[1], rx[2], tx[0], tx[1], tx[2], max_bounces
    )
    paths = []
    for seq, pts in raw:
        verts = [tuple(tx), *[tuple(p) for p in pts], tuple(rx)]
        length = 0.0
        for a, b in zip(verts, verts[1:]):
            length += distance3(a, b)
        materials = tuple(geom.wall_material[w] for w in seq)
        bounce_loss = sum(scene.materials[m] for m in materials)
        loss = (
            free_space_loss_db(length, frequency_hz) + bounce_loss
            if frequency_hz is not None
            else bounce_loss
        )
        paths.append(
            PropagationPath(
                vertices=tuple(verts),
                total_length=length,
                bounces=len(seq),
                path_loss_db=loss,
                materials=materials,
                bounce_loss_db=bounce_loss,
                wall_indices=tuple(seq),
            )
        )
    paths.sort(key=lambda p: (p.total_length, p.wall_indices))
    return paths


def path_loss(path: PropagationPath, frequency_hz: float, scene: SceneModel) -> float:
    """Total loss in dB: free-space over the unfolded length plus one
    material reflection loss per bounce."""
    loss = free_space_loss_db(path.total_length, frequency_hz)
    for m in path.materials:
        if m not in scene.materials:
            raise ValueError(f"unknown material {m!r} on path")
        loss += scene.materials[m]
    return loss


def build_cir(
    paths: list[PropagationPath],
    frequency_hz: float,
    loss_threshold_db: float,
) -> ChannelImpulseResponse:
    """Assemble the CIR from traced paths.

    Paths whose total loss exceeds loss_threshold_db are dropped; the rest are
    sorted by delay and amplitudes are expressed relative to the first
    arrival: alpha_l = 10 ** ((loss_0 - loss_l) / 20).
    """
    kept = []
    for p in paths:
        loss = free_space_loss_db(p.total_length, frequency_hz) + p.bounce_loss_db
        if loss <= loss_threshold_db:
            kept.append((p.total_length / SPEED_OF_LIGHT, loss, p))
    if not kept:
        raise NoCoverageError(
            f"no path within {loss_threshold_db} dB loss ({len(paths)} candidates)"
        )
    kept.sort(key=lambda row: (row[0], row[1], row[2].wall_indices))
    loss0 = kept[0][1]
    components = tuple(
        (10.0 ** ((loss0 - loss) / 20.0), tau) for tau, loss, _ in kept
    )
    return ChannelImpulseResponse(components=components)
