"""Shared fixtures: the packaged benchmark scene and random-scene builders."""

from __future__ import annotations

import math

import pytest

from oracles import _frac, _inside_poly_exact
from raimplan import benchmark_scene_path
from raimplan.world import (
    Building,
    GpsSatellite,
    RoadGraph,
    SceneModel,
    load_scene,
)


@pytest.fixture(scope="session")
def benchmark_scene():
    return load_scene(benchmark_scene_path())


def open_sky_plan_scene() -> SceneModel:
    """Two straight route alternatives under a spread 8-sat constellation."""
    azels = [(0, 75), (45, 55), (90, 40), (135, 60), (180, 35), (225, 50), (270, 65), (315, 45)]
    sats = []
    for i, (az_deg, el_deg) in enumerate(azels):
        az, el = math.radians(az_deg), math.radians(el_deg)
        r = 2.2e7
        pos = (
            r * math.cos(el) * math.sin(az),
            r * math.cos(el) * math.cos(az),
            r * math.sin(el),
        )
        sats.append(GpsSatellite(f"G{i:02d}", [(0.0, pos)]))
    pts = {
        "s": (0.0, 0.0, 0.0),
        "m": (200.0, 0.0, 0.0),
        "w": (200.0, 150.0, 0.0),
        "g": (400.0, 0.0, 0.0),
    }
    edges = [
        ("s", "m", 200.0),
        ("m", "g", 200.0),
        ("s", "w", 250.0),
        ("w", "g", 250.0),
    ]
    return SceneModel(
        name="plan-test",
        ground_elevation=0.0,
        materials={},
        buildings=[],
        graph=RoadGraph(nodes=pts, edges=edges),
        gps_satellites=sats,
        lte_base_stations=[],
        routes={"detour": ["s", "w", "g"]},
    )


def _point_in_building(scene, x, y, z) -> bool:
    g = scene.ground_elevation
    for b in scene.buildings:
        if g < z < g + b.height:
            poly = [(_frac(px), _frac(py)) for px, py in b.footprint]
            if _inside_poly_exact(poly, _frac(x), _frac(y)):
                return True
    return False


def random_scene(rng, n_buildings: int = 6, span: float = 100.0) -> SceneModel:
    """Rotated-rectangle prisms scattered over a square patch."""
    buildings = []
    for i in range(n_buildings):
        cx, cy = rng.uniform(10.0, span - 10.0, size=2)
        hx, hy = rng.uniform(3.0, 12.0, size=2)
        ang = rng.uniform(0.0, math.pi)
        ca, sa = math.cos(ang), math.sin(ang)
        corners = [
            (cx + dx * ca - dy * sa, cy + dx * sa + dy * ca)
            for dx, dy in ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy))
        ]
        buildings.append(
            Building(f"b{i}", corners, float(rng.uniform(5.0, 40.0)), "brick")
        )
    return SceneModel(
        name="random",
        ground_elevation=0.0,
        materials={"brick": 8.0},
        buildings=buildings,
        graph=RoadGraph(nodes={}, edges=[]),
        gps_satellites=[],
        lte_base_stations=[],
        routes={},
    )


def free_point(rng, scene, span: float = 100.0, zmax: float = 30.0):
    """A point guaranteed to lie outside every prism."""
    while True:
        x = float(rng.uniform(0.0, span))
        y = float(rng.uniform(0.0, span))
        z = float(rng.uniform(0.5, zmax))
        if not _point_in_building(scene, x, y, z):
            return (x, y, z)
