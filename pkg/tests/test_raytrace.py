"""Blockage, image-method reflections, path loss, and CIR assembly."""

import math

import numpy as np
import pytest

from conftest import free_point, random_scene
from oracles import frac_segment_blocked, single_bounce_oracle, specular_angle_error
from raimplan.raytrace import (
    ChannelImpulseResponse,
    NoCoverageError,
    build_cir,
    los_blocked,
    los_path,
    pack_scene,
    path_loss,
    reflection_paths,
)
from raimplan.world import Building, RoadGraph, SceneModel, distance3

FSPL_2GHZ_100M = 20.0 * math.log10(100.0) + 20.0 * math.log10(2.0e9) - 147.55


def _box_scene(boxes, height=50.0) -> SceneModel:
    """Axis-aligned test prisms; boxes are (x0, y0, x1, y1) rectangles."""
    buildings = [
        Building(
            f"b{i}",
            [(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
            height,
            "brick",
        )
        for i, (x0, y0, x1, y1) in enumerate(boxes)
    ]
    return SceneModel(
        name="boxes",
        ground_elevation=0.0,
        materials={"brick": 8.0},
        buildings=buildings,
        graph=RoadGraph(nodes={}, edges=[]),
        gps_satellites=[],
        lte_base_stations=[],
        routes={},
    )


def _prisms(scene):
    g = scene.ground_elevation
    return [(b.footprint, g, g + b.height) for b in scene.buildings]


def test_blockage_matches_exact_rational_oracle():
    """Float blockage agrees with exact arithmetic on random segments."""
    rng = np.random.default_rng(7)
    for _ in range(40):
        scene = random_scene(rng, n_buildings=int(rng.integers(1, 8)))
        prisms = _prisms(scene)
        for _ in range(25):
            p = free_point(rng, scene)
            q = free_point(rng, scene)
            assert los_blocked(p, q, scene) == frac_segment_blocked(prisms, p, q)


def test_blockage_boundary_contacts_do_not_block():
    """Grazing a face plane, a corner, or the roofline is not blockage."""
    scene = _box_scene([(0.0, 0.0, 10.0, 10.0)], height=20.0)
    # along the x = 0 face plane
    assert not los_blocked((0.0, -5.0, 5.0), (0.0, 15.0, 5.0), scene)
    # diagonal through the (10, 10) corner
    assert not los_blocked((0.0, 20.0, 5.0), (20.0, 0.0, 5.0), scene)
    # exactly along the roof plane
    assert not los_blocked((-5.0, 5.0, 20.0), (15.0, 5.0, 20.0), scene)
    # endpoint resting on a face, leaving outward
    assert not los_blocked((0.0, 5.0, 5.0), (-10.0, 5.0, 5.0), scene)
    # and straight through the interior is blockage
    assert los_blocked((-5.0, 5.0, 5.0), (15.0, 5.0, 5.0), scene)
    # passing above the roof is not
    assert not los_blocked((-5.0, 5.0, 25.0), (15.0, 5.0, 25.0), scene)


def test_los_path_geometry_and_loss():
    p = los_path((0.0, 0.0, 0.0), (60.0, 0.0, 80.0), frequency_hz=2.0e9)
    assert p.bounces == 0
    assert p.vertices == ((60.0, 0.0, 80.0), (0.0, 0.0, 0.0))
    assert p.total_length == pytest.approx(100.0)
    assert p.path_loss_db == pytest.approx(FSPL_2GHZ_100M, abs=1e-9)
    bare = los_path((0.0, 0.0, 0.0), (60.0, 0.0, 80.0))
    assert bare.path_loss_db == 0.0


def test_single_reflections_match_wall_face_oracle():
    """Image-method output equals brute force over every wall face."""
    rng = np.random.default_rng(11)
    for _ in range(30):
        scene = random_scene(rng, n_buildings=int(rng.integers(1, 8)))
        rx = free_point(rng, scene)
        tx = free_point(rng, scene)
        got = sorted(
            (tuple(round(v, 9) for v in p.vertices[1]), p.total_length)
            for p in reflection_paths(rx, tx, scene, max_bounces=1)
        )
        want = single_bounce_oracle(rx, tx, scene)
        assert len(got) == len(want)
        for (gv, gl), (wv, wl) in zip(got, want):
            assert gv == pytest.approx(wv, abs=1e-6)
            assert gl == pytest.approx(wl, rel=1e-9)


def test_every_bounce_is_specular():
    """Randomized canyons guarantee a steady supply of 1- and 2-bounce paths."""
    rng = np.random.default_rng(13)
    checked = 0
    for _ in range(30):
        w = float(rng.uniform(8.0, 30.0))
        off = float(rng.uniform(-40.0, 40.0))
        height = float(rng.uniform(20.0, 60.0))
        scene = _box_scene(
            [(off - 10.0, 0.0, off, 100.0), (off + w, 0.0, off + w + 10.0, 100.0)],
            height=height,
        )
        rx = (off + float(rng.uniform(1.0, w - 1.0)), float(rng.uniform(5.0, 45.0)),
              float(rng.uniform(1.0, 15.0)))
        tx = (off + float(rng.uniform(1.0, w - 1.0)), float(rng.uniform(55.0, 95.0)),
              float(rng.uniform(1.0, 15.0)))
        paths = reflection_paths(rx, tx, scene, max_bounces=2)
        assert len(paths) >= 3
        for p in paths:
            assert specular_angle_error(p) < 1e-9
            checked += 1
    # plus fully random layouts for wall-orientation generality
    for _ in range(20):
        scene = random_scene(rng, n_buildings=int(rng.integers(2, 9)))
        rx = free_point(rng, scene, zmax=10.0)
        tx = free_point(rng, scene, zmax=10.0)
        for p in reflection_paths(rx, tx, scene, max_bounces=2):
            assert specular_angle_error(p) < 1e-9
            checked += 1
    assert checked > 100


def test_reflection_paths_sorted_and_lengths_exceed_direct():
    rng = np.random.default_rng(17)
    for _ in range(10):
        scene = random_scene(rng, n_buildings=5)
        rx = free_point(rng, scene)
        tx = free_point(rng, scene)
        paths = reflection_paths(rx, tx, scene, max_bounces=2)
        keys = [(p.total_length, p.wall_indices) for p in paths]
        assert keys == sorted(keys)
        direct = distance3(rx, tx)
        for p in paths:
            assert p.total_length > direct - 1e-9
            assert p.vertices[0] == tx and p.vertices[-1] == rx


def test_two_bounce_corridor_path_has_image_method_length():
    """A canyon produces the analytic double-reflection path."""
    scene = _box_scene([(-10.0, 0.0, 0.0, 100.0), (20.0, 0.0, 30.0, 100.0)])
    rx = (10.0, 10.0, 10.0)
    tx = (10.0, 90.0, 10.0)
    paths = reflection_paths(rx, tx, scene, max_bounces=2)
    two = [p for p in paths if p.bounces == 2]
    # one even-bounce path per wall ordering: left-right and right-left
    assert len(two) == 2
    want_len = math.sqrt(40.0**2 + 80.0**2)
    hit = [p for p in two if p.vertices[2] == pytest.approx((0.0, 30.0, 10.0))]
    assert len(hit) == 1
    assert hit[0].total_length == pytest.approx(want_len, rel=1e-12)
    assert hit[0].vertices[1] == pytest.approx((20.0, 70.0, 10.0))
    singles = [p for p in paths if p.bounces == 1]
    assert len(singles) == 2


def test_path_loss_adds_material_to_fspl():
    scene = _box_scene([(-10.0, 0.0, 0.0, 100.0)])
    rx = (10.0, 10.0, 10.0)
    tx = (10.0, 90.0, 10.0)
    (single,) = reflection_paths(rx, tx, scene, max_bounces=1)
    loss = path_loss(single, 2.0e9, scene)
    fspl = (
        20.0 * math.log10(single.total_length)
        + 20.0 * math.log10(2.0e9)
        - 147.55
    )
    assert loss == pytest.approx(fspl + 8.0, abs=1e-9)
    scene.materials.clear()
    with pytest.raises(ValueError):
        path_loss(single, 2.0e9, scene)


def test_reflection_paths_with_frequency_fill_total_loss():
    scene = _box_scene([(-10.0, 0.0, 0.0, 100.0)])
    rx = (10.0, 10.0, 10.0)
    tx = (10.0, 90.0, 10.0)
    (p,) = reflection_paths(rx, tx, scene, max_bounces=1, frequency_hz=2.0e9)
    assert p.path_loss_db == pytest.approx(path_loss(p, 2.0e9, scene), abs=1e-9)


def test_build_cir_normalizes_sorts_and_thresholds():
    scene = _box_scene([(-10.0, 0.0, 0.0, 100.0), (20.0, 0.0, 30.0, 100.0)])
    rx = (10.0, 10.0, 10.0)
    tx = (10.0, 90.0, 10.0)
    paths = [los_path(rx, tx)] + reflection_paths(rx, tx, scene, max_bounces=2)
    cir = build_cir(paths, 2.0e9, loss_threshold_db=200.0)
    alphas = cir.amplitudes
    delays = cir.delays_s
    assert alphas[0] == 1.0
    assert all(a <= 1.0 + 1e-12 for a in alphas)
    assert all(d1 >= d0 for d0, d1 in zip(delays, delays[1:]))
    assert len(cir.components) == len(paths)
    # tight threshold keeps only the direct component
    direct_loss = 20.0 * math.log10(80.0) + 20.0 * math.log10(2.0e9) - 147.55
    lone = build_cir(paths, 2.0e9, loss_threshold_db=direct_loss + 1.0)
    assert len(lone.components) == 1
    with pytest.raises(NoCoverageError):
        build_cir(paths, 2.0e9, loss_threshold_db=10.0)


def test_cir_constructor_rejects_malformed_components():
    good = ChannelImpulseResponse(components=((1.0, 1e-6), (0.5, 2e-6)))
    assert good.first_delay_s == 1e-6
    with pytest.raises(ValueError):
        ChannelImpulseResponse(components=())
    with pytest.raises(ValueError):
        ChannelImpulseResponse(components=((0.9, 1e-6),))
    with pytest.raises(ValueError):
        ChannelImpulseResponse(components=((1.0, 2e-6), (0.5, 1e-6)))
    with pytest.raises(ValueError):
        ChannelImpulseResponse(components=((1.0, 1e-6), (-0.1, 2e-6)))


def test_pack_scene_caches_tables():
    scene = _box_scene([(0.0, 0.0, 10.0, 10.0)])
    assert pack_scene(scene) is pack_scene(scene)
