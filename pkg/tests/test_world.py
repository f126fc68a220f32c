"""Scene schema, geometry helpers, and drive-schedule behavior."""

import math

import numpy as np
import pytest

from raimplan.world import (
    Building,
    GpsSatellite,
    LteBaseStation,
    RoadGraph,
    SceneModel,
    SceneValidationError,
    azimuth_elevation,
    distance3,
    load_scene,
    parse_scene,
    save_scene,
    scene_to_dict,
    schedule_nodes,
    validate_scene,
)


def _tiny_scene() -> SceneModel:
    return SceneModel(
        name="tiny",
        ground_elevation=0.0,
        materials={"brick": 8.0},
        buildings=[Building("b0", [(10, 0), (20, 0), (20, 5), (10, 5)], 12.0, "brick")],
        graph=RoadGraph(
            nodes={"a": (0.0, 0.0, 0.0), "b": (100.0, 0.0, 0.0)},
            edges=[("a", "b", 100.0)],
        ),
        gps_satellites=[
            GpsSatellite("G01", [(0.0, (0.0, 1e7, 1e7)), (100.0, (1.0, 1e7, 1e7))])
        ],
        lte_base_stations=[LteBaseStation("L01", (50.0, 60.0, 30.0), 2.1e9, 43.0)],
        routes={"direct": ["a", "b"]},
    )


def test_round_trip_preserves_scene():
    """to-dict then parse reproduces every field."""
    scene = _tiny_scene()
    back = parse_scene(scene_to_dict(scene)["scene"])
    assert scene_to_dict(back) == scene_to_dict(scene)
    validate_scene(back)


def test_save_load_round_trip(tmp_path):
    scene = _tiny_scene()
    save_scene(scene, tmp_path / "scene.yaml")
    back = load_scene(tmp_path / "scene.yaml")
    assert scene_to_dict(back) == scene_to_dict(scene)


def test_edge_length_defaults_to_euclidean():
    """A two-element edge row takes the node-distance as its length."""
    raw = scene_to_dict(_tiny_scene())
    raw["scene"]["graph"]["edges"] = [["a", "b"]]
    scene = parse_scene(raw["scene"])
    assert scene.graph.edge_length("a", "b") == pytest.approx(100.0)
    assert scene.graph.edge_length("b", "a") == pytest.approx(100.0)


def test_validate_rejects_bad_scenes():
    def corrupt(mutate):
        raw = scene_to_dict(_tiny_scene())
        mutate(raw["scene"])
        with pytest.raises(SceneValidationError):
            validate_scene(parse_scene(raw["scene"]))

    corrupt(lambda s: s["buildings"][0].__setitem__("material", "glass"))
    corrupt(lambda s: s["buildings"][0].__setitem__("height", -3.0))
    corrupt(lambda s: s["buildings"][0].__setitem__(
        "footprint", [[10, 0], [10, 5], [20, 5], [20, 0]]))  # clockwise
    corrupt(lambda s: s["graph"]["edges"].append(["a", "zzz", 5.0]))
    corrupt(lambda s: s["routes"].__setitem__("broken", ["a", "b", "a"]))
    corrupt(lambda s: s["gps_satellites"][0].__setitem__("positions", []))


def test_azimuth_elevation_cardinal_directions():
    rx = (0.0, 0.0, 0.0)
    az, el = azimuth_elevation(rx, (0.0, 100.0, 0.0))
    assert az == pytest.approx(0.0)
    assert el == pytest.approx(0.0)
    az, el = azimuth_elevation(rx, (100.0, 0.0, 0.0))
    assert az == pytest.approx(math.pi / 2)
    az, el = azimuth_elevation(rx, (0.0, 0.0, 50.0))
    assert el == pytest.approx(math.pi / 2)
    az, el = azimuth_elevation(rx, (30.0, 30.0, 30.0 * math.sqrt(2.0)))
    assert az == pytest.approx(math.pi / 4)
    assert el == pytest.approx(math.pi / 4)


def test_satellite_interpolation_linear_and_clamped():
    sat = GpsSatellite("G01", [(0.0, (0.0, 0.0, 0.0)), (10.0, (10.0, 20.0, 30.0))])
    assert sat.position_at(5.0) == pytest.approx((5.0, 10.0, 15.0))
    assert sat.position_at(-4.0) == pytest.approx((0.0, 0.0, 0.0))
    assert sat.position_at(25.0) == pytest.approx((10.0, 20.0, 30.0))


def test_schedule_spacing_and_epochs():
    """Inserted nodes respect max spacing; epochs follow distance at speed."""
    scene = _tiny_scene()
    sched = schedule_nodes(scene.graph, ["a", "b"], speed=10.0, spacing=25.0)
    entries = sched.entries
    assert entries[0].node_id == "a" and entries[-1].node_id == "b"
    for prev, cur in zip(entries, entries[1:]):
        gap = distance3(prev.position, cur.position)
        assert gap <= 25.0 + 1e-9
        assert cur.epoch > prev.epoch
    total = sum(
        distance3(p.position, c.position) for p, c in zip(entries, entries[1:])
    )
    assert total == pytest.approx(100.0)
    assert entries[-1].epoch == pytest.approx(10.0)
    inserted = [e.node_id for e in entries[1:-1]]
    assert inserted == [f"a~b~{i:02d}" for i in range(1, len(inserted) + 1)]


def test_schedule_single_node_and_no_spacing():
    scene = _tiny_scene()
    lone = schedule_nodes(scene.graph, ["a"], speed=5.0, start_epoch=7.0)
    assert len(lone.entries) == 1 and lone.entries[0].epoch == 7.0
    coarse = schedule_nodes(scene.graph, ["a", "b"], speed=10.0, spacing=None)
    assert [e.node_id for e in coarse.entries] == ["a", "b"]


def test_schedule_rejects_bad_input():
    scene = _tiny_scene()
    with pytest.raises(ValueError):
        schedule_nodes(scene.graph, [], speed=10.0)
    with pytest.raises(ValueError):
        schedule_nodes(scene.graph, ["a", "b"], speed=0.0)
    with pytest.raises(ValueError):
        schedule_nodes(scene.graph, ["a", "zzz"], speed=10.0)


def test_distance3_symmetric_and_accurate():
    rng = np.random.default_rng(61)
    for _ in range(200):
        a = tuple(rng.uniform(-1e4, 1e4, size=3))
        b = tuple(rng.uniform(-1e4, 1e4, size=3))
        assert distance3(a, b) == distance3(b, a)
        assert distance3(a, b) == pytest.approx(math.dist(a, b), rel=1e-12)
    assert distance3((1.0, 2.0, 3.0), (1.0, 2.0, 3.0)) == 0.0
