"""Discriminator terms, noise models, and per-transmitter range prediction."""

import math

import numpy as np
import pytest

from oracles import naive_cross_distortion, naive_self_distortion
from raimplan.constants import SPEED_OF_LIGHT
from raimplan.pseudorange import (
    DiscriminatorConfig,
    ReceiverState,
    SigmaModel,
    SignalConfig,
    assign_sigma,
    multipath_bias,
    multipath_cross_distortion,
    multipath_self_distortion,
    nlos_bias,
    predict_gps,
    predict_lte,
    predict_node,
)
from raimplan.raytrace import ChannelImpulseResponse
from raimplan.world import (
    Building,
    GpsSatellite,
    LteBaseStation,
    RoadGraph,
    SceneModel,
    distance3,
)


def _random_cir(rng) -> ChannelImpulseResponse:
    n_extra = int(rng.integers(0, 5))
    tau0 = float(rng.uniform(1e-6, 5e-6))
    taus = sorted(float(rng.uniform(0.0, 2e-6)) for _ in range(n_extra))
    comps = [(1.0, tau0)] + [
        (float(rng.uniform(0.05, 1.0)), tau0 + t) for t in taus
    ]
    return ChannelImpulseResponse(components=tuple(comps))


def _random_cfg(rng) -> DiscriminatorConfig:
    return DiscriminatorConfig(
        crs_subcarriers=int(rng.integers(16, 257)),
        total_subcarriers=2048,
        subcarrier_spacing_hz=15000.0,
        time_shift=float(rng.uniform(0.05, 0.95)),
        symbol_error=float(rng.uniform(-0.3, 0.3)),
        power_scale=float(rng.uniform(0.5, 2.0)),
    )


def test_distortions_match_naive_summation_oracle():
    """Closed-form kernels equal literal subcarrier sums to 1e-9 relative."""
    rng = np.random.default_rng(29)
    for _ in range(150):
        cir = _random_cir(rng)
        cfg = _random_cfg(rng)
        for impl, oracle in (
            (multipath_self_distortion, naive_self_distortion),
            (multipath_cross_distortion, naive_cross_distortion),
        ):
            got = impl(cir, cfg)
            want = oracle(cir, cfg)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_distortions_zero_for_single_tap():
    cfg = DiscriminatorConfig()
    cir = ChannelImpulseResponse(components=((1.0, 2.5e-6),))
    assert multipath_self_distortion(cir, cfg) == 0.0
    assert multipath_cross_distortion(cir, cfg) == 0.0


def test_distortion_half_sample_echo_known_value():
    """An echo at half a sample with gain 0.5 yields exactly B*B/4."""
    cfg = DiscriminatorConfig()  # B = 200, xi = 0.5, C = 1
    ts = cfg.sample_interval_s
    cir = ChannelImpulseResponse(components=((1.0, 1e-6), (0.5, 1e-6 + 0.5 * ts)))
    assert multipath_self_distortion(cir, cfg) == pytest.approx(10000.0, abs=1e-6)
    cross = multipath_cross_distortion(cir, cfg)
    assert cross == pytest.approx(naive_cross_distortion(cir, cfg), rel=1e-12)


def test_multipath_bias_exact_zero_for_pure_los():
    cfg = DiscriminatorConfig()
    for rng_m in (123.456, 5432.1, 987654.3):
        cir = ChannelImpulseResponse(components=((1.0, rng_m / SPEED_OF_LIGHT),))
        assert multipath_bias(cir, rng_m, cfg) == 0.0


def test_multipath_bias_reflected_only_equals_excess():
    cfg = DiscriminatorConfig()
    cir = ChannelImpulseResponse(components=((1.0, 360.0 / SPEED_OF_LIGHT),))
    assert multipath_bias(cir, 300.0, cfg) == pytest.approx(60.0, rel=1e-12)


def test_nlos_bias_difference_and_guard():
    assert nlos_bias(300.0, 360.0) == pytest.approx(60.0)
    assert nlos_bias(250.0, 250.0) == 0.0
    with pytest.raises(ValueError):
        nlos_bias(300.0, 299.0)


def test_sigma_model_formulas():
    model = SigmaModel()
    zenith = assign_sigma("gps", math.pi / 2, model)
    assert zenith == pytest.approx(1.5 + 4.0 * math.exp(-(math.pi / 2) / 0.262))
    horizon = assign_sigma("gps", 0.0, model)
    assert horizon == pytest.approx(5.5)
    assert assign_sigma("lte", 0.1, model) == 5.0
    with pytest.raises(ValueError):
        assign_sigma("gps", -0.1, model)
    with pytest.raises(ValueError):
        assign_sigma("doppler", 0.5, model)


def _canyon_scene() -> SceneModel:
    """A street flanked by two long prisms, receiver on the centerline."""
    return SceneModel(
        name="canyon",
        ground_elevation=0.0,
        materials={"concrete": 6.0},
        buildings=[
            Building("north", [(-200.0, 15.0), (200.0, 15.0), (200.0, 45.0), (-200.0, 45.0)], 50.0, "concrete"),
            Building("south", [(-200.0, -45.0), (200.0, -45.0), (200.0, -15.0), (-200.0, -15.0)], 50.0, "concrete"),
        ],
        graph=RoadGraph(nodes={"o": (0.0, 0.0, 0.0)}, edges=[]),
        gps_satellites=[
            GpsSatellite("CROSS", [(0.0, _enu(0.0, 60.0))]),
            GpsSatellite("ALONG", [(0.0, _enu(90.0, 45.0))]),
            GpsSatellite("LOW", [(0.0, _enu(10.0, 8.0))]),
        ],
        lte_base_stations=[
            LteBaseStation("MAST", (300.0, 0.0, 40.0), 2.1e9, 43.0),
        ],
        routes={},
    )


def _enu(az_deg: float, el_deg: float, rng: float = 2.2e7):
    az = math.radians(az_deg)
    el = math.radians(el_deg)
    return (
        rng * math.cos(el) * math.sin(az),
        rng * math.cos(el) * math.cos(az),
        rng * math.sin(el),
    )


def test_predict_gps_los_blocked_and_invisible():
    scene = _canyon_scene()
    node = ReceiverState(position=(0.0, 0.0, 0.0), clock_bias_s=1e-7, node_id="o")
    sats = {s.id: s for s in scene.gps_satellites}

    along = predict_gps(node, sats["ALONG"], 0.0, scene)
    assert along is not None and along.is_los
    assert along.nlos_bias_m == 0.0
    want = distance3(node.position, sats["ALONG"].position_at(0.0))
    assert along.pseudorange_m == pytest.approx(want + SPEED_OF_LIGHT * 1e-7)

    cross = predict_gps(node, sats["CROSS"], 0.0, scene)
    assert cross is not None and not cross.is_los
    # only bounce is off the south wall at y=-15: mirror the satellite there
    sx, sy, sz = sats["CROSS"].position_at(0.0)
    direct = distance3(node.position, (sx, sy, sz))
    mirrored = distance3(node.position, (sx, -30.0 - sy, sz))
    assert cross.nlos_bias_m == pytest.approx(mirrored - direct, rel=1e-9)
    # far-field limit of that excess is 2 * 15 * cos(60 deg) = 15
    assert cross.nlos_bias_m == pytest.approx(15.0, rel=1e-4)
    assert cross.pseudorange_m == pytest.approx(
        direct + SPEED_OF_LIGHT * 1e-7 + cross.nlos_bias_m
    )

    low = predict_gps(node, sats["LOW"], 0.0, scene)
    assert low is None


def test_predict_lte_corridor_multipath():
    """A down-street mast keeps LOS but picks up wall echoes."""
    scene = _canyon_scene()
    node = ReceiverState(position=(0.0, 0.0, 0.0), node_id="o")
    mast = scene.lte_base_stations[0]
    m = predict_lte(node, mast, scene)
    assert m is not None and m.is_los
    assert m.mp_bias_m != 0.0  # echoes distort the discriminator


def test_predict_lte_nlos_single_echo_and_threshold():
    """Behind the wall only one bounce survives, so the bias is pure excess."""
    scene = _canyon_scene()
    node = ReceiverState(position=(0.0, 0.0, 0.0), node_id="o")
    far = LteBaseStation("FAR", (900.0, 120.0, 40.0), 2.1e9, 43.0)

    m = predict_lte(node, far, scene)
    assert m is not None and not m.is_los
    direct = distance3(node.position, far.position)
    mirrored = distance3(node.position, (900.0, -150.0, 40.0))
    assert m.mp_bias_m == pytest.approx(mirrored - direct, rel=1e-9)
    assert m.pseudorange_m == pytest.approx(direct + m.mp_bias_m)

    # a tight loss budget removes coverage entirely
    assert predict_lte(node, far, scene, loss_threshold_db=50.0) is None

    # open sky: a single-tap LOS service has exactly zero bias
    open_scene = _canyon_scene()
    open_scene.buildings.clear()
    n = predict_lte(node, far, open_scene)
    assert n is not None and n.is_los
    assert n.mp_bias_m == 0.0
    assert n.pseudorange_m == distance3(node.position, far.position)


def test_predict_node_orders_and_counts():
    scene = _canyon_scene()
    state = ReceiverState(position=(0.0, 0.0, 0.0), node_id="o")
    gps, lte = predict_node(state, scene, 0.0, SignalConfig())
    assert [m.sat_id for m in gps] == ["CROSS", "ALONG"]
    assert [m.bs_id for m in lte] == ["MAST"]


def test_noise_keyed_by_seed_node_and_transmitter():
    """Same key reproduces; any key component change decorrelates."""
    scene = _canyon_scene()
    scene.buildings.clear()
    sat = scene.gps_satellites[1]
    a = ReceiverState(position=(0.0, 0.0, 0.0), node_id="n1")
    b = ReceiverState(position=(0.0, 0.0, 0.0), node_id="n2")

    one = predict_gps(a, sat, 0.0, scene, noise_seed=7)
    two = predict_gps(a, sat, 0.0, scene, noise_seed=7)
    assert one.pseudorange_m == two.pseudorange_m
    assert one.pseudorange_m != predict_gps(a, sat, 0.0, scene).pseudorange_m

    other_seed = predict_gps(a, sat, 0.0, scene, noise_seed=8)
    other_node = predict_gps(b, sat, 0.0, scene, noise_seed=7)
    assert one.pseudorange_m != other_seed.pseudorange_m
    assert one.pseudorange_m != other_node.pseudorange_m


def test_noise_magnitude_tracks_sigma():
    """Empirical noise std over many seeds approaches the assigned sigma."""
    scene = _canyon_scene()
    scene.buildings.clear()
    sat = scene.gps_satellites[1]
    state = ReceiverState(position=(0.0, 0.0, 0.0), node_id="o")
    clean = predict_gps(state, sat, 0.0, scene)
    draws = np.array([
        predict_gps(state, sat, 0.0, scene, noise_seed=s).pseudorange_m - clean.pseudorange_m
        for s in range(400)
    ])
    assert abs(draws.std() - clean.sigma_m) / clean.sigma_m < 0.15
    assert abs(draws.mean()) < clean.sigma_m
