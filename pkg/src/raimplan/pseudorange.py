"""Per-node GPS and LTE pseudorange prediction.

GPS measurements get a pure geometric NLOS excess (reflected minus direct
length) when the direct ray is blocked.  LTE measurements get a signed
multipath bias from a code-phase discriminator model driven by the ray-traced
CIR: the first-arrival delay error plus two distortion terms (the squared
multipath self term and the LOS-multipath cross term).
"""

from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .constants import SPEED_OF_LIGHT
from .raytrace import (
    ChannelImpulseResponse,
    NoCoverageError,
    build_cir,
    los_blocked,
    los_path,
    reflection_paths,
)
from .world import (
    GpsSatellite,
    LteBaseStation,
    Point3,
    SceneModel,
    azimuth_elevation,
    distance3,
)


@dataclass(frozen=True)
class ReceiverState:
    """Receiver position (ENU meters) and clock bias; node_id keys noise."""

    position: Point3
    clock_bias_s: float = 0.0
    node_id: str = ""


@dataclass(frozen=True)
class GpsMeasurement:
    sat_id: str
    pseudorange_m: float
    sigma_m: float
    nlos_bias_m: float
    is_los: bool
    azimuth_rad: float
    elevation_rad: float


@dataclass(frozen=True)
class LteMeasurement:
    bs_id: str
    pseudorange_m: float
    sigma_m: float
    mp_bias_m: float  # signed discriminator distortion
    is_los: bool
    azimuth_rad: float
    elevation_rad: float


@dataclass(frozen=True)
class DiscriminatorConfig:
    """OFDM code-phase discriminator parameters (20 MHz LTE defaults)."""

    crs_subcarriers: int = 200
    total_subcarriers: int = 2048
    subcarrier_spacing_hz: float = 15_000.0
    time_shift: float = 0.5
    symbol_error: float = 0.0
    power_scale: float = 1.0

    @property
    def sample_interval_s(self) -> float:
        # 1 / (subcarrier spacing * total subcarriers)
        return 1.0 / (self.subcarrier_spacing_hz * self.total_subcarriers)


@dataclass(frozen=True)
class SigmaModel:
    """Measurement standard deviations (declared model, fully configurable)."""

    gps_floor_m: float = 1.5
    gps_scale_m: float = 4.0
    gps_decay_rad: float = 0.262
    lte_sigma_m: float = 5.0


_DEFAULT_SIGMA = SigmaModel()
_DEFAULT_DISCRIMINATOR = DiscriminatorConfig()


@dataclass(frozen=True)
class SignalConfig:
    """Everything the per-node predictors need besides the scene itself."""

    sigma: SigmaModel = _DEFAULT_SIGMA
    discriminator: DiscriminatorConfig = _DEFAULT_DISCRIMINATOR
    gps_max_bounces: int = 1
    lte_max_bounces: int = 2
    lte_loss_threshold_db: float = 130.0
    receiver_clock_bias_s: float = 0.0
    # None keeps planning predictions noise-free (biases only)
    noise_seed: int | None = None


def assign_sigma(kind: str, elevation_rad: float, model: SigmaModel | None = None) -> float:
    """Standard deviation for a measurement kind ('gps' or 'lte')."""
    m = model if model is not None else _DEFAULT_SIGMA
    if kind == "gps":
        if not 0.0 <= elevation_rad <= math.pi / 2:
            raise ValueError(f"GPS elevation {elevation_rad} outside [0, pi/2]")
        return m.gps_floor_m + m.gps_scale_m * math.exp(-elevation_rad / m.gps_decay_rad)
    if kind == "lte":
        return m.lte_sigma_m
    raise ValueError(f"unknown measurement kind {kind!r}")


def nlos_bias(direct_m: float, reflected_m: float) -> float:
    """Geometric excess of the reflected path over the direct range."""
    if reflected_m < direct_m:
        raise ValueError(
            f"reflected length {reflected_m} shorter than direct {direct_m}"
        )
    return reflected_m - direct_m


def _crs_kernel(u: float, b_count: int) -> complex:
    """Sum over b = 0..B-1 of exp(-2j*pi*(b/B)*u) in closed form."""
    if u % b_count == 0.0:
        return complex(b_count, 0.0)
    phase = cmath.exp(-1j * math.pi * u * (b_count - 1) / b_count)
    return phase * (math.sin(math.pi * u) / math.sin(math.pi * u / b_count))


def _multipath_sums(
    cir: ChannelImpulseResponse, cfg: DiscriminatorConfig
) -> tuple[complex, complex]:
    """Early/late multipath kernel sums over components after the first."""
    b_count = cfg.crs_subcarriers
    ts = cfg.sample_interval_s
    tau0 = cir.first_delay_s
    early = 0j
    late = 0j
    for alpha, tau in cir.components[1:]:
        u = (tau - tau0) / ts + cfg.symbol_error
        early += alpha * _crs_kernel(u - cfg.time_shift, b_count)
        late += alpha * _crs_kernel(u + cfg.time_shift, b_count)
    return early, late


def multipath_self_distortion(
    cir: ChannelImpulseResponse, cfg: DiscriminatorConfig | None = None
) -> float:
    """Squared-magnitude multipath term of the discriminator (early minus late)."""
    cfg = cfg if cfg is not None else _DEFAULT_DISCRIMINATOR
    early, late = _multipath_sums(cir, cfg)
    return cfg.power_scale * (abs(early) ** 2 - abs(late) ** 2)


def multipath_cross_distortion(
    cir: ChannelImpulseResponse, cfg: DiscriminatorConfig | None = None
) -> float:
    """LOS-multipath cross term of the discriminator (early minus late)."""
    cfg = cfg if cfg is not None else _DEFAULT_DISCRIMINATOR
    early, late = _multipath_sums(cir, cfg)
    b_count = cfg.crs_subcarriers
    e = cfg.symbol_error
    xi = cfg.time_shift
    term_early = (_crs_kernel(e - xi, b_count) * early).real
    term_late = (_crs_kernel(e + xi, b_count) * late).real
    return 2.0 * cfg.power_scale * (term_early - term_late)


def multipath_bias(
    cir: ChannelImpulseResponse,
    true_range_m: float,
    cfg: DiscriminatorConfig | None = None,
) -> float:
    """First-arrival delay error plus both discriminator distortion terms.

    The delay error is formed in the delay domain, (tau0 - range/c) * c, so a
    pure-LOS CIR whose tau0 came from the same range computation yields an
    exact zero.
    """
    cfg = cfg if cfg is not None else _DEFAULT_DISCRIMINATOR
    geometric = (cir.first_delay_s - true_range_m / SPEED_OF_LIGHT) * SPEED_OF_LIGHT
    return (
        geometric
        + multipath_self_distortion(cir, cfg)
        + multipath_cross_distortion(cir, cfg)
    )


def _noise_rng(seed: int, node_id: str, tx_id: str) -> np.random.Generator:
    """Counter-style generator keyed by (seed, node, transmitter).

    Evaluation order (serial or parallel) cannot change any draw because each
    (node, transmitter) pair owns an independent stream.
    """
    node_key = int.from_bytes(hashlib.blake2s(node_id.encode()).digest()[:8], "little")
    tx_key = int.from_bytes(hashlib.blake2s(tx_id.encode()).digest()[:8], "little")
    return np.random.default_rng([seed, node_key, tx_key])


def predict_gps(
    node: ReceiverState,
    sat: GpsSatellite,
    epoch: float,
    scene: SceneModel,
    sigma_model: SigmaModel | None = None,
    max_bounces: int = 1,
    noise_seed: int | None = None,
) -> GpsMeasurement | None:
    """Predicted GPS pseudorange at a node, or None when not visible.

    LOS gives the geometric range (plus receiver clock); a blocked ray falls
    back to the shortest reflected path and carries its length excess as an
    NLOS bias; no path at all means the satellite is not visible.
    """
    rx = node.position
    tx = sat.position_at(epoch)
    az, el = azimuth_elevation(rx, tx)
    direct = distance3(rx, tx)
    sigma = assign_sigma("gps", el, sigma_model)
    if not los_blocked(rx, tx, scene):
        bias = 0.0
        is_los = True
    else:
        paths = reflection_paths(rx, tx, scene, max_bounces)
        if not paths:
            return None
        bias = nlos_bias(direct, paths[0].total_length)
        is_los = False
    pseudorange = direct + SPEED_OF_LIGHT * node.clock_bias_s + bias
    if noise_seed is not None:
        pseudorange += _noise_rng(noise_seed, node.node_id, sat.id).normal(0.0, sigma)
    return GpsMeasurement(
        sat_id=sat.id,
        pseudorange_m=pseudorange,
        sigma_m=sigma,
        nlos_bias_m=bias,
        is_los=is_los,
        azimuth_rad=az,
        elevation_rad=el,
    )


def predict_lte(
    node: ReceiverState,
    bs: LteBaseStation,
    scene: SceneModel,
    cfg: DiscriminatorConfig | None = None,
    sigma_model: SigmaModel | None = None,
    max_bounces: int = 2,
    loss_threshold_db: float = 130.0,
    noise_seed: int | None = None,
) -> LteMeasurement | None:
    """Predicted LTE pseudorange at a node, or None when out of coverage.

    Traces LOS plus reflections, assembles the CIR under the loss threshold
    and applies the discriminator bias to the true range.
    """
    cfg = cfg if cfg is not None else _DEFAULT_DISCRIMINATOR
    rx = node.position
    tx = bs.position
    az, el = azimuth_elevation(rx, tx)
    true_range = distance3(rx, tx)
    freq = bs.carrier_frequency_hz
    paths = []
    los_kept = False
    if not los_blocked(rx, tx, scene):
        direct = los_path(rx, tx, freq)
        los_kept = direct.path_loss_db <= loss_threshold_db
        paths.append(direct)
    paths.extend(reflection_paths(rx, tx, scene, max_bounces, freq))
    try:
        cir = build_cir(paths, freq, loss_threshold_db)
    except NoCoverageError:
        return None
    bias = multipath_bias(cir, true_range, cfg)
    sigma = assign_sigma("lte", el, sigma_model)
    pseudorange = true_range + SPEED_OF_LIGHT * node.clock_bias_s + bias
    if noise_seed is not None:
        pseudorange += _noise_rng(noise_seed, node.node_id, bs.id).normal(0.0, sigma)
    return LteMeasurement(
        bs_id=bs.id,
        pseudorange_m=pseudorange,
        sigma_m=sigma,
        mp_bias_m=bias,
        is_los=los_kept,
        azimuth_rad=az,
        elevation_rad=el,
    )


def predict_node(
    state: ReceiverState,
    scene: SceneModel,
    epoch: float,
    signal: SignalConfig | None = None,
) -> tuple[list[GpsMeasurement], list[LteMeasurement]]:
    """All usable measurements at one node, GPS first then LTE.

    Transmitters that are not visible (GPS) or out of coverage (LTE) are
    simply omitted; ordering follows the scene's transmitter lists.
    """
    signal = signal if signal is not None else SignalConfig()
    gps = []
    for sat in scene.gps_satellites:
        m = predict_gps(
            state,
            sat,
            epoch,
            scene,
            sigma_model=signal.sigma,
            max_bounces=signal.gps_max_bounces,
            noise_seed=signal.noise_seed,
        )
        if m is not None:
            gps.append(m)
    lte = []
    for bs in scene.lte_base_stations:
        m = predict_lte(
            state,
            bs,
            scene,
            cfg=signal.discriminator,
            sigma_model=signal.sigma,
            max_bounces=signal.lte_max_bounces,
            loss_threshold_db=signal.lte_loss_threshold_db,
            noise_seed=signal.noise_seed,
        )
        if m is not None:
            lte.append(m)
    return gps, lte
