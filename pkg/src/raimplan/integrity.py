"""Per-node multiple-hypothesis solution-separation integrity.

Given the predicted (bias-carrying, noise-free) pseudoranges at a route node,
this module forms the all-in-view WLS estimator and one fault-tolerant
estimator per excluded-measurement subset, flags the node as faulty when any
horizontal solution separation exceeds its detection threshold, and folds
missed-detection quantiles, nominal biases and thresholds into east/north
protection levels whose root-sum-square is the node HPL.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .pseudorange import (
    ReceiverState,
    SignalConfig,
    predict_node,
)
from .world import SceneModel, ScheduleEntry, distance3


class InsufficientRedundancyError(ValueError):
    """Fewer measurements than the 4-state WLS plus one redundant ranges."""


class DegenerateGeometryError(RuntimeError):
    """Normal-equation matrix is singular (e.g., coplanar transmitters)."""


# ---------------------------------------------------------------------------
# standard normal quantile


_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LN_2PI = math.log(2.0 * math.pi)


def _normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF, accurate to well under 1e-9.

    Seeded with an asymptotic tail expansion (or a linear center step) and
    polished with Newton iterations on erfc, which keeps full double accuracy
    even for p down to ~1e-300.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument {p} outside (0, 1)")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -normal_quantile(1.0 - p)
    if p < 0.02425:
        t = math.sqrt(-2.0 * math.log(p))
        x = -(t - (math.log(t * t) + _LN_2PI) / (2.0 * t))
    else:
        x = (p - 0.5) * _SQRT_2PI
    for _ in range(12):
        err = _normal_cdf(x) - p
        pdf = math.exp(-0.5 * x * x) / _SQRT_2PI
        if pdf == 0.0:
            break
        step = err / pdf
        x -= step
        if abs(step) < 1e-15 * (1.0 + abs(x)):
            break
    return x


def _k_factor(p: float) -> float:
    """-Q^{-1}(p): positive sigma multiplier for a tail probability p < 0.5."""
    return -normal_quantile(p)


# ---------------------------------------------------------------------------
# parameters and modes


@dataclass(frozen=True)
class IntegrityParams:
    """Integrity budget and planning constraints (benchmark defaults)."""

    nominal_bias_m: float = 0.5
    p_hmi: float = 0.01
    p_fault_single: float = 2e-4
    max_faults: int = 3
    max_fault_ratio: float = 0.15
    hal_m: float = 40.0
    p_false_alert: float = 0.01

    def __post_init__(self):
        for name in ("p_hmi", "p_fault_single", "p_false_alert"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name}={v} outside (0, 1)")
        if self.nominal_bias_m < 0.0:
            raise ValueError("nominal_bias_m must be >= 0")
        if self.hal_m <= 0.0:
            raise ValueError("hal_m must be > 0")
        if self.max_faults < 1:
            raise ValueError("max_faults must be >= 1")
        if not 0.0 <= self.max_fault_ratio <= 1.0:
            raise ValueError("max_fault_ratio must be in [0, 1]")


@dataclass(frozen=True)
class FaultMode:
    index: int
    excluded: tuple[int, ...]
    prior: float


@dataclass(frozen=True)
class ModeDiagnostic:
    """Per-mode separation test and protection level (east, north pairs)."""

    mode_index: int
    excluded: tuple[int, ...]
    separation_m: tuple[float, float]
    threshold_m: tuple[float, float]
    pl_m: tuple[float, float]
    k_md_clamped: bool


@dataclass
class NodeIntegrityResult:
    node_id: str
    epoch: float
    hpl_m: float
    fault: bool
    n_gps: int
    n_lte: int
    per_mode: list[ModeDiagnostic] = field(default_factory=list)
    # the measurements behind the result, for dumps and reports
    gps_measurements: list = field(default_factory=list)
    lte_measurements: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# estimators


def build_geometry(azels: list[tuple[float, float]]) -> np.ndarray:
    """Rows [-cosEl sinAz, -cosEl cosAz, -sinEl, 1] for each (az, el)."""
    if len(azels) < 5:
        raise InsufficientRedundancyError(
            f"{len(azels)} measurements; at least 5 required"
        )
    g = np.empty((len(azels), 4), dtype=np.float64)
    for i, (az, el) in enumerate(azels):
        cel = math.cos(el)
        g[i] = (-cel * math.sin(az), -cel * math.cos(az), -math.sin(el), 1.0)
    return g


def wls_solution(
    geometry: np.ndarray,
    weights: np.ndarray,
    excluded: tuple[int, ...] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """WLS state operator and east/north sigmas, optionally excluding rows.

    Returns (S, sigma) with S of shape (4, n) mapping pseudorange residuals
    to [east, north, up, clock] deltas (excluded columns zero), and sigma the
    square roots of the first two covariance diagonal entries.
    """
    w = np.asarray(weights, dtype=np.float64).copy()
    if excluded:
        w[list(excluded)] = 0.0
    wg = w[:, None] * geometry
    normal = geometry.T @ wg
    try:
        cov = np.linalg.inv(normal)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError(f"singular geometry: {exc}") from exc
    if not np.all(np.isfinite(cov)):
        raise DegenerateGeometryError("non-finite WLS covariance")
    s = cov @ wg.T
    sigma = np.sqrt(np.array([cov[0, 0], cov[1, 1]]))
    return s, sigma


def enumerate_fault_modes(
    n_meas: int, max_faults: int, p_fault_single: float
) -> list[FaultMode]:
    """All excluded subsets of size 1..max_faults leaving >= 5 measurements.

    Ordered lexicographically by excluded indices within ascending size; a
    size-k subset has prior p_fault_single**k (independent faults).
    """
    if n_meas < 5:
        raise InsufficientRedundancyError(
            f"{n_meas} measurements; at least 5 required"
        )
    modes = []
    for k in range(1, max_faults + 1):
        if n_meas - k < 5:
            break
        prior = p_fault_single**k
        for excl in itertools.combinations(range(n_meas), k):
            modes.append(FaultMode(index=len(modes), excluded=excl, prior=prior))
    return modes


def _mode_solutions(geometry, weights, modes):
    """All-in-view and per-mode (S, sigma) pairs, computed once."""
    base = wls_solution(geometry, weights)
    return base, [wls_solution(geometry, weights, m.excluded) for m in modes]


def detection_threshold(
    mode: FaultMode,
    geometry: np.ndarray,
    weights: np.ndarray,
    params: IntegrityParams,
    n_modes: int,
    solutions=None,
) -> np.ndarray:
    """East/north separation thresholds K_fa * sigma_ss for one mode.

    sigma_ss is the standard deviation of the separation between the subset
    and all-in-view solutions under fault-free noise; K_fa spreads the false
    alert budget evenly over modes and the two horizontal axes.
    """
    if solutions is None:
        solutions = _mode_solutions(geometry, weights, [mode])
        (s0, _), subs = solutions
        s_i = subs[0][0]
    else:
        (s0, _), subs = solutions
        s_i = subs[mode.index][0]
    k_fa = _k_factor(params.p_false_alert / (4.0 * n_modes))
    diff = s_i - s0
    var = np.einsum("qj,j,qj->q", diff[:2], 1.0 / np.asarray(weights), diff[:2])
    return k_fa * np.sqrt(var)


def predict_fault(
    residuals: np.ndarray,
    geometry: np.ndarray,
    weights: np.ndarray,
    params: IntegrityParams,
    modes: list[FaultMode] | None = None,
    solutions=None,
) -> tuple[bool, list[tuple[np.ndarray, np.ndarray]]]:
    """Solution-separation exclusion test over every fault mode.

    residuals are predicted-minus-geometric pseudoranges (biases included,
    noise-free).  Returns the fault flag (any axis of any mode separated
    beyond its threshold) and per-mode (separation, threshold) pairs.
    """
    if modes is None:
        modes = enumerate_fault_modes(
            len(residuals), params.max_faults, params.p_fault_single
        )
    if solutions is None:
        solutions = _mode_solutions(geometry, weights, modes)
    (s0, _), subs = solutions
    base_xy = s0[:2] @ residuals
    fault = False
    rows = []
    for mode, (s_i, _) in zip(modes, subs):
        sep = np.abs(s_i[:2] @ residuals - base_xy)
        thr = detection_threshold(
            mode, geometry, weights, params, len(modes), solutions
        )
        if np.any(sep > thr):
            fault = True
        rows.append((sep, thr))
    return fault, rows


def protection_levels(
    geometry: np.ndarray,
    weights: np.ndarray,
    modes: list[FaultMode],
    params: IntegrityParams,
    solutions=None,
) -> tuple[np.ndarray, np.ndarray, list[tuple[np.ndarray, bool]]]:
    """East/north protection levels over the fault-free case and all modes.

    Returns (pl, pl_fault_free, per_mode) where pl is the elementwise max.
    Fault-free: K0_md * sigma0 + sum_j |S0_qj| * b_int.  Mode i adds its
    detection threshold and uses a missed-detection quantile inflated by the
    mode prior; when that quantile argument reaches 0.5 the K factor clamps
    to zero and the flag in per_mode records it.
    """
    if solutions is None:
        solutions = _mode_solutions(geometry, weights, modes)
    (s0, sigma0), subs = solutions
    n_modes = len(modes)
    denom = 4.0 * (n_modes + 1.0)
    k0_md = _k_factor(params.p_hmi / denom)
    bias0 = params.nominal_bias_m * np.abs(s0[:2]).sum(axis=1)
    pl_ff = k0_md * sigma0 + bias0
    pl = pl_ff.copy()
    per_mode = []
    for mode, (s_i, sigma_i) in zip(modes, subs):
        arg = params.p_hmi / (denom * mode.prior)
        clamped = arg >= 0.5
        k_md = 0.0 if clamped else _k_factor(arg)
        thr = detection_threshold(
            mode, geometry, weights, params, n_modes, solutions
        )
        bias_i = params.nominal_bias_m * np.abs(s_i[:2]).sum(axis=1)
        pl_i = k_md * sigma_i + bias_i + thr
        pl = np.maximum(pl, pl_i)
        per_mode.append((pl_i, clamped))
    return pl, pl_ff, per_mode


def hpl(pl_east: float, pl_north: float) -> float:
    """Horizontal protection level, root-sum-square of the two axes."""
    if pl_east < 0.0 or pl_north < 0.0:
        raise ValueError("protection levels must be non-negative")
    return math.hypot(pl_east, pl_north)


def evaluate_node(
    entry: ScheduleEntry,
    scene: SceneModel,
    params: IntegrityParams | None = None,
    signal: SignalConfig | None = None,
) -> NodeIntegrityResult:
    """Full integrity chain at one schedule entry.

    Predicts all GPS/LTE measurements, then runs the separation test and
    protection levels.  Nodes with fewer than 5 usable measurements get the
    conservative result (infinite HPL, fault flagged) instead of an error.
    """
    params = params if params is not None else IntegrityParams()
    signal = signal if signal is not None else SignalConfig()
    state = ReceiverState(
        position=entry.position,
        clock_bias_s=signal.receiver_clock_bias_s,
        node_id=entry.node_id,
    )
    gps, lte = predict_node(state, scene, entry.epoch, signal)
    n_meas = len(gps) + len(lte)
    if n_meas < 5:
        return NodeIntegrityResult(
            node_id=entry.node_id,
            epoch=entry.epoch,
            hpl_m=math.inf,
            fault=True,
            n_gps=len(gps),
            n_lte=len(lte),
            gps_measurements=gps,
            lte_measurements=lte,
        )
    azels = [(m.azimuth_rad, m.elevation_rad) for m in gps]
    azels += [(m.azimuth_rad, m.elevation_rad) for m in lte]
    geometry = build_geometry(azels)
    sigmas = np.array([m.sigma_m for m in gps] + [m.sigma_m for m in lte])
    weights = 1.0 / sigmas**2
    sat_pos = {s.id: s.position_at(entry.epoch) for s in scene.gps_satellites}
    residuals = np.array(
        [m.pseudorange_m - distance3(entry.position, sat_pos[m.sat_id]) for m in gps]
        + [
            m.pseudorange_m
            - distance3(
                entry.position,
                next(b for b in scene.lte_base_stations if b.id == m.bs_id).position,
            )
            for m in lte
        ]
    )
    modes = enumerate_fault_modes(n_meas, params.max_faults, params.p_fault_single)
    solutions = _mode_solutions(geometry, weights, modes)
    fault, sep_rows = predict_fault(
        residuals, geometry, weights, params, modes, solutions
    )
    pl, _, mode_pls = protection_levels(geometry, weights, modes, params, solutions)
    diagnostics = [
        ModeDiagnostic(
            mode_index=mode.index,
            excluded=mode.excluded,
            separation_m=(float(sep[0]), float(sep[1])),
            threshold_m=(float(thr[0]), float(thr[1])),
            pl_m=(float(pl_i[0]), float(pl_i[1])),
            k_md_clamped=clamped,
        )
        for mode, (sep, thr), (pl_i, clamped) in zip(modes, sep_rows, mode_pls)
    ]
    return NodeIntegrityResult(
        node_id=entry.node_id,
        epoch=entry.epoch,
        hpl_m=hpl(float(pl[0]), float(pl[1])),
        fault=fault,
        n_gps=len(gps),
        n_lte=len(lte),
        per_mode=diagnostics,
        gps_measurements=gps,
        lte_measurements=lte,
    )
