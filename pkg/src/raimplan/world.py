"""Scene model: buildings, road graph, transmitters, and geometric queries.

The scene is loaded from a single YAML document (see ``docs/formats.md``)
and is immutable after loading; all functions here are pure.
"""

import math
from dataclasses import dataclass, field

import yaml

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]


class SceneFormatError(ValueError):
    """Scene file cannot be parsed into the expected structure."""


class SceneValidationError(ValueError):
    """A scene entity violates one of its invariants."""


@dataclass
class Building:
    id: str
    footprint: list[Point2]  # CCW, simple polygon
    height: float
    material: str


@dataclass
class RoadGraph:
    nodes: dict[str, Point3]
    edges: list[tuple[str, str, float]]

    def edge_length(self, a: str, b: str) -> float:
        """Stored length of the edge a-b (either direction)."""
        for u, v, length in self.edges:
            if (u, v) == (a, b) or (u, v) == (b, a):
                return length
        raise KeyError(f"no edge between {a!r} and {b!r}")

    def has_edge(self, a: str, b: str) -> bool:
        return any((u, v) in ((a, b), (b, a)) for u, v, _ in self.edges)

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for u, v, length in self.edges:
            g.add_edge(u, v, weight=length)
        return g


@dataclass
class GpsSatellite:
    id: str
    # (epoch_s, position) rows with strictly increasing epochs
    positions: list[tuple[float, Point3]]

    def position_at(self, epoch: float) -> Point3:
        """Position at ``epoch``, linearly interpolated between table rows.

        Outside the tabulated span the nearest endpoint is held (no orbit
        extrapolation).
        """
        rows = self.positions
        if epoch <= rows[0][0]:
            return rows[0][1]
        if epoch >= rows[-1][0]:
            return rows[-1][1]
        for (t0, p0), (t1, p1) in zip(rows, rows[1:]):
            if t0 <= epoch <= t1:
                w = (epoch - t0) / (t1 - t0)
                return (
                    p0[0] + w * (p1[0] - p0[0]),
                    p0[1] + w * (p1[1] - p0[1]),
                    p0[2] + w * (p1[2] - p0[2]),
                )
        raise RuntimeError("unreachable: epoch table not ordered")


@dataclass
class LteBaseStation:
    id: str
    position: Point3
    carrier_frequency_hz: float
    tx_power_dbm: float


@dataclass
class SceneModel:
    name: str
    ground_elevation: float
    materials: dict[str, float]  # name -> reflection loss per bounce [dB]
    buildings: list[Building]
    graph: RoadGraph
    gps_satellites: list[GpsSatellite]
    lte_base_stations: list[LteBaseStation]
    routes: dict[str, list[str]] = field(default_factory=dict)


@dataclass
class ScheduleEntry:
    node_id: str
    position: Point3
    epoch: float


@dataclass
class NodeSchedule:
    entries: list[ScheduleEntry]

    @property
    def node_ids(self) -> list[str]:
        return [e.node_id for e in self.entries]


# ---------------------------------------------------------------------------
# geometry helpers


def distance3(a: Point3, b: Point3) -> float:
    """Euclidean distance between two 3D points.

    Every range-like quantity in the package goes through this one helper so
    that e.g. a LOS path length and the geometric range it is compared against
    are bit-identical.
    """
    return math.sqrt(
        (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2
    )


def azimuth_elevation(rx: Point3, tx: Point3) -> tuple[float, float]:
    """Azimuth and elevation of ``tx`` as seen from ``rx``.

    Azimuth is measured clockwise from north (ENU +y) in [0, 2*pi);
    elevation from the horizontal plane in [-pi/2, pi/2]. A transmitter
    straight overhead has azimuth 0 by convention.
    """
    de = tx[0] - rx[0]
    dn = tx[1] - rx[1]
    du = tx[2] - rx[2]
    if de == 0.0 and dn == 0.0 and du == 0.0:
        raise ValueError("azimuth_elevation: rx and tx coincide")
    az = math.atan2(de, dn) % (2.0 * math.pi)
    el = math.atan2(du, math.hypot(de, dn))
    return az, el


def _signed_area(poly: list[Point2]) -> float:
    s = 0.0
    for (x0, y0), (x1, y1) in zip(poly, poly[1:] + poly[:1]):
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _segments_intersect(p, q, r, s) -> bool:
    """True if closed segments p-q and r-s share any point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    def on_segment(a, b, c):
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p, q, r):
        return True
    if o2 == 0 and on_segment(p, q, s):
        return True
    if o3 == 0 and on_segment(r, s, p):
        return True
    if o4 == 0 and on_segment(r, s, q):
        return True
    return False


def _validate_footprint(bid: str, poly: list[Point2]) -> None:
    if len(poly) < 3:
        raise SceneValidationError(
            f"building {bid!r}: footprint needs >= 3 vertices, got {len(poly)}"
        )
    for x, y in poly:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise SceneValidationError(f"building {bid!r}: non-finite footprint vertex")
    n = len(poly)
    for i in range(n):
        if poly[i] == poly[(i + 1) % n]:
            raise SceneValidationError(f"building {bid!r}: repeated consecutive vertex")
    # simplicity: non-adjacent edges must not touch
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = poly[j], poly[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                raise SceneValidationError(
                    f"building {bid!r}: footprint is self-intersecting "
                    f"(edges {i} and {j})"
                )
    if _signed_area(poly) <= 0.0:
        raise SceneValidationError(
            f"building {bid!r}: footprint must be counter-clockwise"
        )


def validate_scene(scene: SceneModel) -> None:
    """Check every invariant; raise SceneValidationError naming the offender."""
    if not math.isfinite(scene.ground_elevation):
        raise SceneValidationError("ground_elevation is not finite")
    for name, loss in scene.materials.items():
        if not math.isfinite(loss) or loss < 0.0:
            raise SceneValidationError(
                f"material {name!r}: reflection_loss_db must be finite and >= 0"
            )
    for b in scene.buildings:
        _validate_footprint(b.id, b.footprint)
        if not (math.isfinite(b.height) and b.height > 0.0):
            raise SceneValidationError(f"building {b.id!r}: height must be > 0")
        if b.material not in scene.materials:
            raise SceneValidationError(
                f"building {b.id!r}: unknown material {b.material!r}"
            )
    for nid, pos in scene.graph.nodes.items():
        if not all(math.isfinite(c) for c in pos):
            raise SceneValidationError(f"graph node {nid!r}: non-finite position")
    for u, v, length in scene.graph.edges:
        for nid in (u, v):
            if nid not in scene.graph.nodes:
                raise SceneValidationError(f"graph edge ({u!r}, {v!r}): unknown node {nid!r}")
        if not (math.isfinite(length) and length > 0.0):
            raise SceneValidationError(f"graph edge ({u!r}, {v!r}): length must be > 0")
        euclid = math.dist(scene.graph.nodes[u], scene.graph.nodes[v])
        if euclid <= 0.0 or abs(length - euclid) > 1e-3 * euclid:
            raise SceneValidationError(
                f"graph edge ({u!r}, {v!r}): stored length {length} deviates "
                f"more than 0.1% from euclidean {euclid}"
            )
    for sat in scene.gps_satellites:
        if not sat.positions:
            raise SceneValidationError(f"satellite {sat.id!r}: empty position table")
        epochs = [t for t, _ in sat.positions]
        if any(t1 <= t0 for t0, t1 in zip(epochs, epochs[1:])):
            raise SceneValidationError(
                f"satellite {sat.id!r}: epochs must be strictly increasing"
            )
        for t, pos in sat.positions:
            if not all(math.isfinite(c) for c in pos) or not math.isfinite(t):
                raise SceneValidationError(f"satellite {sat.id!r}: non-finite entry")
            if pos[2] <= 1e6:
                raise SceneValidationError(
                    f"satellite {sat.id!r}: altitude {pos[2]} m too low "
                    "(must exceed 1e6 m)"
                )
    for bs in scene.lte_base_stations:
        if not all(math.isfinite(c) for c in bs.position):
            raise SceneValidationError(f"base station {bs.id!r}: non-finite position")
        if not (math.isfinite(bs.carrier_frequency_hz) and bs.carrier_frequency_hz > 0):
            raise SceneValidationError(
                f"base station {bs.id!r}: carrier_frequency_hz must be > 0"
            )
    for rname, seq in scene.routes.items():
        if not seq:
            raise SceneValidationError(f"route {rname!r}: empty node sequence")
        if len(set(seq)) != len(seq):
            raise SceneValidationError(f"route {rname!r}: repeated node (not loopless)")
        for nid in seq:
            if nid not in scene.graph.nodes:
                raise SceneValidationError(f"route {rname!r}: unknown node {nid!r}")
        for a, b in zip(seq, seq[1:]):
            if not scene.graph.has_edge(a, b):
                raise SceneValidationError(
                    f"route {rname!r}: nodes {a!r} and {b!r} are not adjacent"
                )


# ---------------------------------------------------------------------------
# scene file I/O


def _as_point2(v, where: str) -> Point2:
    if not (isinstance(v, list) and len(v) == 2):
        raise SceneFormatError(f"{where}: expected [x, y], got {v!r}")
    return (float(v[0]), float(v[1]))


def _as_point3(v, where: str) -> Point3:
    if not (isinstance(v, list) and len(v) == 3):
        raise SceneFormatError(f"{where}: expected [x, y, z], got {v!r}")
    return (float(v[0]), float(v[1]), float(v[2]))


def load_scene(path) -> SceneModel:
    """Load and validate a scene YAML file."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise SceneFormatError(f"cannot read scene {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SceneFormatError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "scene" not in doc:
        raise SceneFormatError(f"{path}: missing top-level 'scene' mapping")
    scene = parse_scene(doc["scene"])
    validate_scene(scene)
    return scene


def parse_scene(raw: dict) -> SceneModel:
    """Build a SceneModel from the parsed YAML mapping (no validation)."""
    try:
        buildings = [
            Building(
                id=str(b["id"]),
                footprint=[_as_point2(v, f"building {b.get('id')}") for v in b["footprint"]],
                height=float(b["height"]),
                material=str(b["material"]),
            )
            for b in raw.get("buildings", [])
        ]
        graph_raw = raw.get("graph", {"nodes": {}, "edges": []})
        nodes = {
            str(nid): _as_point3(pos, f"graph node {nid}")
            for nid, pos in graph_raw.get("nodes", {}).items()
        }
        edges = []
        for e in graph_raw.get("edges", []):
            if len(e) == 3:
                u, v, length = e
                length = float(length)
            elif len(e) == 2:
                u, v = e
                length = math.dist(nodes[str(u)], nodes[str(v)])
            else:
                raise SceneFormatError(f"graph edge {e!r}: expected [u, v] or [u, v, length]")
            edges.append((str(u), str(v), length))
        sats = []
        for s in raw.get("gps_satellites", []):
            rows = [
                (float(row[0]), _as_point3(list(row[1:4]), f"satellite {s.get('id')}"))
                for row in s["positions"]
            ]
            sats.append(GpsSatellite(id=str(s["id"]), positions=rows))
        stations = [
            LteBaseStation(
                id=str(b["id"]),
                position=_as_point3(b["position"], f"base station {b.get('id')}"),
                carrier_frequency_hz=float(b["carrier_frequency_hz"]),
                tx_power_dbm=float(b.get("tx_power_dbm", 0.0)),
            )
            for b in raw.get("lte_base_stations", [])
        ]
        routes = {
            str(name): [str(n) for n in seq]
            for name, seq in (raw.get("routes") or {}).items()
        }
        return SceneModel(
            name=str(raw.get("name", "")),
            ground_elevation=float(raw.get("ground_elevation", 0.0)),
            materials={str(k): float(v) for k, v in (raw.get("materials") or {}).items()},
            buildings=buildings,
            graph=RoadGraph(nodes=nodes, edges=edges),
            gps_satellites=sats,
            lte_base_stations=stations,
            routes=routes,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (SceneFormatError, SceneValidationError)):
            raise
        raise SceneFormatError(f"malformed scene document: {exc!r}") from exc


def scene_to_dict(scene: SceneModel) -> dict:
    return {
        "scene": {
            "name": scene.name,
            "ground_elevation": scene.ground_elevation,
            "materials": dict(scene.materials),
            "buildings": [
                {
                    "id": b.id,
                    "footprint": [[x, y] for x, y in b.footprint],
                    "height": b.height,
                    "material": b.material,
                }
                for b in scene.buildings
            ],
            "graph": {
                "nodes": {nid: list(pos) for nid, pos in scene.graph.nodes.items()},
                "edges": [[u, v, length] for u, v, length in scene.graph.edges],
            },
            "gps_satellites": [
                {
                    "id": s.id,
                    "positions": [[t, p[0], p[1], p[2]] for t, p in s.positions],
                }
                for s in scene.gps_satellites
            ],
            "lte_base_stations": [
                {
                    "id": b.id,
                    "position": list(b.position),
                    "carrier_frequency_hz": b.carrier_frequency_hz,
                    "tx_power_dbm": b.tx_power_dbm,
                }
                for b in scene.lte_base_stations
            ],
            "routes": {name: list(seq) for name, seq in scene.routes.items()},
        }
    }


def save_scene(scene: SceneModel, path) -> None:
    """Write the scene back to YAML; load_scene(save_scene(s)) == s."""
    with open(path, "w") as fh:
        yaml.safe_dump(scene_to_dict(scene), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# route scheduling


def schedule_nodes(
    graph: RoadGraph,
    path: list[str],
    speed: float,
    start_epoch: float = 0.0,
    spacing: float | None = None,
) -> NodeSchedule:
    """Time-stamp the nodes of a route traversed at constant speed.

    Entry k gets epoch ``start_epoch + cumulative_length_k / speed``. With
    ``spacing`` set, extra evaluation points are inserted along each edge so
    consecutive entries are at most ``spacing`` metres apart; inserted ids
    are ``"{a}~{b}~{i:02d}"``.
    """
    if speed <= 0.0:
        raise ValueError("schedule_nodes: speed must be > 0")
    if not path:
        raise ValueError("schedule_nodes: empty path")
    if spacing is not None and spacing <= 0.0:
        raise ValueError("schedule_nodes: spacing must be > 0")
    for nid in path:
        if nid not in graph.nodes:
            raise ValueError(f"schedule_nodes: unknown node {nid!r}")

    entries = [ScheduleEntry(path[0], graph.nodes[path[0]], start_epoch)]
    travelled = 0.0
    for a, b in zip(path, path[1:]):
        if not graph.has_edge(a, b):
            raise ValueError(f"schedule_nodes: nodes {a!r} and {b!r} are not adjacent")
        length = graph.edge_length(a, b)
        pa, pb = graph.nodes[a], graph.nodes[b]
        n_seg = 1 if spacing is None else max(1, math.ceil(length / spacing))
        for i in range(1, n_seg + 1):
            frac = i / n_seg
            pos = (
                pa[0] + frac * (pb[0] - pa[0]),
                pa[1] + frac * (pb[1] - pa[1]),
                pa[2] + frac * (pb[2] - pa[2]),
            )
            nid = b if i == n_seg else f"{a}~{b}~{i:02d}"
            epoch = start_epoch + (travelled + frac * length) / speed
            entries.append(ScheduleEntry(nid, pos, epoch))
        travelled += length
    return NodeSchedule(entries=entries)
