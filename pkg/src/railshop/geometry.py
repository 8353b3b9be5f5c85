"""Zone geometry and spatial conflict detection.

Zones are simple counterclockwise polygons on a single planar workshop
floor, coordinates in meters. The point test is boundary-inclusive and the
overlap test counts even a single shared boundary point — both deliberately
err toward detecting a conflict.

Numerical policy: on-edge and segment-touch decisions use an absolute
tolerance of EPS = 1e-9 m. Proper-crossing detection uses exact sign tests
on cross products; near-degenerate cases fall through to the distance-based
touch checks, which keeps the conservative bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, Optional, Sequence

from .errors import InvalidZone, ValidationError
from .types import PermitType

EPS = 1e-9


class ZoneKind(str, Enum):
    MACHINE_SHED = "MACHINE_SHED"
    MAINTENANCE_BAY = "MAINTENANCE_BAY"
    STORAGE_AREA = "STORAGE_AREA"
    ADMIN_SECTION = "ADMIN_SECTION"


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass
class Zone:
    zone_id: str
    name: str
    kind: ZoneKind
    polygon: list[tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "zone_id": self.zone_id,
            "name": self.name,
            "kind": self.kind.value,
            "polygon": [[x, y] for x, y in self.polygon],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Zone":
        return cls(
            zone_id=data["zone_id"],
            name=data["name"],
            kind=ZoneKind(data["kind"]),
            polygon=[(float(x), float(y)) for x, y in data["polygon"]],
        )


# -- low-level predicates -----------------------------------------------------


def _dist_point_segment(px: float, py: float,
                        ax: float, ay: float, bx: float, by: float) -> float:
    abx, aby = bx - ax, by - ay
    ab2 = abx * abx + aby * aby
    if ab2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * abx + (py - ay) * aby) / ab2
    t = max(0.0, min(1.0, t))
    return math.hypot(ax + t * abx - px, ay + t * aby - py)


def _on_segment(px: float, py: float,
                ax: float, ay: float, bx: float, by: float) -> bool:
    return _dist_point_segment(px, py, ax, ay, bx, by) <= EPS


def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def segments_intersect(a1: tuple[float, float], a2: tuple[float, float],
                       b1: tuple[float, float], b2: tuple[float, float]) -> bool:
    """True if the closed segments share any point (crossing, touch, overlap)."""
    d1 = _cross(b1[0], b1[1], b2[0], b2[1], a1[0], a1[1])
    d2 = _cross(b1[0], b1[1], b2[0], b2[1], a2[0], a2[1])
    d3 = _cross(a1[0], a1[1], a2[0], a2[1], b1[0], b1[1])
    d4 = _cross(a1[0], a1[1], a2[0], a2[1], b2[0], b2[1])
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    # endpoint-touch and collinear-overlap cases
    if _on_segment(a1[0], a1[1], b1[0], b1[1], b2[0], b2[1]):
        return True
    if _on_segment(a2[0], a2[1], b1[0], b1[1], b2[0], b2[1]):
        return True
    if _on_segment(b1[0], b1[1], a1[0], a1[1], a2[0], a2[1]):
        return True
    if _on_segment(b2[0], b2[1], a1[0], a1[1], a2[0], a2[1]):
        return True
    return False


def signed_area(polygon: Sequence[tuple[float, float]]) -> float:
    """Shoelace signed area; positive for counterclockwise vertex order."""
    total = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2.0


def _edges(polygon: Sequence[tuple[float, float]]) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    n = len(polygon)
    return [(polygon[i], polygon[(i + 1) % n]) for i in range(n)]


def validate_polygon(polygon: Sequence[Sequence[float]]) -> list[tuple[float, float]]:
    """Normalize and validate a polygon per the zone invariants.

    Accepts a GeoJSON-style closed ring (last vertex repeating the first) and
    strips the repeat. Raises InvalidZone on: fewer than 3 vertices,
    non-finite coordinates, repeated consecutive vertices, zero area,
    clockwise orientation, or self-intersection.
    """
    pts = [(float(x), float(y)) for x, y in polygon]
    if len(pts) >= 2 and math.hypot(pts[-1][0] - pts[0][0], pts[-1][1] - pts[0][1]) <= EPS:
        pts = pts[:-1]
    if len(pts) < 3:
        raise InvalidZone("polygon needs at least 3 distinct vertices")
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidZone("polygon vertices must be finite")
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if math.hypot(x2 - x1, y2 - y1) <= EPS:
            raise InvalidZone("polygon has repeated consecutive vertices")
    area = signed_area(pts)
    if abs(area) <= EPS:
        raise InvalidZone("polygon has zero area")
    if area < 0:
        raise InvalidZone("polygon must be counterclockwise")
    edges = _edges(pts)
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                # adjacent edges share exactly one endpoint; a spike folds back
                a1, a2 = edges[i]
                b1, b2 = edges[j]
                shared = a2 if j == i + 1 else a1
                far_a = a1 if shared == a2 else a2
                far_b = b2 if shared == b1 else b1
                if _on_segment(far_b[0], far_b[1], a1[0], a1[1], a2[0], a2[1]) or \
                   _on_segment(far_a[0], far_a[1], b1[0], b1[1], b2[0], b2[1]):
                    raise InvalidZone("polygon has a degenerate spike")
            elif segments_intersect(*edges[i], *edges[j]):
                raise InvalidZone("polygon is self-intersecting")
    return pts


def point_in_zone(p: Point, z: Zone) -> bool:
    """Boundary-inclusive point-in-polygon via ray casting.

    Points within EPS of any edge count as inside; elsewhere a standard
    half-open crossing count of a horizontal ray decides.
    """
    poly = z.polygon
    if len(poly) < 3:
        raise InvalidZone(f"zone {z.zone_id} has a degenerate polygon")
    for (a, b) in _edges(poly):
        if _on_segment(p.x, p.y, a[0], a[1], b[0], b[1]):
            return True
    inside = False
    n = len(poly)
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > p.y) != (yj > p.y):
            x_cross = xi + (p.y - yi) * (xj - xi) / (yj - yi)
            if p.x < x_cross:
                inside = not inside
        j = i
    return inside


def zones_overlap(a: Zone, b: Zone) -> bool:
    """True if the polygons share interior area or touch anywhere on their
    boundaries (a single shared corner counts)."""
    for z in (a, b):
        if len(z.polygon) < 3:
            raise InvalidZone(f"zone {z.zone_id} has a degenerate polygon")
    ax_min, ay_min, ax_max, ay_max = _bbox(a.polygon)
    bx_min, by_min, bx_max, by_max = _bbox(b.polygon)
    if ax_max < bx_min - EPS or bx_max < ax_min - EPS or \
       ay_max < by_min - EPS or by_max < ay_min - EPS:
        return False
    for ea in _edges(a.polygon):
        for eb in _edges(b.polygon):
            if segments_intersect(ea[0], ea[1], eb[0], eb[1]):
                return True
    # no boundary contact: overlap only if one polygon contains the other
    if point_in_zone(Point(*a.polygon[0]), b):
        return True
    if point_in_zone(Point(*b.polygon[0]), a):
        return True
    return False


def _bbox(poly: Sequence[tuple[float, float]]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), min(ys), max(xs), max(ys)


# -- permit conflict detection --------------------------------------------------

_SHORT = {
    PermitType.HOT_WORK: "HOT",
    PermitType.ELECTRICAL: "ELEC",
    PermitType.CONFINED_SPACE: "CONFINED",
    PermitType.WORKING_AT_HEIGHT: "HEIGHT",
    PermitType.GENERAL: "GENERAL",
}
_TYPE_ORDER = {t: i for i, t in enumerate(PermitType)}


def rule_name(a: PermitType, b: PermitType) -> str:
    first, second = sorted((a, b), key=_TYPE_ORDER.get)
    return f"{_SHORT[first]}_{_SHORT[second]}"


@dataclass(frozen=True)
class ConflictPolicy:
    """Which concurrent, spatially overlapping permit-type pairs are unsafe.

    ``pairs`` conflict whenever zones overlap; ``same_zone_pairs`` only when
    both permits name the same zone; ``hot_work_storage`` makes HOT_WORK
    conflict with any permit when either zone is a storage area.
    """

    pairs: frozenset[frozenset[PermitType]]
    same_zone_pairs: frozenset[frozenset[PermitType]]
    hot_work_storage: bool = True

    @classmethod
    def default(cls) -> "ConflictPolicy":
        return cls(
            pairs=frozenset({
                frozenset({PermitType.HOT_WORK}),
                frozenset({PermitType.HOT_WORK, PermitType.CONFINED_SPACE}),
                frozenset({PermitType.ELECTRICAL, PermitType.CONFINED_SPACE}),
            }),
            same_zone_pairs=frozenset({frozenset({PermitType.WORKING_AT_HEIGHT})}),
            hot_work_storage=True,
        )


@dataclass(frozen=True)
class PermitView:
    """The slice of a permit the conflict check needs."""

    permit_id: str
    permit_type: PermitType
    zone_id: str
    valid_from: datetime
    valid_to: datetime


@dataclass(frozen=True)
class ConflictReport:
    permit_id: str
    rule: str


def windows_intersect(a_from: datetime, a_to: datetime,
                      b_from: datetime, b_to: datetime) -> bool:
    # closed intervals: windows that merely touch still count (safety bias)
    return a_from <= b_to and b_from <= a_to


class ZoneIndex:
    """Zone lookup with a cached pairwise-overlap relation.

    The zone set is static between admin reloads, so zones_overlap results
    are memoized per unordered zone pair.
    """

    def __init__(self, zones: Iterable[Zone]):
        self._zones = {z.zone_id: z for z in zones}
        self._overlap_cache: dict[frozenset[str], bool] = {}

    def get(self, zone_id: str) -> Optional[Zone]:
        return self._zones.get(zone_id)

    def zones(self) -> list[Zone]:
        return list(self._zones.values())

    def overlap(self, zone_a: str, zone_b: str) -> bool:
        if zone_a == zone_b:
            return True
        key = frozenset((zone_a, zone_b))
        cached = self._overlap_cache.get(key)
        if cached is None:
            cached = zones_overlap(self._zones[zone_a], self._zones[zone_b])
            self._overlap_cache[key] = cached
        return cached


def pair_conflict_rule(candidate: PermitView, other: PermitView,
                       index: ZoneIndex, policy: ConflictPolicy) -> Optional[str]:
    """First matching conflict rule for a pair of permits, or None."""
    if not windows_intersect(candidate.valid_from, candidate.valid_to,
                             other.valid_from, other.valid_to):
        return None
    pair = frozenset({candidate.permit_type, other.permit_type})
    if pair in policy.pairs and index.overlap(candidate.zone_id, other.zone_id):
        return rule_name(candidate.permit_type, other.permit_type)
    if pair in policy.same_zone_pairs and candidate.zone_id == other.zone_id:
        return rule_name(candidate.permit_type, other.permit_type)
    if policy.hot_work_storage and PermitType.HOT_WORK in pair:
        kinds = {index.get(candidate.zone_id).kind, index.get(other.zone_id).kind}
        if ZoneKind.STORAGE_AREA in kinds and index.overlap(candidate.zone_id, other.zone_id):
            return "HOT_STORAGE"
    return None


def permit_conflicts(candidate: PermitView, active: Sequence[PermitView],
                     index: ZoneIndex, policy: Optional[ConflictPolicy] = None) -> list[ConflictReport]:
    """One report per permit in ``active`` that conflicts with the candidate.

    Callers pass the current APPROVED and ACTIVE permits; an empty result
    means the candidate is safe to approve.
    """
    policy = policy or ConflictPolicy.default()
    reports: list[ConflictReport] = []
    for other in active:
        if other.permit_id == candidate.permit_id:
            continue
        rule = pair_conflict_rule(candidate, other, index, policy)
        if rule is not None:
            reports.append(ConflictReport(permit_id=other.permit_id, rule=rule))
    return reports


# -- zones document -------------------------------------------------------------


def load_zones_document(doc: dict) -> tuple[list[Zone], ConflictPolicy]:
    """Parse the zones JSON document: {"zones": [...], optional conflict keys}.

    Optional overrides: "conflict_pairs" (list of [type, type] name pairs),
    "same_zone_pairs", and "hot_work_storage" (bool).
    """
    if not isinstance(doc, dict) or "zones" not in doc:
        raise ValidationError("zones document must contain a 'zones' list")
    zones: list[Zone] = []
    seen: set[str] = set()
    for raw in doc["zones"]:
        try:
            kind = ZoneKind(raw["kind"])
        except (KeyError, ValueError):
            raise ValidationError(f"zone {raw.get('zone_id')!r} has an unknown kind")
        zone_id = raw.get("zone_id")
        if not zone_id:
            raise ValidationError("zone without zone_id")
        if zone_id in seen:
            raise ValidationError(f"duplicate zone_id {zone_id!r}")
        seen.add(zone_id)
        polygon = validate_polygon(raw.get("polygon", []))
        zones.append(Zone(zone_id=zone_id, name=raw.get("name", zone_id),
                          kind=kind, polygon=polygon))

    default = ConflictPolicy.default()
    policy = ConflictPolicy(
        pairs=_parse_pairs(doc.get("conflict_pairs"), default.pairs),
        same_zone_pairs=_parse_pairs(doc.get("same_zone_pairs"), default.same_zone_pairs),
        hot_work_storage=bool(doc.get("hot_work_storage", default.hot_work_storage)),
    )
    return zones, policy


def _parse_pairs(raw, fallback: frozenset) -> frozenset:
    if raw is None:
        return fallback
    pairs = set()
    for item in raw:
        try:
            a, b = (PermitType(item[0]), PermitType(item[1]))
        except (ValueError, IndexError):
            raise ValidationError(f"unknown permit type in conflict pair {item!r}")
        pairs.add(frozenset({a, b}))
    return frozenset(pairs)
