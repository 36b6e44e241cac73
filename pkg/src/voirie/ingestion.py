"""Loading and validation of spatial inputs and JSON configuration.

Inputs are GeoJSON feature collections whose coordinates are already in a
projected, metric CRS. Nothing is reprojected; collections that look like
longitude/latitude are refused.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import shapely
from shapely.geometry import LineString, MultiPolygon, Polygon, shape

from voirie import geometry as geo
from voirie.errors import (
    CardinalityError,
    CRSError,
    DuplicationError,
    ParameterError,
    RepairError,
    SchemaError,
    ShapeError,
    ValidityError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoadAxis:
    id: str
    geometry: LineString
    category: str
    measured_width: Optional[float] = None
    name: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise SchemaError("road axis id must be non-empty")
        if self.measured_width is not None and not (self.measured_width > 0):
            raise ParameterError(f"axis {self.id}: measured_width must be > 0, got {self.measured_width}")

    @property
    def length(self) -> float:
        return geo.length(self.geometry)


@dataclass(frozen=True)
class CadastralParcel:
    id: str
    geometry: geo.AreaGeometry

    @property
    def area(self) -> float:
        return geo.area(self.geometry)


@dataclass(frozen=True)
class StudyBoundary:
    geometry: Polygon
    label: str

    @property
    def area(self) -> float:
        return geo.area(self.geometry)


@dataclass(frozen=True)
class WidthRules:
    widths: dict[str, float]
    fallback_width: float

    def __post_init__(self):
        for cat, w in {**self.widths, "fallback_width": self.fallback_width}.items():
            if isinstance(w, bool) or not isinstance(w, (int, float)) or not math.isfinite(w) or w <= 0:
                raise ParameterError(f"width for {cat!r} must be a positive number, got {w!r}")

    def digest(self) -> str:
        payload = json.dumps({"widths": self.widths, "fallback_width": self.fallback_width}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def read_feature_collection(path) -> dict[str, Any]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise SchemaError(f"{path}: expected a GeoJSON FeatureCollection")
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise SchemaError(f"{path}: 'features' must be a list")
    return doc


def _feature_geometry(feat: Any, idx: int):
    if not isinstance(feat, dict) or feat.get("type") != "Feature":
        raise SchemaError(f"feature #{idx}: not a GeoJSON Feature")
    gj = feat.get("geometry")
    if not gj:
        raise SchemaError(f"feature #{idx}: missing geometry")
    try:
        return shape(gj)
    except Exception as exc:  # shapely raises several types for malformed input
        raise SchemaError(f"feature #{idx}: unreadable geometry ({exc})") from exc


def _props(feat: dict) -> dict:
    return feat.get("properties") or {}


def _check_crs(geoms, path) -> None:
    if not geoms:
        return
    coords = np.concatenate([shapely.get_coordinates(g) for g in geoms])
    if geo.is_geographic(coords):
        raise CRSError(
            f"{path}: coordinates all fall within lon/lat bounds; "
            "inputs must be planar meters in a projected CRS"
        )


def _check_unique(ids: list[str], path) -> None:
    seen: set[str] = set()
    for i in ids:
        if i in seen:
            raise DuplicationError(f"{path}: duplicate id {i!r}")
        seen.add(i)


def _require_str(props: dict, key: str, idx: int) -> str:
    val = props.get(key)
    if val is None or val == "":
        raise SchemaError(f"feature #{idx}: missing required property {key!r}")
    return str(val)


def load_axes(path) -> list[RoadAxis]:
    """Read road centerlines. Axes are never repaired: a bad axis is an error."""
    doc = read_feature_collection(path)
    rows = []
    for idx, feat in enumerate(doc["features"]):
        g = _feature_geometry(feat, idx)
        if not isinstance(g, LineString):
            raise SchemaError(f"feature #{idx}: expected LineString, got {g.geom_type}")
        props = _props(feat)
        rows.append((idx, g, _require_str(props, "id", idx), _require_str(props, "category", idx), props))
    _check_unique([r[2] for r in rows], path)
    _check_crs([r[1] for r in rows], path)
    axes = []
    for idx, g, axis_id, category, props in rows:
        try:
            line = geo.as_polyline(g)
        except (ShapeError, ValidityError) as exc:
            raise SchemaError(f"feature #{idx} ({axis_id}): {exc}") from exc
        width = props.get("measured_width")
        if width is not None:
            if isinstance(width, bool) or not isinstance(width, (int, float)):
                raise SchemaError(f"feature #{idx} ({axis_id}): measured_width must be a number")
            width = float(width)
        name = props.get("name")
        axes.append(RoadAxis(axis_id, line, category, width, None if name is None else str(name)))
    return axes


def _load_area(g, idx: int, label: str) -> geo.AreaGeometry:
    if not isinstance(g, (Polygon, MultiPolygon)):
        raise SchemaError(f"feature #{idx}: expected Polygon or MultiPolygon, got {g.geom_type}")
    was_valid = g.is_valid
    try:
        fixed = geo.make_valid(g)
    except (RepairError, ValidityError) as exc:
        raise SchemaError(f"feature #{idx} ({label}): {exc}") from exc
    if not was_valid:
        logger.warning("feature #%d (%s): invalid geometry repaired (%s)", idx, label,
                       shapely.is_valid_reason(g))
    return fixed


def load_parcels(path) -> list[CadastralParcel]:
    """Read cadastral parcels, repairing dirty rings with a warning."""
    doc = read_feature_collection(path)
    rows = []
    for idx, feat in enumerate(doc["features"]):
        g = _feature_geometry(feat, idx)
        rows.append((idx, g, _require_str(_props(feat), "id", idx)))
    _check_unique([r[2] for r in rows], path)
    _check_crs([r[1] for r in rows], path)
    return [CadastralParcel(pid, _load_area(g, idx, pid)) for idx, g, pid in rows]


def load_boundary(path) -> StudyBoundary:
    doc = read_feature_collection(path)
    feats = doc["features"]
    if len(feats) != 1:
        raise CardinalityError(f"{path}: expected exactly one boundary feature, found {len(feats)}")
    g = _feature_geometry(feats[0], 0)
    if isinstance(g, MultiPolygon) and len(g.geoms) == 1:
        g = g.geoms[0]
    if not isinstance(g, Polygon):
        raise SchemaError(f"{path}: boundary must be a single Polygon, got {g.geom_type}")
    _check_crs([g], path)
    label = str(_props(feats[0]).get("label") or _props(feats[0]).get("id") or Path(path).stem)
    fixed = _load_area(g, 0, label)
    if not isinstance(fixed, Polygon):
        raise SchemaError(f"{path}: boundary does not form a single polygon after repair")
    return StudyBoundary(fixed, label)


def parse_width_rules(doc: Any) -> WidthRules:
    if not isinstance(doc, dict):
        raise SchemaError("width rules must be a JSON object")
    if "fallback_width" not in doc:
        raise SchemaError("width rules lack 'fallback_width'")
    for k, v in doc.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"width for {k!r} must be a number, got {v!r}")
    widths = {k: float(v) for k, v in doc.items() if k != "fallback_width"}
    return WidthRules(widths, float(doc["fallback_width"]))


def load_width_rules(path) -> WidthRules:
    with Path(path).open(encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return parse_width_rules(doc)
