"""Planar geometry kernel.

Thin contract layer over shapely. Every areal result leaves this module
through :func:`make_valid`, so callers can rely on:

* coordinates snapped to a ``SNAP_TOLERANCE`` grid (1 mm),
* ``Polygon`` or ``MultiPolygon`` only, never a collection,
* exterior rings counter-clockwise, interior rings clockwise.

Polylines are ``shapely.LineString`` and areal geometries are
``shapely.Polygon`` / ``shapely.MultiPolygon``; no wrapper types.
"""

from __future__ import annotations

import logging
import math
from typing import Iterable, Literal, Sequence, Union

import numpy as np
import shapely
from shapely import ops
from shapely.geometry import LineString, MultiPolygon, Polygon

from voirie.errors import ParameterError, RangeError, RepairError, ShapeError, ValidityError

logger = logging.getLogger(__name__)

# centimetre-grade survey data: 1 mm grid for snapping and duplicate vertices
SNAP_TOLERANCE = 1e-3
# relative tolerance for area identities
AREA_RTOL = 1e-6

AreaGeometry = Union[Polygon, MultiPolygon]
Polyline = LineString

EMPTY = MultiPolygon()


def _check_finite(coords: np.ndarray) -> None:
    if coords.size and not np.all(np.isfinite(coords)):
        raise ValidityError("coordinates must be finite numbers")


def polyline(vertices: Sequence[Sequence[float]]) -> Polyline:
    """Build a polyline, dropping vertices closer than the snap tolerance to their predecessor."""
    coords = np.asarray(vertices, dtype=float)
    if coords.ndim != 2 or coords.shape[0] < 2 or coords.shape[1] < 2:
        raise ShapeError(f"a polyline needs at least 2 vertices, got {len(coords)}")
    coords = coords[:, :2]
    _check_finite(coords)
    kept = [coords[0]]
    for xy in coords[1:]:
        if math.dist(xy, kept[-1]) > SNAP_TOLERANCE:
            kept.append(xy)
    if len(kept) < 2:
        raise ShapeError("polyline collapses to a single point (zero length)")
    return LineString(kept)


def as_polyline(line) -> Polyline:
    if isinstance(line, LineString):
        return polyline(np.asarray(line.coords))
    return polyline(line)


def polygon(shell: Sequence[Sequence[float]], holes: Iterable[Sequence[Sequence[float]]] = ()) -> AreaGeometry:
    """Build a validated areal geometry from one shell and optional holes."""
    return make_valid(Polygon(shell, list(holes)))


def rectangle(x0: float, y0: float, x1: float, y1: float) -> AreaGeometry:
    return polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def _areal_part(geom) -> AreaGeometry:
    """Keep only the polygonal components of ``geom``."""
    if geom.is_empty:
        return EMPTY
    if isinstance(geom, (Polygon, MultiPolygon)):
        return geom
    polys: list[Polygon] = []
    for part in getattr(geom, "geoms", []):
        sub = _areal_part(part)
        if isinstance(sub, Polygon) and not sub.is_empty:
            polys.append(sub)
        elif isinstance(sub, MultiPolygon):
            polys.extend(sub.geoms)
    if not polys:
        return EMPTY
    return polys[0] if len(polys) == 1 else MultiPolygon(polys)


def _normalize(geom) -> AreaGeometry:
    geom = _areal_part(geom)
    if geom.is_empty:
        return EMPTY
    return shapely.orient_polygons(geom, exterior_cw=False)


def make_valid(g) -> AreaGeometry:
    """Repair ``g`` into a valid, snapped, consistently oriented areal geometry.

    Valid input keeps its point set (up to the snap grid). Self-intersecting
    rings are split along their crossings, so a bow-tie becomes two triangles.
    Input with no areal content at all raises :class:`RepairError`; an empty
    geometry produced by an operation is a legitimate result and is returned
    as an empty ``MultiPolygon``.
    """
    if g is None:
        raise RepairError("no geometry given")
    if isinstance(g, (list, tuple)):
        if not g:
            raise RepairError("empty ring list: nothing to repair")
        g = Polygon(g[0], list(g[1:]))
    if not isinstance(g, (Polygon, MultiPolygon)) and not g.is_empty:
        g = _areal_part(g)
        if g.is_empty:
            raise RepairError("geometry has no areal component")
    if g.is_empty:
        return EMPTY
    _check_finite(shapely.get_coordinates(g))
    if g.is_valid:
        fixed = g
    else:
        fixed = shapely.make_valid(g)
    snapped = shapely.set_precision(fixed, SNAP_TOLERANCE)
    out = _normalize(snapped)
    if out.is_empty or out.area <= 0.0:
        reason = shapely.is_valid_reason(g)
        raise RepairError(f"geometry is degenerate (zero area) and cannot be repaired: {reason}")
    return out


def _snap_result(geom) -> AreaGeometry:
    """Post-process an operation output; empty results are allowed."""
    if geom.is_empty:
        return EMPTY
    out = _normalize(shapely.set_precision(geom, SNAP_TOLERANCE))
    if not out.is_valid:
        out = _normalize(shapely.make_valid(out))
    return out


def _require_valid(g, what: str = "geometry") -> None:
    if not isinstance(g, (Polygon, MultiPolygon)):
        raise ValidityError(f"{what} is not an areal geometry: {g.geom_type}")
    if not g.is_empty and not g.is_valid:
        raise ValidityError(f"{what} is invalid: {shapely.is_valid_reason(g)}")


def area(g: AreaGeometry) -> float:
    _require_valid(g)
    return float(g.area)


def length(line: Polyline) -> float:
    if not isinstance(line, LineString):
        line = as_polyline(line)
    if len(line.coords) < 2:
        raise ShapeError("a polyline needs at least 2 vertices")
    return float(line.length)


def buffer_polyline(line: Polyline, total_width: float) -> AreaGeometry:
    """Strip of half-width ``total_width / 2`` around ``line``, flat ends, mitred joins.

    A straight segment of length L gives a rectangle of area exactly
    ``L * total_width``.
    """
    if not (total_width > 0) or not math.isfinite(total_width):
        raise ParameterError(f"total_width must be > 0, got {total_width!r}")
    line = as_polyline(line)
    strip = line.buffer(total_width / 2.0, cap_style="flat", join_style="mitre", mitre_limit=5.0)
    return make_valid(strip)


def buffer_many(lines: Sequence[Polyline], widths: Sequence[float]) -> list[AreaGeometry]:
    """Vectorized :func:`buffer_polyline` over many axes."""
    if len(lines) != len(widths):
        raise ParameterError("lines and widths differ in length")
    if not lines:
        return []
    w = np.asarray(widths, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ParameterError("every width must be > 0")
    lines = [as_polyline(l) for l in lines]
    strips = shapely.buffer(np.array(lines, dtype=object), w / 2.0, cap_style="flat",
                            join_style="mitre", mitre_limit=5.0)
    return [make_valid(s) for s in strips]


def union_all(gs: Iterable[AreaGeometry]) -> AreaGeometry:
    gs = list(gs)
    for i, g in enumerate(gs):
        _require_valid(g, f"input #{i}")
    if not gs:
        return EMPTY
    return _snap_result(shapely.union_all(gs, grid_size=SNAP_TOLERANCE))


def boolean_op(a: AreaGeometry, b: AreaGeometry,
               mode: Literal["difference", "intersection", "union"]) -> AreaGeometry:
    _require_valid(a, "left operand")
    _require_valid(b, "right operand")
    if mode == "difference":
        out = shapely.difference(a, b, grid_size=SNAP_TOLERANCE)
    elif mode == "intersection":
        out = shapely.intersection(a, b, grid_size=SNAP_TOLERANCE)
    elif mode == "union":
        out = shapely.union(a, b, grid_size=SNAP_TOLERANCE)
    else:
        raise ParameterError(f"unknown boolean mode {mode!r}")
    return _snap_result(out)


def difference(a: AreaGeometry, b: AreaGeometry) -> AreaGeometry:
    return boolean_op(a, b, "difference")


def intersection(a: AreaGeometry, b: AreaGeometry) -> AreaGeometry:
    return boolean_op(a, b, "intersection")


def substring_along(line: Polyline, m_start: float, m_end: float) -> Polyline:
    """Piece of ``line`` between two distances measured from its first vertex."""
    line = as_polyline(line)
    total = line.length
    slack = 1e-9 * total
    if not (0.0 - slack <= m_start < m_end <= total + slack):
        raise RangeError(f"range [{m_start}, {m_end}] outside [0, {total}] or empty")
    m_start = max(m_start, 0.0)
    m_end = min(m_end, total)
    piece = ops.substring(line, m_start, m_end)
    if not isinstance(piece, LineString) or piece.is_empty:
        raise RangeError(f"range [{m_start}, {m_end}] yields no line")
    return piece


def cut_at(line: Polyline, marks: Sequence[float]) -> list[Polyline]:
    """Split ``line`` at increasing distances ``marks`` (first 0, last the length) in one pass."""
    line = as_polyline(line)
    xy = np.asarray(line.coords)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xy, axis=0).T))])
    total = cum[-1]
    marks = np.asarray(marks, dtype=float)
    if marks.size < 2 or np.any(np.diff(marks) <= 0) or marks[0] < -1e-9 * total or marks[-1] > total * (1 + 1e-9):
        raise RangeError("cut marks must increase strictly within [0, length]")
    marks = np.clip(marks, 0.0, total)

    def point_at(m):
        i = min(int(np.searchsorted(cum, m, side="right")) - 1, len(cum) - 2)
        t = (m - cum[i]) / (cum[i + 1] - cum[i])
        return xy[i] + t * (xy[i + 1] - xy[i])

    pieces = []
    for a, b in zip(marks, marks[1:]):
        inner = np.nonzero((cum > a) & (cum < b))[0]
        pts = [point_at(a), *xy[inner], point_at(b)]
        if b == total:
            pts[-1] = xy[-1]
        pieces.append(LineString(pts))
    return pieces


def is_geographic(coords: np.ndarray) -> bool:
    """True when every coordinate fits in lon/lat bounds, a strong hint of an unprojected CRS."""
    coords = np.asarray(coords, dtype=float)
    if coords.size == 0:
        return False
    return bool(np.all(np.abs(coords[:, 0]) <= 180.0) and np.all(np.abs(coords[:, 1]) <= 90.0))


def polygons_of(g: AreaGeometry) -> list[Polygon]:
    if g.is_empty:
        return []
    if isinstance(g, Polygon):
        return [g]
    return list(g.geoms)
