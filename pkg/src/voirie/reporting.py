"""Headline numbers and exports: areas, cost envelopes, maintenance priorities, GeoJSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from shapely.geometry import MultiPolygon, mapping, shape

from voirie import constants as C
from voirie import geometry as geo
from voirie.errors import ExportError, ParameterError, SchemaError
from voirie.footprint import FootprintSet
from voirie.ingestion import CadastralParcel, RoadAxis, StudyBoundary, read_feature_collection
from voirie.registry import RegistryEvent, Section, SectionTimeline, Timestamp, parse_ts

BASES = ("surface_only", "structure_only", "full")
SECONDS_PER_YEAR = 365.25 * 86_400


@dataclass(frozen=True)
class CostModel:
    surface_min: float = C.SURFACE_COST_MIN_EUR_M2
    surface_max: float = C.SURFACE_COST_MAX_EUR_M2
    structure_min: float = C.STRUCTURE_COST_MIN_EUR_M2
    structure_max: float = C.STRUCTURE_COST_MAX_EUR_M2

    def __post_init__(self):
        for lo, hi in (("surface_min", "surface_max"), ("structure_min", "structure_max")):
            a, b = getattr(self, lo), getattr(self, hi)
            if not (0 < a <= b) or not math.isfinite(b):
                raise ParameterError(f"cost model needs 0 < {lo} <= {hi}, got {a}, {b}")

    def rates(self, basis: str) -> tuple[float, float]:
        if basis == "surface_only":
            return self.surface_min, self.surface_max
        if basis == "structure_only":
            return self.structure_min, self.structure_max
        if basis == "full":
            return self.surface_min + self.structure_min, self.surface_max + self.structure_max
        raise ParameterError(f"basis must be one of {BASES}, got {basis!r}")


def load_cost_model(path) -> CostModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: cost model must be a JSON object")
    known = {"surface_min", "surface_max", "structure_min", "structure_max"}
    unknown = set(doc) - known
    if unknown:
        raise SchemaError(f"{path}: unknown cost model keys {sorted(unknown)}")
    for k, v in doc.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{path}: {k} must be a number")
    return CostModel(**{k: float(v) for k, v in doc.items()})


@dataclass(frozen=True)
class CostEnvelope:
    min_eur: float
    max_eur: float
    basis: str
    note: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"min_eur": self.min_eur, "max_eur": self.max_eur, "basis": self.basis}
        if self.note:
            d["note"] = self.note
        return d


def _check_area(area: float, name: str = "area") -> None:
    if isinstance(area, bool) or not isinstance(area, (int, float)) or not math.isfinite(area) or area < 0:
        raise ParameterError(f"{name} must be a non-negative number of m2, got {area!r}")


def cost_envelope(area: float, model: CostModel = CostModel(), basis: str = "full") -> CostEnvelope:
    _check_area(area)
    lo, hi = model.rates(basis)
    return CostEnvelope(area * lo, area * hi, basis)


def gap_cost(delta_area: float, model: CostModel = CostModel()) -> CostEnvelope:
    """Cost of an area disagreement, priced on the pavement structure.

    Only the minimum is meaningful as a headline ("at least ..."); the
    maximum is reported for completeness.
    """
    _check_area(delta_area, "delta_area")
    env = cost_envelope(delta_area, model, "structure_only")
    note = (f"at least {env.min_eur:.4g} EUR: area gap priced at the lowest structure rate "
            f"({model.structure_min:g} EUR/m2); which rate underlies the published "
            f"{C.PARIS_GAP_COST_FLOOR_EUR:.2g} EUR floor is inferred, not stated")
    return CostEnvelope(env.min_eur, env.max_eur, env.basis, note)


# --- area report ----------------------------------------------------------------


@dataclass(frozen=True)
class AreaRow:
    label: str
    area_m2: float
    sets: tuple[dict, ...] = ()

    @property
    def area_km2(self) -> float:
        return self.area_m2 / C.M2_PER_KM2


@dataclass(frozen=True)
class AreaReport:
    rows: tuple[AreaRow, ...]
    annotations: tuple[dict, ...] = ()

    @property
    def total_m2(self) -> float:
        return math.fsum(r.area_m2 for r in self.rows)

    def row(self, label: str) -> Optional[AreaRow]:
        return next((r for r in self.rows if r.label == label), None)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"label": r.label, "area_m2": r.area_m2, "area_km2": r.area_km2, "sets": list(r.sets)}
                for r in self.rows
            ],
            "total_m2": self.total_m2 if self.rows else 0.0,
            "total_km2": self.total_m2 / C.M2_PER_KM2 if self.rows else 0.0,
            "annotations": list(self.annotations),
        }


def _paris_annotations(rows: Sequence[AreaRow]) -> tuple[dict, ...]:
    by = {r.label: r.area_m2 for r in rows}
    carriage = by.get("carriageway", 0.0)
    with_deps = carriage + by.get("dependency", 0.0) if "dependency" in by else by.get("public_space")
    notes = [{
        "reference": "paris_carriageway_only",
        "reference_km2": C.PARIS_ROAD_AREA_CARRIAGEWAY_ONLY_KM2,
        "computed_km2": carriage / C.M2_PER_KM2,
    }]
    if with_deps is not None:
        notes.append({
            "reference": "paris_with_dependencies",
            "reference_km2": C.PARIS_ROAD_AREA_WITH_DEPENDENCIES_KM2,
            "computed_km2": with_deps / C.M2_PER_KM2,
        })
    return tuple(notes)


def area_report(footprints: Iterable[FootprintSet], paris_reference: bool = False) -> AreaReport:
    """One row per label, in first-seen order; sets sharing a label are summed and listed."""
    grouped: dict[str, list[FootprintSet]] = {}
    for fp in footprints:
        grouped.setdefault(fp.label, []).append(fp)
    rows = tuple(
        AreaRow(label, math.fsum(fp.area for fp in sets),
                tuple({"provenance": fp.provenance, "area_m2": fp.area, "params_hash": fp.params_hash} for fp in sets))
        for label, sets in grouped.items()
    )
    notes = _paris_annotations(rows) if paris_reference and rows else ()
    return AreaReport(rows, notes)


def format_area_report(report: AreaReport) -> str:
    if not report.rows:
        return "(no footprints)"
    lines = [f"{'label':<14}{'area_m2':>16}{'area_km2':>12}"]
    for r in report.rows:
        lines.append(f"{r.label:<14}{r.area_m2:>16,.1f}{r.area_km2:>12.4f}")
        if len(r.sets) > 1:
            for s in r.sets:
                lines.append(f"  {s['provenance']:<12}{s['area_m2']:>16,.1f}")
    lines.append(f"{'total':<14}{report.total_m2:>16,.1f}{report.total_m2 / C.M2_PER_KM2:>12.4f}")
    for a in report.annotations:
        lines.append(f"reference {a['reference']}: {a['reference_km2']:g} km2 (computed {a['computed_km2']:.4f} km2)")
    return "\n".join(lines)


# --- maintenance priority -------------------------------------------------------


@dataclass(frozen=True)
class Priority:
    section_id: str
    score: float


def maintenance_priority(events: Sequence[RegistryEvent], sections: Sequence[Section],
                         now: Timestamp) -> list[Priority]:
    """Rank sections by their open degradations.

    score = sum over open degradations of severity * (1 + years open),
    a year being 365.25 days. Sections without open degradations are left
    out; ties are broken by section id.
    """
    now = parse_ts(now)
    timeline = SectionTimeline(events)
    out = []
    for sec in sections:
        state = timeline.state_at(sec.id, now)
        if not state.open_degradations:
            continue
        score = math.fsum(
            e.payload.severity * (1.0 + (now - e.observed_at).total_seconds() / SECONDS_PER_YEAR)
            for e in state.open_degradations
        )
        out.append(Priority(sec.id, score))
    out.sort(key=lambda p: (-p.score, p.section_id))
    return out


# --- export ---------------------------------------------------------------------


def to_feature(item) -> Optional[dict]:
    """GeoJSON feature for any labeled geometry of the package (None for an empty footprint)."""
    if isinstance(item, FootprintSet):
        if item.geometry.is_empty:
            return None
        g = item.geometry if isinstance(item.geometry, MultiPolygon) else MultiPolygon([item.geometry])
        props = {"id": item.label, "label": item.label, "area_m2": item.area,
                 "provenance": item.provenance, "params_hash": item.params_hash, "params": item.params}
    elif isinstance(item, RoadAxis):
        g = item.geometry
        props = {"id": item.id, "category": item.category}
        if item.measured_width is not None:
            props["measured_width"] = item.measured_width
        if item.name is not None:
            props["name"] = item.name
    elif isinstance(item, CadastralParcel):
        g = item.geometry
        props = {"id": item.id, "area_m2": item.area}
    elif isinstance(item, StudyBoundary):
        g = item.geometry
        props = {"label": item.label, "area_m2": item.area}
    elif isinstance(item, Section):
        g = item.geometry
        props = {"id": item.id, "axis_id": item.axis_id, "m_start": item.m_start, "m_end": item.m_end}
    else:
        raise ParameterError(f"cannot export {type(item).__name__}")
    return {"type": "Feature", "properties": props, "geometry": mapping(g)}


def load_footprints(path) -> list[FootprintSet]:
    """Read footprint sets back from a file written by :func:`export_features`."""
    doc = read_feature_collection(path)
    out = []
    for idx, feat in enumerate(doc["features"]):
        props = feat.get("properties") or {}
        if "label" not in props or "provenance" not in props:
            raise SchemaError(f"{path}: feature #{idx} lacks 'label'/'provenance'")
        g = geo.make_valid(shape(feat["geometry"]))
        out.append(FootprintSet.of(props["label"], g, props["provenance"], props.get("params") or {}))
    return out


def feature_collection(items: Iterable, crs_note: str = "planar meters, projected CRS") -> dict:
    feats = [f for f in (to_feature(i) for i in items) if f is not None]
    return {"type": "FeatureCollection", "crs_note": crs_note, "features": feats}


def export_features(items: Iterable, path) -> Path:
    path = Path(path)
    doc = feature_collection(items)
    try:
        with path.open("w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False)
            fh.write("\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path
