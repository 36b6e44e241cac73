"""Technical registry attached to the road referential.

Axes are cut into sections of at most 10 m, the unit of visual surveys.
Pavement structures, degradation observations and trench records are
appended to an event log (one JSON object per line). The state of a
section at any time is recomputed from the log:

* its structure is the most recently *observed* structure (core sample,
  design document, or the backfill of a trench crossing it);
* its open degradations are those observed after that structure. A new
  structure means the pavement was rebuilt or resurfaced, so earlier
  degradations are considered repaired.

All time logic uses observation times, never the time an event was
written, so late entries are fine and replay does not depend on log order.
"""

from __future__ import annotations

import json
import logging
import math
import os
import threading
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import shapely
from shapely.geometry import LineString, mapping, shape

from voirie import geometry as geo
from voirie.errors import ParameterError, RecordValidationError, UnknownSectionError
from voirie.ingestion import RoadAxis

logger = logging.getLogger(__name__)

DEFAULT_STEP = 10.0
THICKNESS_TOLERANCE = 0.01
# absorbs float noise when comparing a thickness delta with the tolerance
_TOL_EPS = 1e-9

ROLES = ("surface", "base", "foundation", "subgrade")
SOURCES = ("core_sample", "trench_observation", "design_document")
DEGRADATION_KINDS = ("pothole", "crack", "rutting", "surface_wear", "other")
CAUSES = ("mechanical", "thermal_hydric", "human_intervention")
EVENT_TYPES = ("structure", "degradation", "trench")

Timestamp = Union[str, datetime]


def parse_ts(value: Timestamp) -> datetime:
    """ISO-8601 string or datetime to an aware UTC datetime (naive means UTC)."""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError as exc:
            raise RecordValidationError(f"not an ISO-8601 timestamp: {value!r}") from exc
    else:
        raise RecordValidationError(f"not a timestamp: {value!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_ts(dt: datetime) -> str:
    return parse_ts(dt).isoformat(timespec="microseconds")


# --- sections -----------------------------------------------------------------


@dataclass(frozen=True)
class Section:
    id: str
    axis_id: str
    m_start: float
    m_end: float
    geometry: LineString

    @property
    def length(self) -> float:
        return self.m_end - self.m_start


def build_sections(axes: Sequence[RoadAxis], step: float = DEFAULT_STEP) -> list[Section]:
    """Cut every axis into ``ceil(L / step)`` contiguous sections from its start.

    All sections are ``step`` long except possibly the last one. A remainder
    below the snap tolerance is merged into the previous section.
    """
    if not (isinstance(step, (int, float)) and math.isfinite(step) and step > 0):
        raise ParameterError(f"step must be > 0, got {step!r}")
    sections: list[Section] = []
    for axis in axes:
        total = geo.length(axis.geometry)
        n = max(1, math.ceil((total - geo.SNAP_TOLERANCE) / step))
        marks = [i * step for i in range(n)] + [total]
        pieces = geo.cut_at(axis.geometry, marks)
        for i, (a, b, piece) in enumerate(zip(marks, marks[1:], pieces)):
            sections.append(Section(f"{axis.id}:{i}", axis.id, a, b, piece))
    return sections


# --- payloads -----------------------------------------------------------------


@dataclass(frozen=True)
class PavementLayer:
    role: str
    material: str
    thickness: float

    def __post_init__(self):
        if self.role not in ROLES:
            raise RecordValidationError(f"layer role must be one of {ROLES}, got {self.role!r}")
        if not isinstance(self.material, str) or not self.material.strip():
            raise RecordValidationError("layer material code must be a non-empty string")
        if isinstance(self.thickness, bool) or not isinstance(self.thickness, (int, float)) \
                or not math.isfinite(self.thickness) or self.thickness <= 0:
            raise RecordValidationError(f"layer thickness must be > 0, got {self.thickness!r}")

    def to_dict(self) -> dict:
        return {"role": self.role, "material": self.material, "thickness": self.thickness}

    @classmethod
    def from_dict(cls, d: dict) -> "PavementLayer":
        return cls(d.get("role"), d.get("material"), d.get("thickness"))


@dataclass(frozen=True)
class PavementStructure:
    layers: tuple[PavementLayer, ...]
    observed_at: datetime
    source: str

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "observed_at", parse_ts(self.observed_at))
        if not self.layers:
            raise RecordValidationError("a pavement structure needs at least one layer")
        order = [ROLES.index(layer.role) for layer in self.layers]
        if any(b <= a for a, b in zip(order, order[1:])):
            raise RecordValidationError(
                f"layers must be ordered top to bottom without repeated roles, got {[l.role for l in self.layers]}"
            )
        if self.source not in SOURCES:
            raise RecordValidationError(f"structure source must be one of {SOURCES}, got {self.source!r}")

    def layer(self, role: str) -> Optional[PavementLayer]:
        return next((l for l in self.layers if l.role == role), None)

    def to_dict(self) -> dict:
        return {
            "layers": [l.to_dict() for l in self.layers],
            "observed_at": format_ts(self.observed_at),
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PavementStructure":
        layers = d.get("layers")
        if not isinstance(layers, list):
            raise RecordValidationError("structure 'layers' must be a list")
        return cls(tuple(PavementLayer.from_dict(l) for l in layers), d.get("observed_at"), d.get("source"))


@dataclass(frozen=True)
class StructureObservation:
    section_id: str
    structure: PavementStructure

    type = "structure"

    @property
    def observed_at(self) -> datetime:
        return self.structure.observed_at

    def to_dict(self) -> dict:
        return {"section_id": self.section_id, "structure": self.structure.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "StructureObservation":
        return cls(d.get("section_id"), PavementStructure.from_dict(d.get("structure") or {}))


@dataclass(frozen=True)
class DegradationObservation:
    section_id: str
    kind: str
    severity: int
    observed_at: datetime
    cause_hint: Optional[str] = None

    type = "degradation"

    def __post_init__(self):
        object.__setattr__(self, "observed_at", parse_ts(self.observed_at))
        if self.kind not in DEGRADATION_KINDS:
            raise RecordValidationError(f"degradation kind must be one of {DEGRADATION_KINDS}, got {self.kind!r}")
        if isinstance(self.severity, bool) or self.severity not in (1, 2, 3):
            raise RecordValidationError(f"severity must be 1, 2 or 3, got {self.severity!r}")
        if self.cause_hint is not None and self.cause_hint not in CAUSES:
            raise RecordValidationError(f"cause_hint must be one of {CAUSES}, got {self.cause_hint!r}")

    def to_dict(self) -> dict:
        return {
            "section_id": self.section_id,
            "kind": self.kind,
            "severity": self.severity,
            "observed_at": format_ts(self.observed_at),
            "cause_hint": self.cause_hint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DegradationObservation":
        return cls(d.get("section_id"), d.get("kind"), d.get("severity"), d.get("observed_at"), d.get("cause_hint"))


@dataclass(frozen=True)
class TrenchRecord:
    id: str
    geometry: geo.AreaGeometry
    opened_at: datetime
    closed_at: datetime
    purpose: str
    backfill: PavementStructure
    section_ids: tuple[str, ...] = ()

    type = "trench"

    def __post_init__(self):
        object.__setattr__(self, "opened_at", parse_ts(self.opened_at))
        object.__setattr__(self, "closed_at", parse_ts(self.closed_at))
        object.__setattr__(self, "section_ids", tuple(self.section_ids))
        if not self.id:
            raise RecordValidationError("trench id must be non-empty")
        if self.opened_at > self.closed_at:
            raise RecordValidationError(
                f"trench {self.id}: opened_at {format_ts(self.opened_at)} is after closed_at {format_ts(self.closed_at)}"
            )
        if self.geometry is None or self.geometry.is_empty or self.geometry.area <= 0:
            raise RecordValidationError(f"trench {self.id}: geometry must have positive area")

    @property
    def observed_at(self) -> datetime:
        return self.backfill.observed_at

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "geometry": mapping(self.geometry),
            "opened_at": format_ts(self.opened_at),
            "closed_at": format_ts(self.closed_at),
            "purpose": self.purpose,
            "backfill": self.backfill.to_dict(),
            "section_ids": list(self.section_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrenchRecord":
        try:
            g = geo.make_valid(shape(d["geometry"]))
        except Exception as exc:
            raise RecordValidationError(f"trench geometry unreadable: {exc}") from exc
        return cls(
            d.get("id"), g, d.get("opened_at"), d.get("closed_at"), d.get("purpose") or "",
            PavementStructure.from_dict(d.get("backfill") or {}), tuple(d.get("section_ids") or ()),
        )


Payload = Union[StructureObservation, DegradationObservation, TrenchRecord]
_PAYLOADS = {"structure": StructureObservation, "degradation": DegradationObservation, "trench": TrenchRecord}


def payload_from_dict(type_: str, d: dict) -> Payload:
    try:
        cls = _PAYLOADS[type_]
    except KeyError:
        raise RecordValidationError(f"event type must be one of {EVENT_TYPES}, got {type_!r}") from None
    if not isinstance(d, dict):
        raise RecordValidationError("event payload must be an object")
    return cls.from_dict(d)


@dataclass(frozen=True)
class RegistryEvent:
    event_id: int
    type: str
    payload: Payload
    recorded_at: datetime

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "type": self.type,
            "recorded_at": format_ts(self.recorded_at),
            "payload": self.payload.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegistryEvent":
        return cls(int(d["event_id"]), d["type"], payload_from_dict(d["type"], d["payload"]), parse_ts(d["recorded_at"]))

    def touches(self, section_id: str) -> bool:
        p = self.payload
        if isinstance(p, TrenchRecord):
            return section_id in p.section_ids
        return p.section_id == section_id

    @property
    def observed_at(self) -> datetime:
        return self.payload.observed_at

    @property
    def carries_structure(self) -> bool:
        return self.type in ("structure", "trench")

    @property
    def structure(self) -> Optional[PavementStructure]:
        p = self.payload
        if isinstance(p, StructureObservation):
            return p.structure
        if isinstance(p, TrenchRecord):
            return p.backfill
        return None


# --- log ----------------------------------------------------------------------


class EventLog:
    """Append-only JSON-lines file. Single writer, any number of readers."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        events = self.read() if self.path.exists() else []
        self._last_id = events[-1].event_id if events else 0
        self._last_recorded = events[-1].recorded_at if events else None

    def read(self) -> list[RegistryEvent]:
        """Committed events in file order. A torn final line (write in progress) is ignored."""
        if not self.path.exists():
            return []
        lines = self.path.read_text(encoding="utf-8").split("\n")
        events = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError:
                if lineno == len(lines):
                    logger.warning("%s: ignoring incomplete trailing line", self.path)
                    break
                raise RecordValidationError(f"{self.path}:{lineno}: corrupt log line")
            events.append(RegistryEvent.from_dict(doc))
        for a, b in zip(events, events[1:]):
            if b.event_id <= a.event_id:
                raise RecordValidationError(f"{self.path}: event ids not strictly increasing at {b.event_id}")
        return events

    def append(self, type_: str, payload: Payload, recorded_at: Timestamp) -> RegistryEvent:
        recorded_at = parse_ts(recorded_at)
        with self._lock:
            if self._last_recorded is not None and recorded_at < self._last_recorded:
                logger.warning("late entry: recorded_at %s precedes previous entry %s",
                               format_ts(recorded_at), format_ts(self._last_recorded))
            event = RegistryEvent(self._last_id + 1, type_, payload, recorded_at)
            line = json.dumps(event.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
            self._last_id = event.event_id
            self._last_recorded = recorded_at
            return event


# --- queries ------------------------------------------------------------------


@dataclass(frozen=True)
class SectionState:
    structure: Optional[PavementStructure]
    open_degradations: tuple[RegistryEvent, ...] = ()


def state_at(events: Iterable[RegistryEvent], section_id: str, t: Timestamp) -> SectionState:
    """State of one section at ``t``, from any snapshot of the log (order irrelevant)."""
    t = parse_ts(t)
    mine = [e for e in events if e.touches(section_id) and e.observed_at <= t]
    built = [e for e in mine if e.carries_structure]
    latest = max(built, key=lambda e: (e.observed_at, e.event_id), default=None)
    cutoff = latest.observed_at if latest is not None else None
    open_degs = sorted(
        (e for e in mine if e.type == "degradation" and (cutoff is None or e.observed_at >= cutoff)),
        key=lambda e: e.event_id,
    )
    return SectionState(latest.structure if latest else None, tuple(open_degs))


class SectionTimeline:
    """Per-section index for repeated :func:`state_at` queries over one snapshot."""

    def __init__(self, events: Iterable[RegistryEvent]):
        self._by_section: dict[str, list[RegistryEvent]] = {}
        for e in events:
            ids = e.payload.section_ids if isinstance(e.payload, TrenchRecord) else (e.payload.section_id,)
            for sid in ids:
                self._by_section.setdefault(sid, []).append(e)
        self._keys = {}
        for sid, evs in self._by_section.items():
            evs.sort(key=lambda e: (e.observed_at, e.event_id))
            self._keys[sid] = [e.observed_at for e in evs]

    def state_at(self, section_id: str, t: Timestamp) -> SectionState:
        t = parse_ts(t)
        evs = self._by_section.get(section_id, [])
        upto = evs[: bisect_right(self._keys.get(section_id, []), t)]
        return state_at(upto, section_id, t)

    def sections(self) -> list[str]:
        return sorted(self._by_section)

    def events_for(self, section_id: str) -> list[RegistryEvent]:
        return list(self._by_section.get(section_id, ()))


class Registry:
    """Sections plus their event log; validates references on write."""

    def __init__(self, sections: Sequence[Section], log: EventLog):
        self.sections = {s.id: s for s in sections}
        self.log = log
        self._tree = shapely.STRtree([s.geometry for s in sections]) if sections else None
        self._order = list(self.sections)

    def _require(self, section_id: str) -> Section:
        try:
            return self.sections[section_id]
        except KeyError:
            raise UnknownSectionError(f"unknown section {section_id!r}") from None

    def sections_under(self, area: geo.AreaGeometry) -> tuple[str, ...]:
        if self._tree is None:
            return ()
        hits = self._tree.query(area, predicate="intersects")
        ids = []
        for i in sorted(hits):
            sec = self.sections[self._order[i]]
            if sec.geometry.intersection(area).length > 0:
                ids.append(sec.id)
        return tuple(ids)

    def record(self, payload: Payload, recorded_at: Timestamp) -> int:
        if isinstance(payload, TrenchRecord):
            if payload.section_ids:
                for sid in payload.section_ids:
                    self._require(sid)
            else:
                mapped = self.sections_under(payload.geometry)
                if not mapped:
                    logger.warning("trench %s crosses no section", payload.id)
                payload = TrenchRecord(payload.id, payload.geometry, payload.opened_at, payload.closed_at,
                                       payload.purpose, payload.backfill, mapped)
        elif isinstance(payload, (StructureObservation, DegradationObservation)):
            self._require(payload.section_id)
        else:
            raise RecordValidationError(f"unsupported payload {type(payload).__name__}")
        return self.log.append(payload.type, payload, recorded_at).event_id

    def record_dict(self, doc: dict, recorded_at: Timestamp) -> int:
        """Record an event given as ``{"type": ..., "payload": {...}}``."""
        if not isinstance(doc, dict) or "type" not in doc:
            raise RecordValidationError("event must be an object with 'type' and 'payload'")
        return self.record(payload_from_dict(doc["type"], doc.get("payload")), recorded_at)

    def events(self) -> list[RegistryEvent]:
        return self.log.read()

    def state_at(self, section_id: str, t: Timestamp) -> SectionState:
        self._require(section_id)
        return state_at(self.events(), section_id, t)


# --- conformity ---------------------------------------------------------------


def normalize_material(code: str) -> str:
    return " ".join(code.split()).casefold()


@dataclass(frozen=True)
class LayerCheck:
    role: str
    material_match: bool
    thickness_delta: float
    within_tolerance: bool


@dataclass(frozen=True)
class ConformityReport:
    status: str
    per_layer: tuple[LayerCheck, ...]
    missing_or_extra_layers: tuple[str, ...]
    missing_layers: tuple[str, ...] = ()
    extra_layers: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "per_layer": [
                {"role": c.role, "material_match": c.material_match,
                 "thickness_delta": c.thickness_delta, "within_tolerance": c.within_tolerance}
                for c in self.per_layer
            ],
            "missing_or_extra_layers": list(self.missing_or_extra_layers),
            "missing_layers": list(self.missing_layers),
            "extra_layers": list(self.extra_layers),
        }


def check_backfill_identity(original: PavementStructure, backfill: PavementStructure,
                            thickness_tol: float = THICKNESS_TOLERANCE) -> ConformityReport:
    """Compare a trench backfill with the structure it replaces, layer by layer.

    ``thickness_delta`` is original minus backfill, so a positive value means
    the backfill layer is thinner.
    """
    checks = []
    for layer in original.layers:
        other = backfill.layer(layer.role)
        if other is None:
            continue
        delta = layer.thickness - other.thickness
        checks.append(LayerCheck(
            layer.role,
            normalize_material(layer.material) == normalize_material(other.material),
            delta,
            abs(delta) <= thickness_tol + _TOL_EPS,
        ))
    original_roles = [l.role for l in original.layers]
    backfill_roles = [l.role for l in backfill.layers]
    missing = tuple(r for r in original_roles if r not in backfill_roles)
    extra = tuple(r for r in backfill_roles if r not in original_roles)
    mismatched = missing + extra
    ok = not mismatched and all(c.material_match and c.within_tolerance for c in checks)
    return ConformityReport("pass" if ok else "fail", tuple(checks),
                            tuple(r for r in ROLES if r in mismatched), missing, extra)


# --- coverage -----------------------------------------------------------------


@dataclass(frozen=True)
class CoverageReport:
    sections: int
    with_structure: int
    with_recent_survey: int
    window_days: float

    @property
    def pct_with_structure(self) -> float:
        return self.with_structure / self.sections if self.sections else 0.0

    @property
    def pct_with_recent_survey(self) -> float:
        return self.with_recent_survey / self.sections if self.sections else 0.0

    def to_dict(self) -> dict:
        return {
            "sections": self.sections,
            "with_structure": self.with_structure,
            "with_recent_survey": self.with_recent_survey,
            "window_days": self.window_days,
            "pct_with_structure": self.pct_with_structure,
            "pct_with_recent_survey": self.pct_with_recent_survey,
        }


def coverage_report(sections: Sequence[Section], events: Sequence[RegistryEvent], now: Timestamp,
                    window_days: float = 365.0) -> CoverageReport:
    """Share of sections with a known structure at ``now`` and with any observation in the window."""
    now = parse_ts(now)
    since = now - timedelta(days=window_days)
    timeline = SectionTimeline(events)
    with_structure = 0
    recent = 0
    for sec in sections:
        if timeline.state_at(sec.id, now).structure is not None:
            with_structure += 1
        if any(since <= e.observed_at <= now for e in timeline.events_for(sec.id)):
            recent += 1
    return CoverageReport(len(sections), with_structure, recent, window_days)
