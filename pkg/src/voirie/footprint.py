"""Road footprints from centerlines and from the cadastre, and how they relate.

Two independent estimates of where the road is:

* **centerline**: every axis is widened by its attributed carriageway
  width and the strips are merged. This sees carriageways only.
* **cadastre**: the study area minus all private parcels. This sees the
  whole public space, sidewalks and verges included.

Overlaying them splits public space into carriageway and dependencies, and
flags carriageway claimed outside public space as ``unexplained``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from voirie import geometry as geo
from voirie.errors import ConsistencyError, ParameterError
from voirie.ingestion import CadastralParcel, RoadAxis, StudyBoundary, WidthRules

logger = logging.getLogger(__name__)

LABELS = ("carriageway", "public_space", "dependency", "unexplained")
PROVENANCES = ("centerline", "cadastre", "combined")
_EXPECTED_LABEL = {"centerline": "carriageway", "cadastre": "public_space"}


@dataclass(frozen=True)
class FootprintSet:
    label: str
    geometry: geo.AreaGeometry
    area: float
    provenance: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ParameterError(f"unknown footprint label {self.label!r}")
        if self.provenance not in PROVENANCES:
            raise ParameterError(f"unknown provenance {self.provenance!r}")
        expected = _EXPECTED_LABEL.get(self.provenance)
        if expected is not None and self.label != expected:
            raise ConsistencyError(f"{self.provenance} footprints are labeled {expected}, not {self.label}")

    @classmethod
    def of(cls, label: str, geometry, provenance: str, params: dict) -> "FootprintSet":
        return cls(label, geometry, geo.area(geometry), provenance, dict(params))

    @property
    def boundary_label(self):
        return self.params.get("boundary")

    @property
    def params_hash(self) -> str:
        payload = json.dumps(self.params, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


class Combination(NamedTuple):
    carriageway: FootprintSet
    dependency: FootprintSet
    unexplained: FootprintSet


@dataclass(frozen=True)
class ComparisonMetrics:
    area_a: float
    area_b: float
    area_intersection: float
    area_a_minus_b: float
    area_b_minus_a: float
    iou: float

    @property
    def area_union(self) -> float:
        return self.area_intersection + self.area_a_minus_b + self.area_b_minus_a

    def to_dict(self) -> dict:
        return {
            "area_a": self.area_a,
            "area_b": self.area_b,
            "area_intersection": self.area_intersection,
            "area_a_minus_b": self.area_a_minus_b,
            "area_b_minus_a": self.area_b_minus_a,
            "iou": self.iou,
        }


def assign_width(axis: RoadAxis, rules: WidthRules) -> float:
    """Carriageway width for ``axis``: measured value, else category rule, else fallback."""
    if axis.measured_width is not None:
        return axis.measured_width
    return rules.widths.get(axis.category, rules.fallback_width)


def build_centerline_footprint(
    axes: Sequence[RoadAxis], rules: WidthRules, boundary: StudyBoundary
) -> FootprintSet:
    params = {"boundary": boundary.label, "width_rules": rules.digest(), "axes": len(axes)}
    if not axes:
        return FootprintSet.of("carriageway", geo.EMPTY, "centerline", params)
    strips = geo.buffer_many([a.geometry for a in axes], [assign_width(a, rules) for a in axes])
    merged = geo.union_all(strips)
    clipped = geo.intersection(merged, boundary.geometry)
    return FootprintSet.of("carriageway", clipped, "centerline", params)


def build_cadastral_footprint(parcels: Sequence[CadastralParcel], boundary: StudyBoundary) -> FootprintSet:
    params = {"boundary": boundary.label, "parcels": len(parcels)}
    outside = [p.id for p in parcels if not p.geometry.within(boundary.geometry)]
    if outside:
        logger.warning("%d parcel(s) extend beyond boundary %s and are clipped: %s",
                       len(outside), boundary.label, ", ".join(outside[:10]))
    private = geo.union_all(p.geometry for p in parcels)
    public = geo.difference(boundary.geometry, private)
    return FootprintSet.of("public_space", public, "cadastre", params)


def _check_same_boundary(a: FootprintSet, b: FootprintSet) -> str:
    if a.boundary_label != b.boundary_label:
        raise ConsistencyError(
            f"footprints come from different boundaries: {a.boundary_label!r} vs {b.boundary_label!r}"
        )
    return a.boundary_label


def combine_footprints(a: FootprintSet, b: FootprintSet) -> Combination:
    """Split public space ``b`` using carriageway ``a``.

    carriageway = a ∩ b, dependency = b ∖ a, unexplained = a ∖ b.
    """
    boundary = _check_same_boundary(a, b)
    params = {"boundary": boundary, "carriageway_params": a.params_hash, "public_space_params": b.params_hash}
    return Combination(
        FootprintSet.of("carriageway", geo.intersection(a.geometry, b.geometry), "combined", params),
        FootprintSet.of("dependency", geo.difference(b.geometry, a.geometry), "combined", params),
        FootprintSet.of("unexplained", geo.difference(a.geometry, b.geometry), "combined", params),
    )


def compare_footprints(a: FootprintSet, b: FootprintSet) -> ComparisonMetrics:
    _check_same_boundary(a, b)
    inter = geo.area(geo.intersection(a.geometry, b.geometry))
    a_only = geo.area(geo.difference(a.geometry, b.geometry))
    b_only = geo.area(geo.difference(b.geometry, a.geometry))
    union = inter + a_only + b_only
    # two empty footprints are the same set
    iou = inter / union if union > 0 else 1.0
    return ComparisonMetrics(a.area, b.area, inter, a_only, b_only, iou)
