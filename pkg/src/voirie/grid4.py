"""GRID4: a synthetic district with closed-form areas, used as the reference fixture.

A 380 m square boundary holds a 4 x 4 block of 80 m parcels separated by
12 m streets (the outer ring of street included). Ten centerlines run down
the middle of every street. With a 7 m carriageway rule:

* public space (boundary minus parcels) = 380**2 - 16 * 80**2 = 42 000 m2
* carriageway = 10 * 380 * 7 - 25 * 7**2 = 25 375 m2
* dependency = 42 000 - 25 375 = 16 625 m2
"""

from __future__ import annotations

import json
from pathlib import Path

SIDE = 380.0
PARCEL = 80.0
STREET = 12.0
OFFSETS = (12.0, 104.0, 196.0, 288.0)
CENTERS = (6.0, 98.0, 190.0, 282.0, 374.0)
CARRIAGEWAY_WIDTH = 7.0
CRS_NOTE = "planar meters, local projected frame"

PUBLIC_SPACE_AREA = SIDE**2 - len(OFFSETS) ** 2 * PARCEL**2
CARRIAGEWAY_AREA = 2 * len(CENTERS) * SIDE * CARRIAGEWAY_WIDTH - len(CENTERS) ** 2 * CARRIAGEWAY_WIDTH**2
DEPENDENCY_AREA = PUBLIC_SPACE_AREA - CARRIAGEWAY_AREA


def _ring(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]


def _collection(features):
    return {"type": "FeatureCollection", "crs_note": CRS_NOTE, "features": features}


def _feature(geometry, **props):
    return {"type": "Feature", "properties": props, "geometry": geometry}


def axes_collection(origin=(0.0, 0.0), category="voie_auto"):
    ox, oy = origin
    feats = []
    for i, c in enumerate(CENTERS, start=1):
        feats.append(_feature({"type": "LineString", "coordinates": [[ox + c, oy], [ox + c, oy + SIDE]]},
                              id=f"V{i}", category=category, name=f"Rue {i}"))
    for i, c in enumerate(CENTERS, start=1):
        feats.append(_feature({"type": "LineString", "coordinates": [[ox, oy + c], [ox + SIDE, oy + c]]},
                              id=f"H{i}", category=category, name=f"Avenue {i}"))
    return _collection(feats)


def parcels_collection(origin=(0.0, 0.0)):
    ox, oy = origin
    feats = []
    for i, x in enumerate(OFFSETS):
        for j, y in enumerate(OFFSETS):
            ring = _ring(ox + x, oy + y, ox + x + PARCEL, oy + y + PARCEL)
            feats.append(_feature({"type": "Polygon", "coordinates": [ring]}, id=f"P{i}{j}"))
    return _collection(feats)


def boundary_collection(origin=(0.0, 0.0), label="GRID4"):
    ox, oy = origin
    ring = _ring(ox, oy, ox + SIDE, oy + SIDE)
    return _collection([_feature({"type": "Polygon", "coordinates": [ring]}, label=label)])


def width_rules(carriageway=CARRIAGEWAY_WIDTH):
    return {"voie_auto": carriageway, "voie_tc": carriageway, "voie_cycles": 2.0, "fallback_width": 3.5}


def write_grid4(directory, origin=(0.0, 0.0)) -> dict[str, Path]:
    """Write the fixture files into ``directory`` and return their paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = {
        "axes": (d / "axes.geojson", axes_collection(origin)),
        "parcels": (d / "parcels.geojson", parcels_collection(origin)),
        "boundary": (d / "boundary.geojson", boundary_collection(origin)),
        "widths": (d / "widths.json", width_rules()),
        "widths_full": (d / "widths_full.json", width_rules(STREET)),
    }
    out = {}
    for key, (path, doc) in files.items():
        path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        out[key] = path
    return out
