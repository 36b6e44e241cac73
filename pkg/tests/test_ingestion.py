import json
import logging

import pytest

from voirie import geometry as geo
from voirie.errors import CardinalityError, CRSError, DuplicationError, ParameterError, SchemaError
from voirie.ingestion import load_axes, load_boundary, load_parcels, load_width_rules

BASE = (652_000.0, 6_862_000.0)


def line(*pts):
    return {"type": "LineString", "coordinates": [[BASE[0] + x, BASE[1] + y] for x, y in pts]}


def poly(*pts):
    ring = [[BASE[0] + x, BASE[1] + y] for x, y in pts]
    return {"type": "Polygon", "coordinates": [ring + [ring[0]]]}


def test_grid4_axes(grid4):
    axes = load_axes(grid4["axes"])
    assert len(axes) == 10
    assert [a.id for a in axes] == ["V1", "V2", "V3", "V4", "V5", "H1", "H2", "H3", "H4", "H5"]
    assert all(a.category == "voie_auto" and a.length == 380.0 for a in axes)


def test_empty_collection(write_fc):
    assert load_axes(write_fc("a.geojson", [])) == []
    assert load_parcels(write_fc("p.geojson", [])) == []


def test_duplicate_axis_id(write_fc):
    path = write_fc("a.geojson", [
        (line((0, 0), (10, 0)), {"id": "A1", "category": "voie_auto"}),
        (line((0, 5), (10, 5)), {"id": "A1", "category": "voie_auto"}),
    ])
    with pytest.raises(DuplicationError):
        load_axes(path)


@pytest.mark.parametrize("props, missing", [({"category": "voie_auto"}, "id"), ({"id": "A1"}, "category")])
def test_missing_property_names_feature(write_fc, props, missing):
    path = write_fc("a.geojson", [
        (line((0, 0), (10, 0)), {"id": "A0", "category": "voie_auto"}),
        (line((0, 5), (10, 5)), props),
    ])
    with pytest.raises(SchemaError, match=rf"#1.*{missing}"):
        load_axes(path)


def test_geographic_coordinates_rejected(write_fc):
    path = write_fc("a.geojson", [
        ({"type": "LineString", "coordinates": [[2.35, 48.85], [2.36, 48.86]]}, {"id": "A1", "category": "voie_auto"}),
    ])
    with pytest.raises(CRSError):
        load_axes(path)


def test_axis_measured_width(write_fc):
    path = write_fc("a.geojson", [
        (line((0, 0), (10, 0)), {"id": "A1", "category": "voie_auto", "measured_width": 9.2, "name": "Rue X"}),
    ])
    (axis,) = load_axes(path)
    assert axis.measured_width == 9.2 and axis.name == "Rue X"


def test_axis_non_positive_measured_width(write_fc):
    path = write_fc("a.geojson", [
        (line((0, 0), (10, 0)), {"id": "A1", "category": "voie_auto", "measured_width": 0}),
    ])
    with pytest.raises(ParameterError):
        load_axes(path)


def test_axis_wrong_geometry_type(write_fc):
    path = write_fc("a.geojson", [(poly((0, 0), (1, 0), (1, 1)), {"id": "A1", "category": "voie_auto"})])
    with pytest.raises(SchemaError):
        load_axes(path)


def test_grid4_parcels(grid4):
    parcels = load_parcels(grid4["parcels"])
    assert len(parcels) == 16
    assert sum(p.area for p in parcels) == 102_400.0


def test_bowtie_parcel_repaired_with_warning(write_fc, caplog):
    path = write_fc("p.geojson", [(poly((0, 0), (20, 20), (20, 0), (0, 20)), {"id": "B"})])
    with caplog.at_level(logging.WARNING, logger="voirie.ingestion"):
        (parcel,) = load_parcels(path)
    assert "repaired" in caplog.text
    assert parcel.area == pytest.approx(200.0)


def test_zero_area_parcel(write_fc):
    path = write_fc("p.geojson", [(poly((0, 0), (10, 0), (20, 0)), {"id": "Z"})])
    with pytest.raises(SchemaError):
        load_parcels(path)


def test_grid4_boundary(grid4):
    b = load_boundary(grid4["boundary"])
    assert b.area == 144_400.0 and b.label == "GRID4"


def test_boundary_cardinality(write_fc):
    path = write_fc("b.geojson", [
        (poly((0, 0), (100, 0), (100, 100)), {}),
        (poly((200, 0), (300, 0), (300, 100)), {}),
    ])
    with pytest.raises(CardinalityError):
        load_boundary(path)
    with pytest.raises(CardinalityError):
        load_boundary(write_fc("e.geojson", []))


def test_boundary_line_feature(write_fc):
    with pytest.raises(SchemaError):
        load_boundary(write_fc("b.geojson", [(line((0, 0), (500, 0)), {})]))


def test_not_a_feature_collection(tmp_path):
    path = tmp_path / "x.geojson"
    path.write_text(json.dumps({"type": "Feature"}))
    with pytest.raises(SchemaError):
        load_axes(path)


def _rules(tmp_path, doc):
    path = tmp_path / "w.json"
    path.write_text(json.dumps(doc))
    return load_width_rules(path)


def test_width_rules_parse(tmp_path):
    rules = _rules(tmp_path, {"voie_auto": 7.0, "fallback_width": 3.5})
    assert rules.widths == {"voie_auto": 7.0} and rules.fallback_width == 3.5


def test_width_rules_negative(tmp_path):
    with pytest.raises(ParameterError):
        _rules(tmp_path, {"voie_auto": -1, "fallback_width": 3.5})


def test_width_rules_no_fallback(tmp_path):
    with pytest.raises(SchemaError):
        _rules(tmp_path, {})


def test_loading_is_deterministic(grid4):
    first = [(a.id, a.geometry.wkb) for a in load_axes(grid4["axes"])]
    again = [(a.id, a.geometry.wkb) for a in load_axes(grid4["axes"])]
    assert first == again
