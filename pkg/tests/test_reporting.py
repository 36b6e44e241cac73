import json
import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voirie import geometry as geo
from voirie import grid4 as G
from voirie.errors import ExportError, ParameterError, SchemaError
from voirie.footprint import (
    FootprintSet,
    build_cadastral_footprint,
    build_centerline_footprint,
    combine_footprints,
)
from voirie.ingestion import RoadAxis, load_axes, load_boundary, load_parcels, load_width_rules
from voirie.registry import DegradationObservation, RegistryEvent, build_sections
from voirie.reporting import (
    CostModel,
    area_report,
    cost_envelope,
    export_features,
    format_area_report,
    gap_cost,
    load_cost_model,
    maintenance_priority,
)

T0 = datetime(2021, 1, 1, tzinfo=timezone.utc)


def test_default_cost_model_rates():
    m = CostModel()
    assert (m.surface_min, m.surface_max, m.structure_min, m.structure_max) == (6.0, 50.0, 240.0, 520.0)


def test_cost_surface_only():
    env = cost_envelope(1000, basis="surface_only")
    assert (env.min_eur, env.max_eur) == (6_000.0, 50_000.0)


def test_cost_structure_only():
    env = cost_envelope(1000, basis="structure_only")
    assert (env.min_eur, env.max_eur) == (240_000.0, 520_000.0)


def test_cost_full():
    env = cost_envelope(1000, basis="full")
    assert (env.min_eur, env.max_eur) == (246_000.0, 570_000.0)


def test_cost_zero_and_negative():
    env = cost_envelope(0)
    assert (env.min_eur, env.max_eur) == (0.0, 0.0)
    with pytest.raises(ParameterError):
        cost_envelope(-1)
    with pytest.raises(ParameterError):
        cost_envelope(10, basis="partial")


@settings(max_examples=200, derandomize=True)
@given(area=st.floats(0, 1e9), basis=st.sampled_from(["surface_only", "structure_only", "full"]))
def test_cost_linear(area, basis):
    one, two = cost_envelope(area, basis=basis), cost_envelope(2 * area, basis=basis)
    assert two.min_eur == 2 * one.min_eur and two.max_eur == 2 * one.max_eur
    assert one.min_eur <= one.max_eur


def test_gap_cost_paris():
    env = gap_cost(13_000_000)
    assert env.min_eur == 3.12e9
    assert env.min_eur >= 3.1e9
    assert env.basis == "structure_only" and "at least" in env.note


def test_gap_cost_small():
    assert gap_cost(0).min_eur == 0.0
    assert gap_cost(1).min_eur == 240.0
    with pytest.raises(ParameterError):
        gap_cost(-5)


def test_cost_model_validation(tmp_path):
    with pytest.raises(ParameterError):
        CostModel(surface_min=60, surface_max=50)
    path = tmp_path / "cost.json"
    path.write_text(json.dumps({"surface_min": 8, "surface_max": 40}))
    m = load_cost_model(path)
    assert m.surface_min == 8.0 and m.structure_min == 240.0
    path.write_text(json.dumps({"surface_mni": 8}))
    with pytest.raises(SchemaError):
        load_cost_model(path)


@pytest.fixture(scope="module")
def grid4_sets(tmp_path_factory):
    paths = G.write_grid4(tmp_path_factory.mktemp("rep"))
    boundary = load_boundary(paths["boundary"])
    a = build_centerline_footprint(load_axes(paths["axes"]), load_width_rules(paths["widths"]), boundary)
    b = build_cadastral_footprint(load_parcels(paths["parcels"]), boundary)
    return a, b, combine_footprints(a, b)


def test_area_report_grid4(grid4_sets):
    _, _, combo = grid4_sets
    rep = area_report([combo.carriageway, combo.dependency])
    assert rep.row("carriageway").area_m2 == pytest.approx(25_375.0, rel=1e-9)
    assert rep.row("dependency").area_m2 == pytest.approx(16_625.0, rel=1e-9)
    assert rep.total_m2 == pytest.approx(42_000.0, rel=1e-9)
    assert rep.row("carriageway").area_km2 == pytest.approx(0.025375)
    assert "total" in format_area_report(rep)


def test_area_report_empty():
    rep = area_report([])
    assert rep.rows == () and rep.to_dict()["total_m2"] == 0.0


def test_area_report_same_label_summed():
    sq = lambda x: FootprintSet.of("dependency", geo.rectangle(x, 0, x + 10, 10), "combined", {"boundary": "b"})
    rep = area_report([sq(0), sq(100)])
    (row,) = rep.rows
    assert row.area_m2 == 200.0 and len(row.sets) == 2


def test_area_report_paris_annotation(grid4_sets):
    _, _, combo = grid4_sets
    rep = area_report(list(combo), paris_reference=True)
    refs = {a["reference"]: a for a in rep.annotations}
    assert refs["paris_with_dependencies"]["reference_km2"] == 28.0
    assert refs["paris_carriageway_only"]["reference_km2"] == 15.0
    assert refs["paris_with_dependencies"]["computed_km2"] == pytest.approx(0.042)
    assert area_report(list(combo)).annotations == ()


def test_area_report_total_equals_constituents(grid4_sets):
    a, b, combo = grid4_sets
    sets = [a, b, *combo]
    assert area_report(sets).total_m2 == pytest.approx(sum(s.area for s in sets), rel=1e-9)


def _deg(eid, sid, sev, when):
    return RegistryEvent(eid, "degradation", DegradationObservation(sid, "pothole", sev, when), when)


@pytest.fixture(scope="module")
def sections():
    return build_sections([RoadAxis("A1", geo.polyline([(0, 0), (50, 0)]), "voie_auto")])


def test_priority_one_pothole_one_year(sections):
    events = [_deg(1, "A1:0", 3, T0)]
    (p,) = maintenance_priority(events, sections, T0 + timedelta(days=365.25))
    assert p.section_id == "A1:0" and p.score == pytest.approx(6.0, rel=1e-12)


def test_priority_empty(sections):
    assert maintenance_priority([], sections, T0) == []


def test_priority_tie_break(sections):
    events = [_deg(1, "A1:1", 2, T0), _deg(2, "A1:0", 2, T0)]
    ranked = maintenance_priority(events, sections, T0)
    assert [p.section_id for p in ranked] == ["A1:0", "A1:1"]


def test_priority_order_invariant_under_permutation(sections):
    rng = random.Random(11)
    events = [_deg(i, f"A1:{rng.randint(0, 4)}", rng.randint(1, 3), T0 + timedelta(days=rng.randint(0, 900)))
              for i in range(1, 40)]
    now = T0 + timedelta(days=1000)
    base = maintenance_priority(events, sections, now)
    for _ in range(5):
        rng.shuffle(events)
        assert maintenance_priority(events, sections, now) == base


def test_export_dependency_set(grid4_sets, tmp_path):
    _, _, combo = grid4_sets
    path = export_features([combo.dependency], tmp_path / "dep.geojson")
    doc = json.loads(path.read_text())
    (feat,) = doc["features"]
    assert feat["geometry"]["type"] == "MultiPolygon"
    assert feat["properties"]["area_m2"] == pytest.approx(16_625.0, rel=1e-9)
    assert set(feat["properties"]) >= {"label", "area_m2", "provenance", "params_hash"}


def test_export_empty(tmp_path, grid4_sets):
    _, _, combo = grid4_sets
    doc = json.loads(export_features([combo.unexplained], tmp_path / "e.geojson").read_text())
    assert doc["features"] == []
    doc = json.loads(export_features([], tmp_path / "e2.geojson").read_text())
    assert doc["type"] == "FeatureCollection" and doc["features"] == []


def test_export_unwritable(tmp_path, grid4_sets):
    with pytest.raises(ExportError):
        export_features([grid4_sets[0]], tmp_path / "missing-dir" / "x.geojson")
