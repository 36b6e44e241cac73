"""Reference figures shipped for annotation. None of these is ever a computed result.

Unit rates are euros per square metre for western France (2017 regional
analysis); override them with a cost-model JSON file for other regions.
The Paris road areas are published estimates under two definitions of
the road: with or without its dependencies (sidewalks, verges...).
"""

# visible surface course
SURFACE_COST_MIN_EUR_M2 = 6.0
SURFACE_COST_MAX_EUR_M2 = 50.0
# non-visible pavement structure beneath the surface
STRUCTURE_COST_MIN_EUR_M2 = 240.0
STRUCTURE_COST_MAX_EUR_M2 = 520.0

PARIS_ROAD_AREA_WITH_DEPENDENCIES_KM2 = 28.0
PARIS_ROAD_AREA_CARRIAGEWAY_ONLY_KM2 = 15.0
# the area gap between both definitions, and the lower cost bound it implies
PARIS_DEFINITION_GAP_KM2 = 13.0
PARIS_GAP_COST_FLOOR_EUR = 3.1e9

M2_PER_KM2 = 1_000_000.0
