"""Independent oracles for the test-suite.

Nothing here imports shapely or the package's geometry code: rings are
plain coordinate lists and masks are numpy boolean grids.
"""

from __future__ import annotations

import math

import numpy as np

RASTER_STEP = 0.1


class Grid:
    """Cell-centre sample grid over ``[x0, x1] x [y0, y1]``."""

    def __init__(self, x0, y0, x1, y1, step=RASTER_STEP):
        self.step = step
        self.nx = int(round((x1 - x0) / step))
        self.ny = int(round((y1 - y0) / step))
        self.xs = x0 + (np.arange(self.nx) + 0.5) * step
        self.ys = y0 + (np.arange(self.ny) + 0.5) * step

    def empty(self):
        return np.zeros((self.ny, self.nx), dtype=bool)

    def area(self, mask) -> float:
        return float(mask.sum()) * self.step * self.step


def rasterize(rings, grid: Grid) -> np.ndarray:
    """Even-odd point-in-polygon test of every grid sample against ``rings``.

    ``rings`` is a list of closed or open coordinate sequences (shells and
    holes of any number of polygons); parity across all of them gives the
    covered set, which is exact for non-overlapping polygons with holes.
    """
    mask = grid.empty()
    edges = []
    for ring in rings:
        pts = [tuple(map(float, p[:2])) for p in ring]
        if pts[0] == pts[-1]:
            pts = pts[:-1]
        n = len(pts)
        for i in range(n):
            edges.append((*pts[i], *pts[(i + 1) % n]))
    if not edges:
        return mask
    e = np.asarray(edges)
    ex0, ey0, ex1, ey1 = e.T
    for row, y in enumerate(grid.ys):
        crosses = (ey0 > y) != (ey1 > y)
        if not crosses.any():
            continue
        t = (y - ey0[crosses]) / (ey1[crosses] - ey0[crosses])
        xc = np.sort(ex0[crosses] + t * (ex1[crosses] - ex0[crosses]))
        # samples strictly left of an odd number of crossings are inside
        counts = np.searchsorted(xc, grid.xs, side="right")
        mask[row] = (len(xc) - counts) % 2 == 1
    return mask


def rect_ring(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def strip_rings(p, q, width):
    """Flat-capped strip around the straight segment ``p -> q``."""
    (x0, y0), (x1, y1) = p, q
    L = math.hypot(x1 - x0, y1 - y0)
    nx, ny = -(y1 - y0) / L * width / 2, (x1 - x0) / L * width / 2
    return [[(x0 + nx, y0 + ny), (x0 - nx, y0 - ny), (x1 - nx, y1 - ny), (x1 + nx, y1 + ny)]]


def walk_length(vertices) -> float:
    return sum(math.dist(a, b) for a, b in zip(vertices, vertices[1:]))


def walk_point(vertices, m):
    """Point at arc length ``m`` found by walking segments one by one."""
    acc = 0.0
    for a, b in zip(vertices, vertices[1:]):
        seg = math.dist(a, b)
        if acc + seg >= m:
            t = (m - acc) / seg
            return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        acc += seg
    return tuple(vertices[-1])


def replay_state(events, section_id, t):
    """Brute-force state of one section at time ``t``: scan every event.

    ``events`` are plain dicts as written to the log file. Returns
    ``(structure_dict_or_None, sorted list of open degradation event ids)``.
    """
    best = None  # (observed_at, event_id, structure)
    for ev in events:
        p = ev["payload"]
        if ev["type"] == "structure" and p["section_id"] == section_id:
            s = p["structure"]
        elif ev["type"] == "trench" and section_id in p["section_ids"]:
            s = p["backfill"]
        else:
            continue
        obs = s["observed_at"]
        if obs <= t and (best is None or (obs, ev["event_id"]) > best[:2]):
            best = (obs, ev["event_id"], s)
    open_ids = []
    for ev in events:
        p = ev["payload"]
        if ev["type"] != "degradation" or p["section_id"] != section_id or p["observed_at"] > t:
            continue
        closed = False
        for other in events:
            q = other["payload"]
            if other["type"] == "structure" and q["section_id"] == section_id:
                s_obs = q["structure"]["observed_at"]
            elif other["type"] == "trench" and section_id in q["section_ids"]:
                s_obs = q["backfill"]["observed_at"]
            else:
                continue
            if p["observed_at"] < s_obs <= t:
                closed = True
                break
        if not closed:
            open_ids.append(ev["event_id"])
    return (best[2] if best else None), sorted(open_ids)
