"""Outdoor scene: flat terrain plus extruded-polygon buildings.

Occlusion follows an open-segment convention: a segment is blocked only if
some point strictly between its endpoints lies strictly inside a building
volume or strictly below the terrain. Touching a face, grazing an edge or
ending on a wall is not a blockage.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._random import stream
from .geo import LocalPoint

EPS = 1e-9

DEFAULT_MATERIALS = {"concrete": 3.0, "glass": 1.0, "metal": 0.5}


class SceneError(ValueError):
    """Invalid scene file or scene content."""


class SceneGenerationError(RuntimeError):
    """Procedural generation could not satisfy the requested layout."""


@dataclass(frozen=True)
class Material:
    name: str
    reflection_loss_db: float

    def __post_init__(self):
        if not np.isfinite(self.reflection_loss_db) or self.reflection_loss_db < 0:
            raise SceneError(f"material {self.name!r}: reflection loss must be finite and >= 0")

    @property
    def amplitude_factor(self) -> float:
        return 10.0 ** (-self.reflection_loss_db / 20.0)


@dataclass(frozen=True)
class Building:
    footprint: tuple[tuple[float, float], ...]
    height: float
    material: str

    @property
    def xy(self) -> np.ndarray:
        return np.asarray(self.footprint, dtype=float)

    def walls(self):
        """Yield ((x0, y0), (x1, y1)) for each footprint edge, CCW order."""
        pts = self.footprint
        for k in range(len(pts)):
            yield pts[k], pts[(k + 1) % len(pts)]


def _signed_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12 and \
            min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def is_simple_polygon(xy) -> bool:
    pts = [tuple(map(float, p)) for p in xy]
    n = len(pts)
    if n < 3:
        return False
    if len(set(pts)) != n:
        return False
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            # adjacent edges share a vertex by construction
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(a1, a2, pts[j], pts[(j + 1) % n]):
                return False
    return abs(_signed_area(np.asarray(pts))) > 0


def points_strictly_inside(xy: np.ndarray, px: np.ndarray, py: np.ndarray, tol: float = EPS) -> np.ndarray:
    """Boolean mask of points strictly inside polygon ``xy`` (boundary excluded)."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    on_edge = np.zeros(px.shape, dtype=bool)
    n = len(xy)
    for k in range(n):
        x0, y0 = xy[k]
        x1, y1 = xy[(k + 1) % n]
        # crossing number, half-open rule on y
        cond = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= cond & (px < xint)
        # distance to the edge, for boundary detection
        ex, ey = x1 - x0, y1 - y0
        L2 = ex * ex + ey * ey
        t = np.clip(((px - x0) * ex + (py - y0) * ey) / L2, 0.0, 1.0)
        dx = px - (x0 + t * ex)
        dy = py - (y0 + t * ey)
        on_edge |= dx * dx + dy * dy <= tol * tol
    return inside & ~on_edge


@dataclass(frozen=True)
class Scene:
    bounds: tuple[float, float, float, float]
    terrain_z: float = 0.0
    buildings: tuple[Building, ...] = ()
    materials: dict = field(default_factory=lambda: dict(DEFAULT_MATERIALS))
    # None: terrain blocks rays but does not reflect them
    terrain_material: str | None = "concrete"

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        object.__setattr__(self, "buildings", tuple(self.buildings))
        validate_scene(self)

    def material(self, name: str) -> Material:
        return Material(name, float(self.materials[name]))

    @property
    def size(self) -> tuple[float, float]:
        x0, x1, y0, y1 = self.bounds
        return x1 - x0, y1 - y0

    def to_dict(self) -> dict:
        return {
            "bounds": list(self.bounds),
            "terrain_z": self.terrain_z,
            "terrain_material": self.terrain_material,
            "materials": [
                {"name": k, "reflection_loss_db": v} for k, v in sorted(self.materials.items())
            ],
            "buildings": [
                {"footprint": [list(p) for p in b.footprint], "height": b.height, "material": b.material}
                for b in self.buildings
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def validate_scene(scene: Scene) -> None:
    x0, x1, y0, y1 = scene.bounds
    if not (np.all(np.isfinite(scene.bounds)) and x1 > x0 and y1 > y0):
        raise SceneError(f"bounds must be finite with positive extent, got {scene.bounds}")
    if not np.isfinite(scene.terrain_z):
        raise SceneError("terrain_z must be finite")
    for name, loss in scene.materials.items():
        Material(name, float(loss))
    if scene.terrain_material is not None and scene.terrain_material not in scene.materials:
        raise SceneError(f"terrain material {scene.terrain_material!r} not in material table")
    for i, b in enumerate(scene.buildings):
        label = f"building {i}"
        xy = b.xy
        if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) < 3:
            raise SceneError(f"{label}: footprint needs at least 3 (x, y) vertices")
        if not np.all(np.isfinite(xy)):
            raise SceneError(f"{label}: non-finite footprint coordinate")
        if not is_simple_polygon(xy):
            raise SceneError(f"{label}: footprint is not a simple polygon")
        if _signed_area(xy) <= 0:
            raise SceneError(f"{label}: footprint must be counterclockwise")
        if not (np.isfinite(b.height) and b.height > 0):
            raise SceneError(f"{label}: height must be > 0, got {b.height}")
        if b.material not in scene.materials:
            raise SceneError(f"{label}: unknown material {b.material!r}")
        if xy[:, 0].min() < x0 or xy[:, 0].max() > x1 or xy[:, 1].min() < y0 or xy[:, 1].max() > y1:
            raise SceneError(f"{label}: footprint extends outside scene bounds")


def scene_from_dict(doc: dict) -> Scene:
    try:
        materials = {m["name"]: float(m["reflection_loss_db"]) for m in doc.get("materials", [])}
        if not materials:
            materials = dict(DEFAULT_MATERIALS)
        buildings = tuple(
            Building(
                footprint=tuple((float(x), float(y)) for x, y in b["footprint"]),
                height=float(b["height"]),
                material=str(b["material"]),
            )
            for b in doc.get("buildings", [])
        )
        return Scene(
            bounds=tuple(doc["bounds"]),
            terrain_z=float(doc.get("terrain_z", 0.0)),
            buildings=buildings,
            materials=materials,
            terrain_material=doc.get("terrain_material", "concrete"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SceneError):
            raise
        raise SceneError(f"malformed scene document: {exc!r}") from exc


def load_scene(path) -> Scene:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno <= len(text.splitlines()) else ""
        raise SceneError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from exc
    return scene_from_dict(doc)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(scene.to_json(), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------- generation

@dataclass(frozen=True)
class ScenGenConfig:
    size: float = 300.0
    building_count: int = 40
    height_range: tuple[float, float] = (6.0, 30.0)
    side_range: tuple[float, float] = (10.0, 30.0)
    min_gap: float = 4.0
    material_weights: tuple[tuple[str, float], ...] = (("concrete", 0.7), ("glass", 0.2), ("metal", 0.1))
    # (x, y, radius) discs kept free of buildings, e.g. around the transmitter mast
    keep_out: tuple[tuple[float, float, float], ...] = ()


def generate_synthetic_scene(seed: int, config: ScenGenConfig = ScenGenConfig()) -> Scene:
    if config.size <= 0:
        raise SceneGenerationError("scene size must be positive")
    lo_h, hi_h = config.height_range
    lo_s, hi_s = config.side_range
    if not (0 < lo_h <= hi_h and 0 < lo_s <= hi_s):
        raise SceneGenerationError("height and side ranges must be positive and ordered")
    names = [m for m, _ in config.material_weights]
    weights = np.array([w for _, w in config.material_weights], dtype=float)
    weights /= weights.sum()

    rng = stream(seed, "scene")
    placed: list[tuple[float, float, float, float]] = []  # xmin, xmax, ymin, ymax
    buildings = []
    attempts = 0
    cap = 100 * max(config.building_count, 1)
    while len(buildings) < config.building_count:
        if attempts >= cap:
            raise SceneGenerationError(
                f"placed {len(buildings)} of {config.building_count} buildings after {cap} attempts"
            )
        attempts += 1
        w, d = rng.uniform(lo_s, hi_s, size=2)
        cx = rng.uniform(w / 2, config.size - w / 2)
        cy = rng.uniform(d / 2, config.size - d / 2)
        h = rng.uniform(lo_h, hi_h)
        mat = names[int(rng.choice(len(names), p=weights))]
        box = (round(cx - w / 2, 2), round(cx + w / 2, 2), round(cy - d / 2, 2), round(cy + d / 2, 2))
        if box[0] < 0 or box[2] < 0 or box[1] > config.size or box[3] > config.size:
            continue
        g = config.min_gap
        if any(box[0] < q[1] + g and q[0] < box[1] + g and box[2] < q[3] + g and q[2] < box[3] + g
               for q in placed):
            continue
        if any(_rect_disc_overlap(box, kx, ky, kr) for kx, ky, kr in config.keep_out):
            continue
        placed.append(box)
        x0, x1, y0, y1 = box
        buildings.append(Building(((x0, y0), (x1, y0), (x1, y1), (x0, y1)), round(float(h), 1), mat))

    materials = {k: v for k, v in DEFAULT_MATERIALS.items()}
    return Scene((0.0, config.size, 0.0, config.size), 0.0, tuple(buildings), materials, "concrete")


def _rect_disc_overlap(box, cx, cy, r) -> bool:
    nx = min(max(cx, box[0]), box[1])
    ny = min(max(cy, box[2]), box[3])
    return (nx - cx) ** 2 + (ny - cy) ** 2 < r * r


# ---------------------------------------------------------------- queries

def inside_any_footprint(scene: Scene, px, py) -> np.ndarray:
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    mask = np.zeros(px.shape, dtype=bool)
    for b in scene.buildings:
        mask |= points_strictly_inside(b.xy, px, py)
    return mask


def sample_receiver_positions(scene: Scene, count: int, height: float, seed: int) -> np.ndarray:
    """Uniform receiver positions at fixed height, outside every footprint.

    Returns a ``(count, 3)`` array. Rejected draws are replaced in draw order,
    so the output depends only on ``seed``.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    x0, x1, y0, y1 = scene.bounds
    rng = stream(seed, "receivers")
    out = np.empty((0, 2))
    drawn = 0
    cap = 100 * count
    while len(out) < count:
        if drawn >= cap:
            raise SceneGenerationError(f"only {len(out)} of {count} receivers placed after {cap} draws")
        n = min(max(count - len(out), 64), cap - drawn)
        pts = np.column_stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])
        drawn += n
        keep = ~inside_any_footprint(scene, pts[:, 0], pts[:, 1])
        out = np.vstack([out, pts[keep]])
    out = out[:count]
    return np.column_stack([out, np.full(count, float(height))])


def segments_occluded(scene: Scene, a, b, tol: float = EPS) -> np.ndarray:
    """Vectorised open-segment occlusion test for segments ``a[k] -> b[k]``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    zt = scene.terrain_z
    blocked = (a[:, 2] < zt - tol) | (b[:, 2] < zt - tol)

    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    for bld in scene.buildings:
        xy = bld.xy
        bx0, by0 = xy.min(axis=0)
        bx1, by1 = xy.max(axis=0)
        top = zt + bld.height
        cand = ~blocked & (lo[:, 0] < bx1) & (hi[:, 0] > bx0) & (lo[:, 1] < by1) & (hi[:, 1] > by0) \
            & (lo[:, 2] < top) & (hi[:, 2] > zt)
        idx = np.flatnonzero(cand)
        if idx.size:
            blocked[idx] = _prism_hits(a[idx], b[idx], xy, zt, top, tol)
    return blocked


def _prism_hits(a, b, xy, z0, z1, tol):
    d = b - a
    n_edges = len(xy)
    cuts = [np.zeros(len(a)), np.ones(len(a))]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for zc in (z0, z1):
            cuts.append((zc - a[:, 2]) / d[:, 2])
        for k in range(n_edges):
            x0, y0 = xy[k]
            ex, ey = xy[(k + 1) % n_edges] - xy[k]
            denom = d[:, 0] * ey - d[:, 1] * ex
            cuts.append(((x0 - a[:, 0]) * ey - (y0 - a[:, 1]) * ex) / denom)
    t = np.column_stack(cuts)
    t = np.where(np.isfinite(t), np.clip(t, 0.0, 1.0), 0.0)
    t.sort(axis=1)
    mid = 0.5 * (t[:, 1:] + t[:, :-1])
    wide = (t[:, 1:] - t[:, :-1]) > 0
    px = a[:, 0:1] + mid * d[:, 0:1]
    py = a[:, 1:2] + mid * d[:, 1:2]
    pz = a[:, 2:3] + mid * d[:, 2:3]
    inside = wide & (pz > z0 + tol) & (pz < z1 - tol) & points_strictly_inside(xy, px, py, tol)
    return inside.any(axis=1)


def segment_occluded(scene: Scene, a, b) -> bool:
    a = a.as_tuple() if isinstance(a, LocalPoint) else a
    b = b.as_tuple() if isinstance(b, LocalPoint) else b
    if np.allclose(a, b, atol=0, rtol=0):
        raise ValueError("segment endpoints coincide")
    return bool(segments_occluded(scene, [a], [b])[0])
