"""Procedural outsole geometry, its wear over time and the impression it leaves.

The geometry is fixed once per seed. A ``WearState`` is just that geometry plus a
week; depth is derived from it on demand, so advancing by ``a`` then ``b`` weeks is
exactly advancing by ``a + b``.

Depth model per pixel class (surface(t) = max(0, 1 - rate * t)):

* tread: surface
* sipe (shallow cut between a merge pair): min(surface, SIPE_LEVEL)
* dimple ("dot feature"): min(surface, floor), floor = 1 - dimple depth
* logo glyph: surface while above LOGO_TOP, then min(surface, LOGO_CAVITY)
* void (grooves, holes, off-sole): 0
"""

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from shoewear.errors import ConfigError, ShapeError, ShoewearError
from shoewear.imaging.image import Image, Side, downsample

logger = logging.getLogger(__name__)

REFERENCE_SHAPE = (640, 256)

VOID, TREAD, SIPE, DIMPLE, LOGO = 0, 1, 2, 3, 4

SIPE_LEVEL = 0.72
LOGO_TOP = 0.92
LOGO_CAVITY = 0.3
CONTACT_TOL = 0.05
CONTACT_BAND = 0.25
FADE_DEPTH = 0.3
PLANE_SLACK = 0.35
INK_FLOOR = 0.55
INK_PRESSURE = 0.25

# half-width of the sole (fraction of canvas width) along its length, toe to heel
_SOLE_ROWS = [0.02, 0.07, 0.22, 0.42, 0.60, 0.78, 0.91, 0.98]
_SOLE_HALF_WIDTH = [0.14, 0.33, 0.42, 0.37, 0.31, 0.35, 0.31, 0.14]

_FONT = {
    'A': ('010', '101', '111', '101', '101'),
    'C': ('111', '100', '100', '100', '111'),
    'E': ('111', '100', '110', '100', '111'),
    'G': ('111', '100', '101', '101', '111'),
    'I': ('111', '010', '010', '010', '111'),
    'L': ('100', '100', '100', '100', '111'),
    'O': ('111', '101', '101', '101', '111'),
    'S': ('111', '100', '111', '001', '111'),
    'T': ('111', '010', '010', '010', '010'),
}


@dataclass(frozen=True)
class OutsoleSpec:
    seed: int = 0
    height: int = 640
    width: int = 256
    block_count: int = 63
    dot_density: float = 0.3
    hole_count: int = 10
    merge_pairs: int = 3
    logo_text: str = 'GEL'
    logo_center: Tuple[float, float] = (0.58, 0.5)
    base_rate: float = 0.003
    heel_rate: float = 0.012
    toe_rate: float = 0.010
    texture: float = 0.06
    side: Side = Side.RIGHT

    def __post_init__(self):
        object.__setattr__(self, 'side', Side.parse(self.side))
        object.__setattr__(self, 'logo_center', tuple(self.logo_center))
        if self.height % 32 or self.width % 32:
            raise ConfigError(f"Canvas {self.height}x{self.width} must be divisible by 32")
        if self.height < 64 or self.width < 32:
            raise ConfigError(f"Canvas must be at least 64x32, got {self.height}x{self.width}")
        if self.block_count < 1:
            raise ConfigError(f"block_count must be >= 1, got {self.block_count}")
        if self.dot_density < 0 or self.hole_count < 0 or self.merge_pairs < 0:
            raise ConfigError("Feature counts must be >= 0")
        if min(self.base_rate, self.heel_rate, self.toe_rate) < 0:
            raise ConfigError("Wear rates must be >= 0")
        unknown = sorted(set(self.logo_text.upper()) - set(_FONT))
        if unknown:
            raise ConfigError(f"Logo text uses unsupported glyphs {unknown}")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'OutsoleSpec':
        known = {k: v for k, v in values.items()
                 if k in cls.__dataclass_fields__ and v is not None}
        return cls(**known)

    def mirrored(self) -> 'OutsoleSpec':
        other = Side.LEFT if self.side is Side.RIGHT else Side.RIGHT
        return replace(self, side=other)

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.height * self.width / (REFERENCE_SHAPE[0] * REFERENCE_SHAPE[1])))


@dataclass(frozen=True, eq=False)
class OutsoleGeometry:
    spec: OutsoleSpec
    kind: np.ndarray
    block_labels: np.ndarray
    rate: np.ndarray
    pressure: np.ndarray
    dimple_floor: np.ndarray
    dot_ids: np.ndarray
    logo_mask: np.ndarray
    plate_mask: np.ndarray
    sipe_ids: np.ndarray
    merge_pairs: Tuple[Tuple[int, int], ...]
    contact_window: int

    @property
    def shape(self) -> Tuple[int, int]:
        return self.kind.shape

    @property
    def dot_count(self) -> int:
        return int(self.dot_ids.max())

    @property
    def block_count(self) -> int:
        return len(np.unique(self.block_labels[self.block_labels > 0]))


@dataclass(frozen=True, eq=False)
class WearState:
    geometry: OutsoleGeometry
    week: int = 0

    @cached_property
    def surface(self) -> np.ndarray:
        return np.maximum(0.0, 1.0 - self.geometry.rate * self.week)

    @cached_property
    def depth(self) -> np.ndarray:
        g, surface = self.geometry, self.surface
        depth = np.zeros(g.shape)
        depth[g.kind == TREAD] = surface[g.kind == TREAD]
        sipe = g.kind == SIPE
        depth[sipe] = np.minimum(surface[sipe], SIPE_LEVEL)
        dimple = g.kind == DIMPLE
        depth[dimple] = np.minimum(surface[dimple], g.dimple_floor[dimple])
        logo = g.kind == LOGO
        depth[logo] = np.where(surface[logo] > LOGO_TOP, surface[logo],
                               np.minimum(surface[logo], LOGO_CAVITY))
        return depth


def hashed_texture(shape: Tuple[int, int], seed: int, smooth: int = 5) -> np.ndarray:
    """Platform-stable texture in [-1, 1] from a per-pixel integer hash."""
    y, x = np.indices(shape, dtype=np.uint64)
    h = (x * np.uint64(0x9E3779B97F4A7C15)) ^ (y * np.uint64(0xC2B2AE3D27D4EB4F))
    h ^= np.uint64((seed * 0x165667B19E3779F9) & 0xFFFFFFFFFFFFFFFF)
    for mult in (0xFF51AFD7ED558CCD, 0xC4CEB9FE1A85EC53):
        h ^= h >> np.uint64(33)
        h *= np.uint64(mult)
    h ^= h >> np.uint64(33)
    unit = (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    texture = ndimage.uniform_filter(2.0 * unit - 1.0, size=smooth, mode='reflect')
    return texture / max(float(np.abs(texture).max()), 1e-12)


def _normalized_grid(shape: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = np.indices(shape, dtype=np.float64)
    return (rows + 0.5) / shape[0], (cols + 0.5) / shape[1]


def _sole_mask(shape: Tuple[int, int]) -> np.ndarray:
    v, u = _normalized_grid(shape)
    half_width = np.interp(v, _SOLE_ROWS, _SOLE_HALF_WIDTH)
    return (v >= _SOLE_ROWS[0]) & (v <= _SOLE_ROWS[-1]) & (np.abs(u - 0.5) <= half_width)


def _pressure_fields(shape: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    v, u = _normalized_grid(shape)
    heel = np.exp(-((v - 0.84) / 0.10) ** 2 - ((u - 0.50) / 0.25) ** 2)
    toe = np.exp(-((v - 0.24) / 0.10) ** 2 - ((u - 0.45) / 0.30) ** 2)
    return heel, toe


def _glyph_bitmap(text: str, cell: int) -> np.ndarray:
    columns = []
    for i, char in enumerate(text.upper()):
        if i:
            columns.append(np.zeros((5, 1), dtype=bool))
        columns.append(np.array([[c == '1' for c in row] for row in _FONT[char]]))
    bitmap = np.hstack(columns)
    return np.kron(bitmap, np.ones((cell, cell), dtype=bool)).astype(bool)


def _sample_seeds(candidates: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Dart-throwing with a shrinking exclusion radius until ``count`` points fit."""
    coords = np.argwhere(candidates).astype(np.float64)
    if count == 0:
        return np.empty((0, 2))
    if len(coords) < count:
        raise ConfigError(f"Canvas too small to place {count} blocks")
    radius = 0.7 * np.sqrt(len(coords) / count)
    accepted = np.empty((count, 2))
    while True:
        n = 0
        for i in rng.permutation(len(coords)):
            point = coords[i]
            if n and np.min(np.sum((accepted[:n] - point) ** 2, axis=1)) < radius * radius:
                continue
            accepted[n] = point
            n += 1
            if n == count:
                return accepted
        radius *= 0.9


def _place_discs(available: np.ndarray, radii: List[int],
                 rng: np.random.Generator) -> List[Optional[np.ndarray]]:
    """One disc mask per radius, ``None`` where no room was left."""
    rows, cols = np.indices(available.shape)
    free = available.copy()
    discs = []
    for r in radii:
        room = ndimage.distance_transform_edt(free)
        spots = np.argwhere(room > r + 1)
        if len(spots) == 0:
            logger.debug("No room left for a disc of radius %d", r)
            discs.append(None)
            continue
        cy, cx = spots[rng.integers(len(spots))]
        dist2 = (rows - cy) ** 2 + (cols - cx) ** 2
        discs.append(dist2 <= r * r)
        free &= dist2 > (r + 2) ** 2
    return discs


def _build_geometry(spec: OutsoleSpec) -> OutsoleGeometry:
    shape = (spec.height, spec.width)
    s = spec.scale
    rng = np.random.default_rng(spec.seed)
    groove = max(1.5, 6.0 * s)

    sole = _sole_mask(shape)
    edge_distance = ndimage.distance_transform_edt(sole)

    # logo plate: one block of its own in the low-wear midfoot
    cell = max(1, int(round(3 * s)))
    glyph = _glyph_bitmap(spec.logo_text, cell)
    margin = 2 * cell
    plate_h, plate_w = glyph.shape[0] + 2 * margin, glyph.shape[1] + 2 * margin
    top = int(round(spec.logo_center[0] * spec.height - plate_h / 2))
    left = int(round(spec.logo_center[1] * spec.width - plate_w / 2))
    if top < 0 or left < 0 or top + plate_h > spec.height or left + plate_w > spec.width:
        raise ConfigError("Logo plate does not fit on the canvas")
    plate = np.zeros(shape, dtype=bool)
    plate[top:top + plate_h, left:left + plate_w] = True
    plate &= edge_distance > groove
    logo = np.zeros(shape, dtype=bool)
    logo[top + margin:top + margin + glyph.shape[0],
         left + margin:left + margin + glyph.shape[1]] = glyph
    logo &= plate
    plate_distance = ndimage.distance_transform_edt(~plate)

    # Voronoi blocks separated by grooves
    interior = sole & (edge_distance > groove) & (plate_distance > groove)
    n_seeds = spec.block_count - 1
    seeds = _sample_seeds(interior & (plate_distance > 3 * groove), n_seeds, rng)
    labels = np.zeros(shape, dtype=np.int32)
    sipe_ids = np.zeros(shape, dtype=np.int32)
    pairs: List[Tuple[int, int]] = []

    heel, toe = _pressure_fields(shape)
    smooth_rate = (spec.base_rate + (spec.heel_rate - spec.base_rate) * heel
                   + (spec.toe_rate - spec.base_rate) * toe)

    if n_seeds:
        pixels = np.argwhere(interior)
        k = min(3, n_seeds)
        dist, idx = cKDTree(seeds).query(pixels, k=k)
        dist = dist.reshape(len(pixels), k)
        idx = idx.reshape(len(pixels), k)
        second = dist[:, 1] if k > 1 else np.full(len(pixels), np.inf)
        third = dist[:, 2] if k > 2 else np.full(len(pixels), np.inf)
        tread = second - dist[:, 0] >= groove
        labels[pixels[tread, 0], pixels[tread, 1]] = idx[tread, 0] + 1

        # merge pairs: neighbouring cells in the highest-wear region, joined by a sipe
        boundary = ~tread & (third - second >= groove / 2)
        if k > 1 and spec.merge_pairs:
            a = np.minimum(idx[boundary, 0], idx[boundary, 1])
            b = np.maximum(idx[boundary, 0], idx[boundary, 1])
            keys, counts = np.unique(a * n_seeds + b, return_counts=True)
            seed_rate = smooth_rate[seeds[:, 0].astype(int), seeds[:, 1].astype(int)]
            scored = sorted(((seed_rate[key // n_seeds] + seed_rate[key % n_seeds], key)
                             for key, count in zip(keys, counts) if count >= 3 * groove),
                            reverse=True)
            used = set()
            for _, key in scored:
                i, j = int(key // n_seeds), int(key % n_seeds)
                if i in used or j in used:
                    continue
                used.update((i, j))
                pairs.append((i + 1, j + 1))
                on_pair = boundary.copy()
                on_pair[boundary] = (a == i) & (b == j)
                sipe_ids[pixels[on_pair, 0], pixels[on_pair, 1]] = len(pairs)
                if len(pairs) == spec.merge_pairs:
                    break

    labels[plate] = spec.block_count

    kind = np.full(shape, VOID, dtype=np.uint8)
    kind[labels > 0] = TREAD
    kind[sipe_ids > 0] = SIPE

    # holes persist, dimples fade once the surface reaches their floor
    open_tread = (kind == TREAD) & ~plate
    n_dots = int(round(spec.dot_density * spec.block_count))
    hole_radii = [max(1, int(round(5 * s)))] * spec.hole_count
    dot_radii = [max(1, int(round(r * s))) for r in rng.uniform(3, 5, n_dots)]
    discs = _place_discs(open_tread, hole_radii + dot_radii, rng)
    dimple_floor = np.zeros(shape)
    dot_ids = np.zeros(shape, dtype=np.int32)
    for disc in [d for d in discs[:spec.hole_count] if d is not None]:
        kind[disc] = VOID
    for disc in [d for d in discs[spec.hole_count:] if d is not None]:
        dot_ids[disc] = dot_ids.max() + 1
        kind[disc] = DIMPLE
        dimple_floor[disc] = 1.0 - rng.uniform(0.15, 0.45)
    kind[logo] = LOGO

    texture_seed = spec.seed * 2 + (1 if spec.side is Side.LEFT else 0)
    rate = smooth_rate * (1.0 + spec.texture * hashed_texture(shape, texture_seed))
    pressure = (smooth_rate - spec.base_rate) / max(float(smooth_rate.max() - spec.base_rate), 1e-12)

    rasters = dict(kind=kind, block_labels=labels, dimple_floor=dimple_floor, dot_ids=dot_ids,
                   logo_mask=logo, plate_mask=plate, sipe_ids=sipe_ids)
    if spec.side is Side.LEFT:
        rasters = {name: np.fliplr(raster).copy() for name, raster in rasters.items()}
        rate = np.fliplr(smooth_rate).copy() * (1.0 + spec.texture
                                                * hashed_texture(shape, texture_seed))
        pressure = np.fliplr(pressure).copy()
    window = max(3, int(round(31 * s)) | 1)
    return OutsoleGeometry(spec=spec, rate=rate, pressure=pressure, merge_pairs=tuple(pairs),
                           contact_window=window, **rasters)


def generate_outsole(spec: OutsoleSpec) -> WearState:
    geometry = _build_geometry(spec)
    logger.debug("Generated %s outsole: %d blocks, %d dots, %d merge pairs", spec.side.value,
                 geometry.block_count, geometry.dot_count, len(geometry.merge_pairs))
    return WearState(geometry, 0)


def advance_wear(state: WearState, weeks: int) -> WearState:
    if isinstance(weeks, bool) or int(weeks) != weeks or weeks < 0 or weeks % 2:
        raise ShoewearError(f"Wear must advance by an even number of weeks >= 0, got {weeks}")
    if weeks == 0:
        return state
    return WearState(state.geometry, state.week + int(weeks))


def contact_ink(state: WearState) -> np.ndarray:
    """Fraction of full contact per pixel; surfaces well below the local plane fade first."""
    depth = state.depth
    plane = ndimage.maximum_filter(depth, size=state.geometry.contact_window, mode='constant')
    positive = depth[depth > 0]
    if positive.size:
        plane = np.maximum(plane, np.percentile(positive, 99) - PLANE_SLACK)
    contact = np.clip(1.0 - np.maximum(0.0, plane - depth - CONTACT_TOL) / CONTACT_BAND, 0.0, 1.0)
    return contact * np.clip(depth / FADE_DEPTH, 0.0, 1.0)


def render_impression(state: WearState, factor: int = 1) -> Image:
    """256-level impression: white gel background, darker where the outsole pressed harder."""
    g = state.geometry
    ink = contact_ink(state)
    pixels = 1.0 - ink * (INK_FLOOR + INK_PRESSURE * g.pressure)
    image = Image(pixels, week=state.week, side=g.spec.side)
    return downsample(image, factor).quantized()


def count_visible_dots(state: WearState) -> int:
    g = state.geometry
    visible = 0
    for dot in range(1, g.dot_count + 1):
        inside = g.dot_ids == dot
        gap = state.surface[inside] - state.depth[inside]
        if np.median(gap) > CONTACT_TOL:
            visible += 1
    return visible


def logo_contrast(state: WearState) -> float:
    """Contact lost on the glyph relative to the rest of its plate (0 while hidden)."""
    g = state.geometry
    if not g.logo_mask.any():
        return 0.0
    ink = contact_ink(state)
    backing = g.plate_mask & ~g.logo_mask
    return float(ink[backing].mean() - ink[g.logo_mask].mean())


def logo_image_contrast(image: Image, geometry: OutsoleGeometry) -> float:
    """Glyph brightness over the rest of its plate, measured on an impression of this outsole.

    Works on renders, reconstructions and predictions alike; for images smaller than the
    geometry the masks are block-mean reduced to fractional weights.
    """
    factor = geometry.shape[0] // image.shape[0]
    if image.shape != (geometry.shape[0] // factor, geometry.shape[1] // factor):
        raise ShapeError("logo measurement image", geometry.shape, image.shape)
    glyph = downsample(Image(geometry.logo_mask.astype(np.float64)), factor).pixels
    backing = downsample(Image((geometry.plate_mask & ~geometry.logo_mask).astype(np.float64)),
                         factor).pixels
    if glyph.sum() == 0 or backing.sum() == 0:
        return 0.0
    pixels = image.pixels
    return float((pixels * glyph).sum() / glyph.sum() - (pixels * backing).sum() / backing.sum())


def merged_pairs(state: WearState, share: float = 0.9) -> List[Tuple[int, int]]:
    """Merge pairs whose sipe has worn down to the surrounding tread surface."""
    g = state.geometry
    merged = []
    for index, pair in enumerate(g.merge_pairs, start=1):
        sipe = g.sipe_ids == index
        gap = state.surface[sipe] - state.depth[sipe]
        if sipe.any() and np.mean(gap <= CONTACT_TOL) >= share:
            merged.append(pair)
    return merged
