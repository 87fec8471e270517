"""Symbolic scenes built from geometric pattern objects, and their rasterization.

A scene is a list of non-overlapping objects (circle / square / cross) on a
black background.  Everything here is immutable and purely functional, so the
rest of the pipeline can fan out over scenes without locking.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ShapeKind(enum.Enum):
    CIRCLE = "circle"
    SQUARE = "square"
    CROSS = "cross"


class DatasetKind(enum.Enum):
    SHAPE = "shape"
    COLOR = "color"


class SceneError(ValueError):
    """Raised for scenes or objects that violate construction constraints."""


@dataclass(frozen=True)
class SceneObject:
    """One pattern instance.

    ``size`` is the radius for circles, the half-side for squares and the
    half-arm-length for crosses.  ``center`` is (row, col) in pixels.
    """

    id: int
    shape: ShapeKind
    center: tuple[int, int]
    size: int
    intensity: int
    pattern_index: int

    def __post_init__(self):
        if not (1 <= self.intensity <= 255):
            raise SceneError(f"object {self.id}: intensity {self.intensity} not in [1, 255]")
        if self.size < 0:
            raise SceneError(f"object {self.id}: negative size")


@dataclass(frozen=True)
class Scene:
    """Full symbolic description of one synthetic image."""

    width: int
    height: int
    objects: tuple[SceneObject, ...]
    dataset_kind: DatasetKind
    pattern_catalog: tuple[str, ...]
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "pattern_catalog", tuple(self.pattern_catalog))

    @property
    def n_objects(self) -> int:
        return len(self.objects)


def _cross_half_thickness(size: int) -> int:
    # Bar thickness 2*(size // 6) + 1, i.e. roughly a third of the arm span,
    # kept odd so the bars stay centered on the object center.
    return size // 6


def object_mask(obj: SceneObject, width: int, height: int) -> np.ndarray:
    """Boolean (height, width) mask of the pixels covered by ``obj``.

    Circle: Euclidean distance <= size (so size 0 still covers one pixel).
    Square: axis-aligned, half-side ``size``.
    Cross: union of a horizontal and a vertical bar of length 2*size + 1.
    Raises SceneError if the footprint does not fit inside the image.
    """
    r, c = obj.center
    if r - obj.size < 0 or c - obj.size < 0 or r + obj.size >= height or c + obj.size >= width:
        raise SceneError(
            f"object {obj.id} ({obj.shape.value}, center={obj.center}, size={obj.size}) "
            f"out of bounds for {width}x{height} image"
        )
    rows = np.arange(height).reshape(-1, 1)
    cols = np.arange(width).reshape(1, -1)
    if obj.shape is ShapeKind.CIRCLE:
        return (rows - r) ** 2 + (cols - c) ** 2 <= obj.size ** 2
    if obj.shape is ShapeKind.SQUARE:
        return (np.abs(rows - r) <= obj.size) & (np.abs(cols - c) <= obj.size)
    ht = _cross_half_thickness(obj.size)
    horizontal = (np.abs(rows - r) <= ht) & (np.abs(cols - c) <= obj.size)
    vertical = (np.abs(rows - r) <= obj.size) & (np.abs(cols - c) <= ht)
    return horizontal | vertical


def _bounding_boxes_disjoint(a: SceneObject, b: SceneObject) -> bool:
    return (
        abs(a.center[0] - b.center[0]) > a.size + b.size
        or abs(a.center[1] - b.center[1]) > a.size + b.size
    )


def overlaps(a: SceneObject, b: SceneObject, width: int, height: int) -> bool:
    """Exact pixel-level footprint intersection test."""
    if _bounding_boxes_disjoint(a, b):
        return False
    return bool(np.any(object_mask(a, width, height) & object_mask(b, width, height)))


def render_scene(scene: Scene) -> np.ndarray:
    """Rasterize a scene to a uint8 (height, width) grayscale image.

    Background is 0; each object's mask is painted with its intensity.
    A later object never overwrites an earlier one (irrelevant for valid,
    pixel-disjoint scenes, but keeps the paint rule total).
    """
    image = np.zeros((scene.height, scene.width), dtype=np.uint8)
    for obj in scene.objects:
        mask = object_mask(obj, scene.width, scene.height)
        image[mask & (image == 0)] = obj.intensity
    return image


def validate_scene(scene: Scene) -> None:
    """Check scene invariants; raise SceneError on the first violation.

    Verifies bounds, footprint non-emptiness, pairwise pixel-disjointness,
    per-pattern and total object budgets, and per-kind intensity rules.
    """
    if not 1 <= scene.n_objects <= 6:
        raise SceneError(f"scene has {scene.n_objects} objects, expected 1..6")
    masks = [object_mask(o, scene.width, scene.height) for o in scene.objects]
    for obj, mask in zip(scene.objects, masks):
        if not mask.any():
            raise SceneError(f"object {obj.id} has an empty footprint")
        if obj.pattern_index >= len(scene.pattern_catalog):
            raise SceneError(f"object {obj.id}: pattern_index out of range")
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            if not _bounding_boxes_disjoint(scene.objects[i], scene.objects[j]):
                if np.any(masks[i] & masks[j]):
                    raise SceneError(f"objects {i} and {j} overlap")
    counts = {}
    for obj in scene.objects:
        counts[obj.pattern_index] = counts.get(obj.pattern_index, 0) + 1
    if any(v > 2 for v in counts.values()):
        raise SceneError("more than two objects of one pattern")
    if scene.dataset_kind is DatasetKind.SHAPE:
        intensities = {o.intensity for o in scene.objects}
        if len(intensities) > 1:
            raise SceneError("shape scenes must use a single intensity")
    else:
        if any(o.shape is not ShapeKind.CIRCLE for o in scene.objects):
            raise SceneError("color scenes may only contain circles")
