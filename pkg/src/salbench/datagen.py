"""Randomized scene sampling and dataset persistence.

Scenes follow the benchmark constraints: per-pattern object counts drawn
uniformly from {0, 1, 2}, no all-empty scenes, rejection-sampled placement
with no footprint overlap.  Datasets are written as 8-bit grayscale PNGs, one
text-format ground-truth map per (sample, function), and a schema-versioned
JSON manifest that makes every run reproducible from its master seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from . import attribution
from .scene import (
    DatasetKind,
    Scene,
    SceneError,
    SceneObject,
    ShapeKind,
    object_mask,
    overlaps,
    render_scene,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
GT_MAP_MAGIC = "SMAP1"

SHAPE_PATTERNS = (ShapeKind.CIRCLE, ShapeKind.SQUARE, ShapeKind.CROSS)
DEFAULT_SIZE_RANGES = {
    ShapeKind.CIRCLE: (8, 16),
    ShapeKind.SQUARE: (8, 16),
    ShapeKind.CROSS: (10, 18),
}
SHAPE_INTENSITY = (255,)
COLOR_INTENSITIES = (85, 170, 255)

# Whole-scene resamples allowed before declaring the config infeasible.
MAX_SCENE_RESAMPLES = 200


class DatasetError(RuntimeError):
    """Raised for unreadable, corrupt or inconsistent dataset artifacts."""


@dataclass(frozen=True)
class GenConfig:
    dataset_kind: DatasetKind
    n_train: int = 0
    n_val: int = 200
    width: int = 128
    height: int = 128
    size_ranges: dict = field(default_factory=lambda: dict(DEFAULT_SIZE_RANGES))
    intensity_catalog: tuple[int, ...] = ()
    max_place_attempts: int = 50
    master_seed: int = 0

    def __post_init__(self):
        if isinstance(self.dataset_kind, str):
            object.__setattr__(self, "dataset_kind", DatasetKind(self.dataset_kind))
        if not self.intensity_catalog:
            default = SHAPE_INTENSITY if self.dataset_kind is DatasetKind.SHAPE else COLOR_INTENSITIES
            object.__setattr__(self, "intensity_catalog", tuple(default))
        catalog = tuple(int(v) for v in self.intensity_catalog)
        if len(set(catalog)) != len(catalog):
            raise ValueError("intensity catalog values must be distinct")
        if any(not 1 <= v <= 255 for v in catalog):
            raise ValueError("intensity catalog values must be in [1, 255]")
        expected = 1 if self.dataset_kind is DatasetKind.SHAPE else 3
        if len(catalog) != expected:
            raise ValueError(
                f"{self.dataset_kind.value} datasets need exactly {expected} "
                f"intensities, got {len(catalog)}"
            )
        object.__setattr__(self, "intensity_catalog", catalog)
        for kind, (lo, hi) in self.size_ranges.items():
            if lo > hi or lo < 0:
                raise ValueError(f"bad size range for {kind}: [{lo}, {hi}]")
            if 2 * hi + 1 > min(self.width, self.height):
                raise ValueError(f"size range for {kind} cannot fit inside the image")

    @property
    def pattern_catalog(self) -> tuple[str, ...]:
        if self.dataset_kind is DatasetKind.SHAPE:
            return tuple(kind.value for kind in SHAPE_PATTERNS)
        return tuple(f"intensity_{v}" for v in self.intensity_catalog)


def sample_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit per-sample seed: counter-based, so samples are order-insensitive."""
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1, dtype=np.uint64)[0])


def sample_scene(kind: DatasetKind, config: GenConfig, rng_seed: int) -> Scene:
    """Draw one scene: counts uniform on {0,1,2} per pattern, rejection-placed.

    The all-zero count triple is rejected and redrawn; placement failures
    (more than ``max_place_attempts`` rejections for one object) restart the
    whole scene.  Deterministic given the seed.
    """
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_SCENE_RESAMPLES):
        counts = rng.integers(0, 3, size=3)
        if counts.sum() == 0:
            continue
        scene = _place_objects(kind, config, counts, rng, rng_seed)
        if scene is not None:
            return scene
    raise SceneError(
        f"could not place a scene after {MAX_SCENE_RESAMPLES} resamples; "
        "size ranges are likely too large for the image"
    )


def _place_objects(kind, config, counts, rng, rng_seed):
    objects = []
    placed_ok = True
    obj_id = 0
    for pattern_index in range(3):
        if not placed_ok:
            break
        if kind is DatasetKind.SHAPE:
            shape = SHAPE_PATTERNS[pattern_index]
            intensity = config.intensity_catalog[0]
        else:
            shape = ShapeKind.CIRCLE
            intensity = config.intensity_catalog[pattern_index]
        lo, hi = config.size_ranges[shape]
        for _ in range(int(counts[pattern_index])):
            candidate = _try_place(
                shape, intensity, pattern_index, obj_id, lo, hi, config, objects, rng
            )
            if candidate is None:
                placed_ok = False
                break
            objects.append(candidate)
            obj_id += 1
    if not placed_ok:
        return None
    return Scene(
        width=config.width,
        height=config.height,
        objects=tuple(objects),
        dataset_kind=kind,
        pattern_catalog=config.pattern_catalog,
        rng_seed=rng_seed,
    )


def _try_place(shape, intensity, pattern_index, obj_id, lo, hi, config, others, rng):
    for _ in range(config.max_place_attempts):
        size = int(rng.integers(lo, hi + 1))
        row = int(rng.integers(size, config.height - size))
        col = int(rng.integers(size, config.width - size))
        candidate = SceneObject(
            id=obj_id,
            shape=shape,
            center=(row, col),
            size=size,
            intensity=intensity,
            pattern_index=pattern_index,
        )
        if all(not overlaps(candidate, other, config.width, config.height) for other in others):
            return candidate
    return None


def write_gt_map(path: Path, saliency: np.ndarray) -> None:
    """Write a float grid as text: magic line, dims line, one row per line."""
    height, width = saliency.shape
    lines = [GT_MAP_MAGIC, f"{width} {height}"]
    for row in saliency:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_gt_map(path: Path) -> np.ndarray:
    text = Path(path).read_text().splitlines()
    if not text or text[0] != GT_MAP_MAGIC:
        raise DatasetError(f"{path}: not a {GT_MAP_MAGIC} map file")
    width, height = (int(t) for t in text[1].split())
    values = np.array([[float(v) for v in line.split()] for line in text[2 : 2 + height]])
    if values.shape != (height, width):
        raise DatasetError(f"{path}: grid shape {values.shape} does not match header")
    return values


def _scene_to_json(scene: Scene) -> dict:
    return {
        "width": scene.width,
        "height": scene.height,
        "dataset_kind": scene.dataset_kind.value,
        "pattern_catalog": list(scene.pattern_catalog),
        "rng_seed": scene.rng_seed,
        "objects": [
            {
                "id": o.id,
                "shape": o.shape.value,
                "center": list(o.center),
                "size": o.size,
                "intensity": o.intensity,
                "pattern_index": o.pattern_index,
            }
            for o in scene.objects
        ],
    }


def _scene_from_json(data: dict) -> Scene:
    return Scene(
        width=data["width"],
        height=data["height"],
        dataset_kind=DatasetKind(data["dataset_kind"]),
        pattern_catalog=tuple(data["pattern_catalog"]),
        rng_seed=data["rng_seed"],
        objects=tuple(
            SceneObject(
                id=o["id"],
                shape=ShapeKind(o["shape"]),
                center=tuple(o["center"]),
                size=o["size"],
                intensity=o["intensity"],
                pattern_index=o["pattern_index"],
            )
            for o in data["objects"]
        ),
    )


def _config_to_json(config: GenConfig) -> dict:
    data = dataclasses.asdict(config)
    data["dataset_kind"] = config.dataset_kind.value
    data["size_ranges"] = {k.value: list(v) for k, v in config.size_ranges.items()}
    data["intensity_catalog"] = list(config.intensity_catalog)
    return data


FUNCTION_KINDS = ("ssin", "suum", "class")


def generate_dataset(config: GenConfig, out_dir: str | Path,
                     write_gt_maps: bool = True) -> Path:
    """Generate a dataset under ``out_dir``; returns the manifest path.

    Writes images/, gt/ and manifest.json.  ``write_gt_maps=False`` skips the
    per-function ground-truth grids (records carry an empty gt_maps block),
    which keeps pure training datasets small.  On failure the manifest is
    removed so a partial directory is never mistaken for a dataset.
    """
    out = Path(out_dir)
    manifest_path = out / "manifest.json"
    try:
        return _generate(config, out, manifest_path, write_gt_maps)
    except Exception:
        manifest_path.unlink(missing_ok=True)
        raise


def _generate(config, out, manifest_path, write_gt_maps):
    (out / "images").mkdir(parents=True, exist_ok=True)
    if write_gt_maps:
        (out / "gt").mkdir(parents=True, exist_ok=True)
    functions = {kind: attribution.attribution_function(kind) for kind in FUNCTION_KINDS}
    records = []
    splits = [("train", config.n_train), ("val", config.n_val)]
    counter = 0
    for split, count in splits:
        for index in range(count):
            seed = sample_seed(config.master_seed, counter)
            counter += 1
            scene = sample_scene(config.dataset_kind, config, seed)
            image = render_scene(scene)
            sample_id = f"{split}_{index:05d}"
            image_rel = f"images/{sample_id}.png"
            PILImage.fromarray(image, mode="L").save(out / image_rel)
            digest = hashlib.sha256((out / image_rel).read_bytes()).hexdigest()
            counts = attribution.pattern_counts(scene)
            labels = {
                "ssin": attribution.eval_ssin(counts),
                "suum": attribution.eval_suum(counts),
                "class": attribution.eval_class(counts),
            }
            gt_paths = {}
            if write_gt_maps:
                for kind, function in functions.items():
                    gt_rel = f"gt/{sample_id}_{kind}.smg"
                    write_gt_map(out / gt_rel, attribution.ground_truth_map(scene, function))
                    gt_paths[kind] = gt_rel
            records.append(
                {
                    "id": sample_id,
                    "split": split,
                    "index": index,
                    "image": image_rel,
                    "sha256": digest,
                    "scene": _scene_to_json(scene),
                    "labels": labels,
                    "gt_maps": gt_paths,
                }
            )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": _config_to_json(config),
        "samples": records,
    }
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    logger.info("wrote %d samples to %s", len(records), out)
    return manifest_path


@dataclass(frozen=True)
class SampleRecord:
    id: str
    split: str
    image: np.ndarray
    scene: Scene
    labels: dict
    gt_maps: dict


class Dataset:
    """Lazy, re-iterable view over a generated dataset directory."""

    def __init__(self, root: Path, manifest: dict):
        self.root = Path(root)
        self.manifest = manifest
        self.samples = manifest["samples"]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        for i in range(len(self.samples)):
            yield self.load(i)

    def split(self, name: str):
        for i, rec in enumerate(self.samples):
            if rec["split"] == name:
                yield self.load(i)

    def load(self, i: int) -> SampleRecord:
        rec = self.samples[i]
        image_path = self.root / rec["image"]
        if not image_path.exists():
            raise DatasetError(f"missing image file: {image_path}")
        data = image_path.read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        if digest != rec["sha256"]:
            raise DatasetError(f"checksum mismatch for {image_path}")
        image = np.asarray(PILImage.open(image_path).convert("L"), dtype=np.uint8)
        gt_maps = {kind: read_gt_map(self.root / rel) for kind, rel in rec["gt_maps"].items()}
        return SampleRecord(
            id=rec["id"],
            split=rec["split"],
            image=image,
            scene=_scene_from_json(rec["scene"]),
            labels=dict(rec["labels"]),
            gt_maps=gt_maps,
        )


def load_dataset(path: str | Path) -> Dataset:
    """Open a dataset directory (or its manifest.json) for iteration."""
    path = Path(path)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    if not manifest_path.exists():
        raise DatasetError(f"no manifest found at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(
            f"unsupported manifest schema version {manifest.get('schema_version')}"
        )
    return Dataset(manifest_path.parent, manifest)
