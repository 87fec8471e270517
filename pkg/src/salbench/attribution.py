"""Label-generating functions over pattern counts, and ground-truth saliency maps.

Three functions are supported: a sinusoidal regression target, a linear
regression target and a thresholded two-pattern classifier.  Each carries the
per-pattern weights that double as the exact explanation ground truth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scene import Scene, object_mask

REGRESSION_WEIGHTS = (0.55, 0.27, 0.18)
CLASS_WEIGHTS = (1.0, 0.5)

# Counts per pattern are capped at 2 by the dataset constraints; dividing by
# this keeps the normalized pattern information inside [0, 1].
MAX_COUNT_PER_PATTERN = 2


class AttributionKind(enum.Enum):
    SSIN = "ssin"
    SUUM = "suum"
    CLASS = "class"


def pattern_count(scene: Scene, pattern_index: int) -> int:
    """Number of scene objects carrying the given pattern."""
    if not 0 <= pattern_index < len(scene.pattern_catalog):
        raise IndexError(
            f"pattern_index {pattern_index} out of range for catalog of "
            f"{len(scene.pattern_catalog)}"
        )
    return sum(1 for obj in scene.objects if obj.pattern_index == pattern_index)


def pattern_counts(scene: Scene) -> tuple[int, ...]:
    """Counts for every pattern in catalog order."""
    counts = [0] * len(scene.pattern_catalog)
    for obj in scene.objects:
        counts[obj.pattern_index] += 1
    return tuple(counts)


def eval_ssin(counts: Sequence[int]) -> float:
    """Weighted sum of sin(pi/2 * count/2) over the three patterns."""
    if len(counts) != 3:
        raise ValueError(f"ssin expects 3 counts, got {len(counts)}")
    return sum(
        w * math.sin(math.pi / 2.0 * c / MAX_COUNT_PER_PATTERN)
        for w, c in zip(REGRESSION_WEIGHTS, counts)
    )


def eval_suum(counts: Sequence[int]) -> float:
    """Weighted sum of count/2 over the three patterns; linear in each count."""
    if len(counts) != 3:
        raise ValueError(f"suum expects 3 counts, got {len(counts)}")
    return sum(w * c / MAX_COUNT_PER_PATTERN for w, c in zip(REGRESSION_WEIGHTS, counts))


def eval_class(counts: Sequence[int]) -> int:
    """1 iff count[0] - 0.5 * count[1] >= 0; patterns beyond the first two are ignored."""
    if len(counts) < 2:
        raise ValueError(f"class expects at least 2 counts, got {len(counts)}")
    return 1 if CLASS_WEIGHTS[0] * counts[0] - CLASS_WEIGHTS[1] * counts[1] >= 0 else 0


@dataclass(frozen=True)
class AttributionFunction:
    """An attribution function together with its ground-truth pattern weights."""

    kind: AttributionKind
    weights: tuple[float, ...]
    g_normalizer: int = MAX_COUNT_PER_PATTERN

    def evaluate(self, counts: Sequence[int]) -> float:
        if self.kind is AttributionKind.SSIN:
            return eval_ssin(counts)
        if self.kind is AttributionKind.SUUM:
            return eval_suum(counts)
        return float(eval_class(counts))

    def pattern_weight(self, pattern_index: int) -> float:
        """Ground-truth importance of one pattern (magnitude, always >= 0)."""
        if self.kind is AttributionKind.CLASS:
            if pattern_index < len(CLASS_WEIGHTS):
                return abs(CLASS_WEIGHTS[pattern_index])
            return 0.0
        return self.weights[pattern_index]

    @property
    def is_classifier(self) -> bool:
        return self.kind is AttributionKind.CLASS


def attribution_function(kind: AttributionKind | str) -> AttributionFunction:
    """Build the canonical attribution function of the requested kind."""
    kind = AttributionKind(kind) if isinstance(kind, str) else kind
    if kind is AttributionKind.CLASS:
        return AttributionFunction(kind=kind, weights=CLASS_WEIGHTS)
    return AttributionFunction(kind=kind, weights=REGRESSION_WEIGHTS)


def ground_truth_map(scene: Scene, function: AttributionFunction) -> np.ndarray:
    """Raw (unnormalized) ground-truth saliency map for a scene.

    Every pixel of an object with pattern i gets that pattern's weight;
    the background stays 0.  Normalization to a distribution is left to
    the metrics layer.
    """
    gt = np.zeros((scene.height, scene.width), dtype=np.float64)
    for obj in scene.objects:
        weight = function.pattern_weight(obj.pattern_index)
        if weight != 0.0:
            gt[object_mask(obj, scene.width, scene.height)] = weight
    return gt
