"""Saliency-map comparison: normalization, exact EMD and KL divergence.

Maps are plain float64 arrays of shape (height, width).  EMD runs on sparse
signatures (per-bin point masses) through the exact transportation kernel in
``salbench._transport``; ground distances are Euclidean, divided by the image
diagonal so the result lives in [0, 1].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._transport import solve_transportation

logger = logging.getLogger(__name__)

MASS_TOL = 1e-9


class MetricError(ValueError):
    """Raised for maps or signatures that violate metric preconditions."""


@dataclass(frozen=True)
class Signature:
    """Sparse mass distribution: one (row, col) location per positive-mass bin.

    ``width``/``height`` are the dims of the originating image and set the
    diagonal used to normalize ground distances.
    """

    locations: np.ndarray  # (k, 2) float64, (row, col)
    masses: np.ndarray  # (k,) float64, all > 0
    width: int
    height: int

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def __post_init__(self):
        if len(self.locations) != len(self.masses):
            raise MetricError("locations and masses length mismatch")
        if len(self.masses) == 0:
            raise MetricError("empty signature")
        if np.any(self.masses <= 0):
            raise MetricError("signature masses must be positive")
        if len(np.unique(self.locations, axis=0)) != len(self.locations):
            raise MetricError("signature locations must be distinct")


def normalize(saliency: np.ndarray) -> np.ndarray:
    """Scale a nonnegative map to sum 1; an all-zero map becomes uniform.

    The uniform fallback is the documented degenerate case for explanations
    whose perturbations never move the predictor output.
    """
    arr = np.asarray(saliency, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise MetricError("saliency map contains NaN or infinite values")
    if np.any(arr < 0):
        raise MetricError("saliency map contains negative values")
    total = arr.sum()
    if total == 0.0:
        logger.warning("all-zero saliency map: falling back to the uniform distribution")
        return np.full(arr.shape, 1.0 / arr.size, dtype=np.float64)
    return arr / total


def to_signature(saliency: np.ndarray, bin_grid: int = 32) -> Signature:
    """Aggregate a normalized map into at most bin_grid x bin_grid point masses.

    Bins tile the image evenly (the last row/column of bins absorbs any
    remainder); each bin's mass sits at the pixel center of its extent, and
    zero-mass bins are dropped.  ``bin_grid`` equal to the image side gives
    pixel-exact signatures.
    """
    arr = np.asarray(saliency, dtype=np.float64)
    if bin_grid < 1:
        raise MetricError(f"bin_grid must be >= 1, got {bin_grid}")
    height, width = arr.shape
    rows_per = max(1, height // bin_grid)
    cols_per = max(1, width // bin_grid)
    n_rows = (height + rows_per - 1) // rows_per
    n_cols = (width + cols_per - 1) // cols_per
    if height % rows_per == 0 and width % cols_per == 0:
        binned = arr.reshape(n_rows, rows_per, n_cols, cols_per).sum(axis=(1, 3))
        bi, bj = np.nonzero(binned)
        masses = binned[bi, bj]
        locations = np.column_stack([
            bi * rows_per + (rows_per - 1) / 2.0,
            bj * cols_per + (cols_per - 1) / 2.0,
        ])
    else:
        loc_list = []
        mass_list = []
        for bi in range(n_rows):
            r0 = bi * rows_per
            r1 = min(r0 + rows_per, height)
            for bj in range(n_cols):
                c0 = bj * cols_per
                c1 = min(c0 + cols_per, width)
                mass = arr[r0:r1, c0:c1].sum()
                if mass > 0.0:
                    loc_list.append(((r0 + r1 - 1) / 2.0, (c0 + c1 - 1) / 2.0))
                    mass_list.append(mass)
        locations = np.array(loc_list, dtype=np.float64)
        masses = np.array(mass_list, dtype=np.float64)
    return Signature(
        locations=locations.astype(np.float64),
        masses=np.asarray(masses, dtype=np.float64),
        width=width,
        height=height,
    )


def _ground_distances(p: Signature, q: Signature) -> np.ndarray:
    diag = np.sqrt((p.width - 1) ** 2 + (p.height - 1) ** 2)
    delta = p.locations[:, None, :] - q.locations[None, :, :]
    return np.sqrt((delta ** 2).sum(axis=2)) / diag


def emd(p: Signature, q: Signature, allow_unequal: bool = False) -> float:
    """Exact earth mover's distance between two signatures.

    With equal total masses this is the optimal transportation cost under
    diagonal-normalized Euclidean ground distance, hence a value in [0, 1].
    Unequal masses raise unless ``allow_unequal`` is set, in which case the
    unmatched mass is absorbed by a zero-cost dummy node and charged at the
    maximum ground distance (the partial-match penalty term).
    """
    if (p.width, p.height) != (q.width, q.height):
        raise MetricError("signatures come from different image geometries")
    mass_p = p.total_mass
    mass_q = q.total_mass
    unmatched = abs(mass_p - mass_q)
    if unmatched > MASS_TOL and not allow_unequal:
        raise MetricError(f"total mass mismatch: {mass_p} vs {mass_q}")
    if len(p.masses) == len(q.masses) and np.array_equal(p.locations, q.locations) \
            and np.array_equal(p.masses, q.masses):
        return 0.0
    costs = _ground_distances(p, q)
    supplies = p.masses
    demands = q.masses
    penalty = 0.0
    if unmatched > MASS_TOL:
        # Dummy node with zero cost takes the surplus, so the transported
        # flow equals min(mass_p, mass_q); the surplus is charged separately.
        penalty = unmatched * float(costs.max())
        if mass_p > mass_q:
            demands = np.append(demands, unmatched)
            costs = np.hstack([costs, np.zeros((costs.shape[0], 1))])
        else:
            supplies = np.append(supplies, unmatched)
            costs = np.vstack([costs, np.zeros((1, costs.shape[1]))])
    cost, _ = solve_transportation(supplies, demands, costs)
    return cost + penalty


def kl_div(p: np.ndarray, q: np.ndarray, eps: float = 1e-10) -> float:
    """Epsilon-regularized KL divergence sum(p * log(p / (q + eps) + eps)).

    Asymmetric: ``p`` is the ground-truth distribution, ``q`` the explanation.
    Both must be normalized maps of identical shape.
    """
    if eps <= 0:
        raise MetricError(f"eps must be positive, got {eps}")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise MetricError(f"shape mismatch: {p.shape} vs {q.shape}")
    terms = np.zeros_like(p)
    support = p > 0
    terms[support] = p[support] * np.log(p[support] / (q[support] + eps) + eps)
    return float(terms.sum())
