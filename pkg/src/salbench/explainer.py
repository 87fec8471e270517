"""Deterministic occlusion explanations with a linear surrogate.

Objects are the interpretable features: a perturbation keeps or blanks whole
object footprints, the predictor is evaluated on every perturbed image, and a
linear model fit to (presence vector -> output) yields one importance
coefficient per object, painted back over its footprint.

With at most six objects the full perturbation space has at most 64 vectors,
so the sampling step of the classical method is replaced by exhaustive
enumeration (or a seeded, nested prefix of a fixed permutation when a smaller
sample size is requested).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .predictor import Predictor
from .scene import Scene, object_mask

# Subsampled plans replicate the classical surrogate: ridge (alpha = 1) with
# an exponential locality kernel on cosine distance to the unperturbed
# instance (width 0.25).  Exhaustive plans are exactly identified, so they
# use uniform weights and pure least squares.
PARTIAL_PLAN_RIDGE = 1.0
LOCALITY_KERNEL_WIDTH = 0.25
NUMERICAL_RIDGE = 1e-8
CONDITION_LIMIT = 1e12

# Coefficients below this magnitude are floor-snapped to zero when rendering,
# so a constant-output fit cannot leak solver noise into the map.
COEF_ZERO_TOL = 1e-12


class ExplainerError(RuntimeError):
    pass


def min_sample_size(n_objects: int) -> int:
    """Smallest usable plan: intercept + slopes + one residual dof, capped at 2^n."""
    return min(n_objects + 2, 2 ** n_objects)


@dataclass(frozen=True)
class PerturbationPlan:
    """Ordered set of distinct binary presence vectors (1 = object kept)."""

    n_objects: int
    vectors: np.ndarray  # (sample_size, n_objects) uint8
    sample_size: int
    exhaustive: bool

    def __post_init__(self):
        if self.vectors.shape != (self.sample_size, self.n_objects):
            raise ExplainerError("plan vectors shape mismatch")


def enumerate_perturbations(n_objects: int, sample_size: int,
                            plan_seed: int = 0) -> PerturbationPlan:
    """Build the perturbation plan for ``n_objects`` features.

    The full plan (sample_size = 2^n) is the subset lattice in binary-counting
    order (object i = bit i).  Smaller plans take the prefix of a fixed seeded
    permutation with the all-ones vector moved to the front, which makes plans
    of increasing size nested.
    """
    if not 1 <= n_objects <= 6:
        raise ExplainerError(f"n_objects must be in [1, 6], got {n_objects}")
    full = 2 ** n_objects
    lo = min_sample_size(n_objects)
    if not lo <= sample_size <= full:
        raise ExplainerError(
            f"sample_size {sample_size} outside [{lo}, {full}] for {n_objects} objects"
        )
    codes = np.arange(full, dtype=np.uint32)
    lattice = ((codes[:, None] >> np.arange(n_objects)[None, :]) & 1).astype(np.uint8)
    if sample_size == full:
        return PerturbationPlan(n_objects, lattice, sample_size, exhaustive=True)
    rng = np.random.default_rng(plan_seed)
    perm = rng.permutation(full)
    all_ones = full - 1
    perm = np.concatenate(([all_ones], perm[perm != all_ones]))
    vectors = lattice[perm[:sample_size]]
    return PerturbationPlan(n_objects, vectors, sample_size, exhaustive=False)


def object_mask_indices(scene: Scene) -> list[tuple[np.ndarray, np.ndarray]]:
    """Nonzero footprint indices per object, computed once per scene."""
    return [
        np.nonzero(object_mask(obj, scene.width, scene.height))
        for obj in scene.objects
    ]


def apply_perturbation(image: np.ndarray, scene: Scene, z: np.ndarray,
                       mask_indices=None) -> np.ndarray:
    """Blank the footprints of every object with z[i] = 0 (background stays 0)."""
    if len(z) != len(scene.objects):
        raise ExplainerError(
            f"presence vector length {len(z)} != {len(scene.objects)} objects"
        )
    if mask_indices is None:
        mask_indices = object_mask_indices(scene)
    perturbed = image.copy()
    for keep, idx in zip(z, mask_indices):
        if not keep:
            perturbed[idx] = 0
    return perturbed


@dataclass(frozen=True)
class SurrogateFit:
    coefficients: np.ndarray
    intercept: float
    residual_norm: float


def locality_weights(plan: PerturbationPlan,
                     kernel_width: float = LOCALITY_KERNEL_WIDTH) -> np.ndarray:
    """Exponential kernel on cosine distance between each vector and all-ones."""
    kept = plan.vectors.sum(axis=1).astype(np.float64)
    distance = 1.0 - np.sqrt(kept / plan.n_objects)
    return np.exp(-(distance ** 2) / (2.0 * kernel_width ** 2))


def fit_linear_surrogate(plan: PerturbationPlan, outputs,
                         ridge_alpha: float | None = None,
                         locality: bool | None = None) -> SurrogateFit:
    """Least-squares fit of predictor outputs on presence vectors.

    Exhaustive plans are solved as plain OLS with uniform weights via the
    normal equations, with a tiny ridge (1e-8) retried only if the Gram matrix
    is numerically singular.  Subsampled plans use the classical surrogate:
    ridge (alpha = 1) weighted by the locality kernel.  ``ridge_alpha`` and
    ``locality`` override either default.  The intercept is never penalized.
    """
    y = np.asarray(outputs, dtype=np.float64)
    if y.shape != (plan.sample_size,):
        raise ExplainerError(
            f"expected {plan.sample_size} outputs, got shape {y.shape}"
        )
    if not np.all(np.isfinite(y)):
        raise ExplainerError("predictor outputs contain NaN or infinite values")
    if ridge_alpha is None:
        ridge_alpha = 0.0 if plan.exhaustive else PARTIAL_PLAN_RIDGE
    if locality is None:
        locality = not plan.exhaustive
    n = plan.n_objects
    design = np.column_stack([np.ones(plan.sample_size), plan.vectors.astype(np.float64)])
    if locality:
        weights = locality_weights(plan)
        weighted = design * weights[:, None]
        gram = design.T @ weighted
        rhs = weighted.T @ y
    else:
        gram = design.T @ design
        rhs = design.T @ y
    penalty = np.zeros(n + 1)
    penalty[1:] = ridge_alpha
    solution = _solve_gram(gram + np.diag(penalty), rhs)
    residual = y - design @ solution
    return SurrogateFit(
        coefficients=solution[1:],
        intercept=float(solution[0]),
        residual_norm=float(np.linalg.norm(residual)),
    )


def _solve_gram(gram, rhs):
    if np.linalg.cond(gram) <= CONDITION_LIMIT:
        return np.linalg.solve(gram, rhs)
    regularized = gram + NUMERICAL_RIDGE * np.eye(gram.shape[0])
    if np.linalg.cond(regularized) > CONDITION_LIMIT:
        rank = np.linalg.matrix_rank(gram)
        raise ExplainerError(
            f"design matrix is rank-deficient even after ridge: rank {rank} "
            f"of {gram.shape[0]}"
        )
    return np.linalg.solve(regularized, rhs)


def explain(image: np.ndarray, scene: Scene, predictor: Predictor,
            sample_size: int | None = None, plan_seed: int = 0,
            negatives: str = "abs") -> np.ndarray:
    """Explain one prediction as a saliency map (raw, unnormalized).

    Enumerates perturbations, scores them with the predictor, fits the linear
    surrogate and paints each object's coefficient over its footprint.
    Coefficients render as magnitudes by default, matching the usual saliency
    reading of signed feature weights (``negatives="clip"`` zeroes negatives
    instead, which starves negatively weighted patterns of mass).
    """
    if negatives not in ("clip", "abs"):
        raise ExplainerError(f"unknown negatives mode: {negatives}")
    n = len(scene.objects)
    if sample_size is None:
        sample_size = 2 ** n
    plan = enumerate_perturbations(n, sample_size, plan_seed)
    mask_indices = object_mask_indices(scene)
    perturbed = [
        apply_perturbation(image, scene, z, mask_indices) for z in plan.vectors
    ]
    outputs = predictor.predict_batch(perturbed)
    fit = fit_linear_surrogate(plan, outputs)
    saliency = np.zeros((scene.height, scene.width), dtype=np.float64)
    for coef, idx in zip(fit.coefficients, mask_indices):
        if abs(coef) <= COEF_ZERO_TOL:
            continue
        value = abs(coef) if negatives == "abs" else max(coef, 0.0)
        if value > 0.0:
            saliency[idx] = value
    return saliency
