"""Synthetic saliency-ground-truth benchmark toolkit.

Generates image datasets whose labels come from known pattern-count
functions (so per-pixel explanation ground truth is exact), explains
black-box predictors over them with deterministic exhaustive-occlusion
surrogates, and scores explanations against the ground truth with exact
EMD and KL divergence.
"""

from ._transport import BACKEND as transport_backend
from .attribution import (
    AttributionFunction,
    AttributionKind,
    attribution_function,
    eval_class,
    eval_ssin,
    eval_suum,
    ground_truth_map,
    pattern_count,
)
from .datagen import Dataset, GenConfig, generate_dataset, load_dataset, sample_scene
from .explainer import (
    PerturbationPlan,
    SurrogateFit,
    apply_perturbation,
    enumerate_perturbations,
    explain,
    fit_linear_surrogate,
)
from .harness import (
    ExperimentConfig,
    MetricReport,
    run_experiment1,
    run_experiment2,
    run_experiment3,
)
from .metrics import Signature, emd, kl_div, normalize, to_signature
from .predictor import BridgePredictor, OraclePredictor, Predictor
from .scene import (
    DatasetKind,
    Scene,
    SceneObject,
    ShapeKind,
    object_mask,
    overlaps,
    render_scene,
)

__version__ = "0.1.0"
