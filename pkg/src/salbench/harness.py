"""Experiment drivers: sample-size fidelity curves, oracle-predictor scoring,
and bridge-predictor scoring, with CSV/JSON reporting.

Experiment 1 sweeps sample sizes with the oracle predictor and establishes
the minimal-size baselines.  Experiment 2 scores full-enumeration
explanations of the oracle.  Experiment 3 runs the same pipeline against an
external model over the bridge protocol, with a resumable row checkpoint.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .attribution import AttributionKind, attribution_function, ground_truth_map
from .datagen import GenConfig, load_dataset, sample_scene, sample_seed
from .explainer import explain, min_sample_size
from .predictor import BridgeError, BridgePredictor, OraclePredictor
from .scene import DatasetKind, render_scene

logger = logging.getLogger(__name__)

CSV_HEADER = "sample_id,function,dataset,sample_size,emd,kl"


class HarnessError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    experiment: int
    dataset_kind: DatasetKind
    function_kind: AttributionKind
    out_dir: Path
    n_samples: int = 200
    sample_sizes: tuple = ("full",)
    bins: int = 32
    predictor_source: str = "oracle"  # "oracle" or "bridge"
    bridge_command: str | None = None
    master_seed: int = 0
    data_dir: Path | None = None
    workers: int = 1
    kl_eps: float = 1e-10
    negatives: str = "abs"
    baseline_path: Path | None = None
    resume: bool = False

    def __post_init__(self):
        if isinstance(self.dataset_kind, str):
            self.dataset_kind = DatasetKind(self.dataset_kind)
        if isinstance(self.function_kind, str):
            self.function_kind = AttributionKind(self.function_kind)
        self.out_dir = Path(self.out_dir)
        self.sample_sizes = tuple(self.sample_sizes)
        if self.experiment == 3 and not self.bridge_command:
            raise HarnessError("experiment 3 requires a bridge command")


@dataclass(frozen=True)
class ReportRow:
    sample_id: str
    function: str
    dataset: str
    sample_size: str  # requested size label: "min", "full" or a number
    emd: float
    kl: float


@dataclass
class MetricReport:
    rows: list
    aggregates: dict
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for row in self.rows:
            lines.append(
                f"{row.sample_id},{row.function},{row.dataset},"
                f"{row.sample_size},{row.emd!r},{row.kl!r}"
            )
        return "\n".join(lines) + "\n"


def resolve_sample_size(label, n_objects: int) -> int:
    """Map a requested size label onto the legal range for one scene."""
    full = 2 ** n_objects
    lo = min_sample_size(n_objects)
    if label == "min":
        return lo
    if label == "full":
        return full
    return max(lo, min(int(label), full))


@dataclass(frozen=True)
class _Sample:
    sample_id: str
    index: int
    scene: object
    image: np.ndarray
    gt_map: np.ndarray
    label: float


def _load_samples(config: ExperimentConfig) -> list:
    function = attribution_function(config.function_kind)
    samples = []
    if config.data_dir is not None:
        ds = load_dataset(config.data_dir)
        for rec in ds.split("val"):
            if len(samples) >= config.n_samples:
                break
            if config.function_kind.value not in rec.gt_maps:
                raise HarnessError(
                    f"dataset at {config.data_dir} has no ground-truth maps "
                    f"(generated with --no-gt-maps?)"
                )
            samples.append(
                _Sample(
                    sample_id=rec.id,
                    index=len(samples),
                    scene=rec.scene,
                    image=rec.image,
                    gt_map=rec.gt_maps[config.function_kind.value],
                    label=float(rec.labels[config.function_kind.value]),
                )
            )
        if len(samples) < config.n_samples:
            raise HarnessError(
                f"dataset has only {len(samples)} validation samples, "
                f"need {config.n_samples}"
            )
    else:
        gen = GenConfig(dataset_kind=config.dataset_kind, master_seed=config.master_seed)
        for i in range(config.n_samples):
            scene = sample_scene(config.dataset_kind, gen, sample_seed(config.master_seed, i))
            samples.append(
                _Sample(
                    sample_id=f"val_{i:05d}",
                    index=i,
                    scene=scene,
                    image=render_scene(scene),
                    gt_map=ground_truth_map(scene, function),
                    label=float(function.evaluate(
                        [sum(1 for o in scene.objects if o.pattern_index == p)
                         for p in range(len(scene.pattern_catalog))])),
                )
            )
    return samples


def _score_sample(config, sample, predictor, size_labels):
    """All report rows for one sample, one per requested sample size."""
    gt_norm = metrics.normalize(sample.gt_map)
    gt_sig = metrics.to_signature(gt_norm, config.bins)
    plan_seed = sample_seed(config.master_seed, 1_000_000 + sample.index)
    rows = []
    for label in size_labels:
        size = resolve_sample_size(label, len(sample.scene.objects))
        saliency = explain(
            sample.image, sample.scene, predictor,
            sample_size=size, plan_seed=plan_seed, negatives=config.negatives,
        )
        expl_norm = metrics.normalize(saliency)
        expl_sig = metrics.to_signature(expl_norm, config.bins)
        rows.append(
            ReportRow(
                sample_id=sample.sample_id,
                function=config.function_kind.value,
                dataset=config.dataset_kind.value,
                sample_size=str(label),
                emd=metrics.emd(gt_sig, expl_sig),
                kl=metrics.kl_div(gt_norm, expl_norm, config.kl_eps),
            )
        )
    return rows


def _aggregate(rows) -> dict:
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.function, row.dataset, row.sample_size), []).append(row)
    aggregates = {}
    for (function, dataset, size), grp in sorted(groups.items()):
        emds = np.array([r.emd for r in grp])
        kls = np.array([r.kl for r in grp])
        aggregates[f"{function}/{dataset}/{size}"] = {
            "n": len(grp),
            "emd": {"mean": float(emds.mean()), "median": float(np.median(emds)),
                    "std": float(emds.std())},
            "kl": {"mean": float(kls.mean()), "median": float(np.median(kls)),
                   "std": float(kls.std())},
        }
    return aggregates


def _size_order(config):
    return {str(label): i for i, label in enumerate(config.sample_sizes)}


def _run_pipeline(config, size_labels, make_predictor, checkpoint=None):
    samples = _load_samples(config)
    done_ids = set()
    rows = []
    if checkpoint is not None and config.resume and checkpoint.exists():
        rows = _read_rows(checkpoint)
        done_ids = {r.sample_id for r in rows}
        logger.info("resuming: %d samples already scored", len(done_ids))
    pending = [s for s in samples if s.sample_id not in done_ids]

    def work(sample):
        try:
            return _score_sample(config, sample, make_predictor(sample), size_labels)
        except BridgeError as exc:
            raise HarnessError(
                f"bridge failure at sample {sample.sample_id}: {exc}; "
                f"partial rows checkpointed, rerun with resume=True"
            ) from exc

    # On any failure the checkpoint file stays behind for resumption.
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for chunk in pool.map(work, pending):
                rows.extend(chunk)
                _append_checkpoint(checkpoint, chunk)
    else:
        for sample in pending:
            chunk = work(sample)
            rows.extend(chunk)
            _append_checkpoint(checkpoint, chunk)
    order = _size_order(config)
    rows.sort(key=lambda r: (r.sample_id, order.get(r.sample_size, 0)))
    return samples, rows


def _append_checkpoint(checkpoint, chunk):
    if checkpoint is None:
        return
    new_file = not checkpoint.exists()
    with open(checkpoint, "a") as fh:
        if new_file:
            fh.write(CSV_HEADER + "\n")
        for row in chunk:
            fh.write(
                f"{row.sample_id},{row.function},{row.dataset},"
                f"{row.sample_size},{row.emd!r},{row.kl!r}\n"
            )
        fh.flush()


def _read_rows(path) -> list:
    rows = []
    lines = Path(path).read_text().splitlines()
    for line in lines[1:]:
        sample_id, function, dataset, size, emd, kl = line.split(",")
        rows.append(ReportRow(sample_id, function, dataset, size, float(emd), float(kl)))
    return rows


def _write_report(config, rows, extra_meta=None) -> MetricReport:
    aggregates = _aggregate(rows)
    meta = {
        "experiment": config.experiment,
        "function": config.function_kind.value,
        "dataset": config.dataset_kind.value,
        "n_samples": config.n_samples,
        "sample_sizes": [str(s) for s in config.sample_sizes],
        "bins": config.bins,
        "master_seed": config.master_seed,
        "kl_eps": config.kl_eps,
        "negatives": config.negatives,
    }
    if extra_meta:
        meta.update(extra_meta)
    if config.baseline_path is not None:
        baseline = json.loads(Path(config.baseline_path).read_text())
        meta["baseline"] = baseline.get("baselines", baseline.get("aggregates"))
    report = MetricReport(rows=rows, aggregates=aggregates, meta=meta)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    (config.out_dir / "report.csv").write_text(report.to_csv())
    summary = {"meta": meta, "aggregates": aggregates}
    if config.experiment == 1:
        labels = [str(s) for s in config.sample_sizes]
        baseline_label = "min" if "min" in labels else labels[0]
        summary["baselines"] = {
            key: val for key, val in aggregates.items()
            if key.endswith(f"/{baseline_label}")
        }
        _write_curve(config, aggregates)
    (config.out_dir / "summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n"
    )
    return report


def _write_curve(config, aggregates):
    labels = [str(s) for s in config.sample_sizes]
    key = f"{config.function_kind.value}/{config.dataset_kind.value}"
    lines = ["metric," + ",".join(labels)]
    for metric in ("emd", "kl"):
        for stat in ("mean", "median", "std"):
            cells = [repr(aggregates[f"{key}/{label}"][metric][stat]) for label in labels]
            lines.append(f"{metric}_{stat}," + ",".join(cells))
    (config.out_dir / "curve.csv").write_text("\n".join(lines) + "\n")


def run_experiment1(config: ExperimentConfig) -> MetricReport:
    """Fidelity-vs-sample-size curves with the oracle predictor."""
    if config.predictor_source != "oracle":
        raise HarnessError("experiment 1 runs with the oracle predictor")
    if len(config.sample_sizes) < 2:
        raise HarnessError("experiment 1 needs at least two sample sizes for a curve")
    function = attribution_function(config.function_kind)
    _, rows = _run_pipeline(
        config, config.sample_sizes,
        make_predictor=lambda sample: OraclePredictor(sample.scene, function),
    )
    return _write_report(config, rows)


def run_experiment2(config: ExperimentConfig) -> MetricReport:
    """Full-enumeration explanations of the oracle predictor."""
    if config.predictor_source != "oracle":
        raise HarnessError("experiment 2 runs with the oracle predictor")
    config.sample_sizes = ("full",)
    function = attribution_function(config.function_kind)
    _, rows = _run_pipeline(
        config, ("full",),
        make_predictor=lambda sample: OraclePredictor(sample.scene, function),
    )
    return _write_report(config, rows)


def run_experiment3(config: ExperimentConfig) -> MetricReport:
    """Full-enumeration explanations of an external model over the bridge."""
    config.sample_sizes = ("full",)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = config.out_dir / "rows.checkpoint.csv"
    with BridgePredictor(config.bridge_command) as bridge:
        samples, rows = _run_pipeline(
            config, ("full",), make_predictor=lambda sample: bridge,
            checkpoint=checkpoint,
        )
        agreement = _label_agreement(samples, bridge)
        meta = {"predictor": bridge.name, "label_agreement": agreement}
    report = _write_report(config, rows, extra_meta=meta)
    checkpoint.unlink(missing_ok=True)
    return report


def _label_agreement(samples, predictor) -> dict:
    """Predictor-vs-label agreement on the unperturbed validation images."""
    values = predictor.predict_batch([s.image for s in samples])
    labels = np.array([s.label for s in samples])
    values = np.array(values)
    mae = float(np.mean(np.abs(values - labels)))
    if predictor.is_classifier:
        threshold = 0.0 if getattr(predictor, "raw_logit", False) else 0.5
        accuracy = float(np.mean((values >= threshold) == (labels >= 0.5)))
    else:
        accuracy = float(np.mean(np.abs(values - labels) <= 0.05))
    return {"mae": mae, "accuracy": accuracy}
