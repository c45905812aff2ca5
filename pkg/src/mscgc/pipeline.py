"""End-to-end clustering run: views -> graphs -> self-expression -> fusion -> clusters."""

from __future__ import annotations

import dataclasses
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import clustering, fusion, graph, hsi_io, metrics, preprocess, subspace

logger = logging.getLogger(__name__)

PRESETS = {
    "indian": dict(patch_size=13, knn=30, lam=100.0, clusters=4, pca_dims=4, min_explained_variance=0.96),
    "pavia": dict(patch_size=11, knn=30, lam=1000.0, clusters=8, pca_dims=4, min_explained_variance=0.96),
    "houston": dict(patch_size=11, knn=25, lam=1000.0, clusters=12, pca_dims=4, min_explained_variance=0.96),
}

VIEW_NAMES = ("emp", "spatial")


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message starts with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


@dataclass
class PipelineConfig:
    cube: Optional[str] = None
    labels: Optional[str] = None
    output: str = "out"
    preset: Optional[str] = None
    crop: Optional[tuple] = None  # (row0, row1, col0, col1), half-open
    pca_dims: int = 4
    patch_size: int = 13
    emp_radii: tuple = (1, 2, 3, 4)
    knn: int = 30
    lam: float = 100.0
    hops: int = 1
    zero_diag: bool = True
    scaling: str = "minmax"
    views: str = "both"
    fusion: str = "attention"
    epochs: int = 50
    step: float = 1e-3
    clusters: int = 4
    restarts: int = 10
    seed: int = 0
    min_explained_variance: float = 0.0

    def validate(self):
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ValueError(f"patch_size must be odd and positive, got {self.patch_size}")
        if self.knn < 1:
            raise ValueError(f"knn must be >= 1, got {self.knn}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.clusters < 2:
            raise ValueError(f"clusters must be >= 2, got {self.clusters}")
        if self.hops < 1 or self.restarts < 1 or self.epochs < 0 or not self.step > 0:
            raise ValueError("hops and restarts must be >= 1, epochs >= 0 and step > 0")
        if self.views not in ("both",) + VIEW_NAMES:
            raise ValueError(f"views must be one of both, emp, spatial; got {self.views!r}")
        if self.scaling not in preprocess.SCALERS:
            raise ValueError(f"scaling must be one of {sorted(preprocess.SCALERS)}, got {self.scaling!r}")
        if self.fusion not in ("attention", "uniform"):
            raise ValueError(f"fusion must be attention or uniform, got {self.fusion!r}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        return self

    def lines(self):
        out = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, (tuple, list)):
                value = ",".join(str(v) for v in value)
            out.append(f"{f.name} = {'' if value is None else value}")
        return out


# ---------------------------------------------------------------------------
# config text


def coerce_value(name, text):
    """Convert the text form of config key ``name`` to its Python type."""
    kind = {f.name: f for f in dataclasses.fields(PipelineConfig)}[name]
    default = kind.default
    text = text.strip()
    if name in ("crop", "emp_radii"):
        if not text:
            return None if name == "crop" else ()
        values = tuple(int(v) for v in text.replace(" ", "").split(","))
        if name == "crop" and len(values) != 4:
            raise ValueError("crop needs four integers: row0,row1,col0,col1")
        return values
    if name in ("cube", "labels", "preset"):
        return text or None
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = coerce_value(key, value)
    return values


def resolve_config(file_values: Optional[dict] = None, overrides: Optional[dict] = None) -> PipelineConfig:
    """Merge defaults, preset, config file and overrides, in that order."""
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    preset = overrides.get("preset", file_values.get("preset"))
    merged = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        merged.update(PRESETS[preset])
    merged.update(file_values)
    merged.update(overrides)
    return PipelineConfig(**merged).validate()


# ---------------------------------------------------------------------------
# the run


@dataclass
class PipelineResult:
    config: PipelineConfig
    index: hsi_io.SampleIndex
    assignment: clustering.ClusterAssignment
    scores: dict
    affinity: np.ndarray
    weights: np.ndarray
    details: dict = field(default_factory=dict)


@contextmanager
def _stage(name, timings):
    start = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - rewrapped with the stage name
        raise PipelineError(name, exc) from exc
    timings[name] = time.perf_counter() - start
    logger.info("%s done in %.2fs", name, timings[name])


def view_branch(features, config):
    """Scale one view, build its graph and solve self-expression."""
    features = preprocess.SCALERS[config.scaling](features)
    a_norm = graph.normalize_adjacency(graph.knn_adjacency(features, config.knn))
    Z = subspace.solve_self_expression(features, a_norm, config.lam, config.zero_diag, config.hops)
    return features, a_norm, Z


def cluster_cube(cube, label_map, config: PipelineConfig) -> PipelineResult:
    """Run every stage on in-memory inputs."""
    config.validate()
    timings = {}
    details = {}
    with _stage("samples", timings):
        if config.crop is not None:
            cube = cube.crop(*config.crop)
            label_map = label_map.crop(*config.crop)
        if label_map.shape != cube.shape[:2]:
            raise ValueError(f"label map {label_map.shape} does not match cube {cube.shape[:2]}")
        index = hsi_io.select_samples(label_map)
        details["n_samples"] = len(index)
        details["n_classes"] = index.n_classes

    with _stage("pca", timings):
        reduced, pca = preprocess.pca_fit_transform(cube, config.pca_dims)
        details["explained_variance"] = pca.explained_variance_ratio
        if pca.explained_variance_ratio < config.min_explained_variance:
            raise ValueError(
                f"{config.pca_dims} components explain {pca.explained_variance_ratio:.4f} of the "
                f"variance, below the required {config.min_explained_variance}"
            )

    wanted = VIEW_NAMES if config.views == "both" else (config.views,)
    raw_views = {}
    if "emp" in wanted:
        with _stage("emp", timings):
            raw_views["emp"] = preprocess.emp_features(reduced, config.emp_radii, index)
    if "spatial" in wanted:
        with _stage("patches", timings):
            raw_views["spatial"] = preprocess.extract_patches(reduced, config.patch_size, index)
    for name, feats in raw_views.items():
        details[f"{name}_dim"] = feats.shape[1]

    Fs, a_norms, Ys = [], [], []
    for name in wanted:
        with _stage(f"self-expression[{name}]", timings):
            feats, a_norm, Z = view_branch(raw_views[name], config)
            Fs.append(feats)
            a_norms.append(a_norm)
            Ys.append(subspace.build_affinity(Z))
            details[f"{name}_residual"] = subspace.residual_norm(Z, feats, a_norm, config.hops)

    with _stage("fusion", timings):
        n = len(index)
        if config.fusion == "attention" and len(Ys) > 1:
            params = fusion.train_attention(Ys, Fs, a_norms, lam=config.lam, epochs=config.epochs,
                                            step=config.step, seed=config.seed, hops=config.hops)
            weights = fusion.attention_forward(Ys, params)
            details["fusion_loss_initial"] = params.loss_history[0]
            details["fusion_loss_final"] = params.loss_history[-1]
            details["fusion_steps"] = len(params.loss_history) - 1
        else:
            weights = fusion.uniform_weights(n, len(Ys))
        fused = fusion.fuse(Ys, weights)
        for name, w in zip(wanted, weights.mean(axis=0)):
            details[f"weight_{name}"] = float(w)

    with _stage("clustering", timings):
        assignment = clustering.spectral_cluster(fused, config.clusters, config.restarts, config.seed)

    with _stage("metrics", timings):
        scores = metrics.evaluate(assignment.labels, index.truth)

    details["timings"] = timings
    return PipelineResult(config=config, index=index, assignment=assignment, scores=scores,
                          affinity=fused, weights=weights, details=details)


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Load inputs named by ``config``, cluster, and write the artifacts.

    Writes ``labels.pgm``, ``affinity.pgm`` (samples ordered by true class),
    ``metrics.txt`` and ``run.txt`` into ``config.output``.
    """
    config.validate()
    if not config.cube or not config.labels:
        raise PipelineError("load", "both cube and labels paths are required")
    with _stage("load", {}):
        cube = hsi_io.load_cube(config.cube)
        label_map = hsi_io.load_labels(config.labels, cube.rows, cube.cols)

    result = cluster_cube(cube, label_map, config)

    with _stage("write", {}):
        out = Path(config.output)
        out.mkdir(parents=True, exist_ok=True)
        index = result.index
        hsi_io.write_label_image(result.assignment, index, out / "labels.pgm")
        order = np.argsort(index.truth, kind="stable")
        hsi_io.write_affinity_heatmap(result.affinity, order, out / "affinity.pgm")
        hsi_io.write_report(out / "metrics.txt", {
            "oa": result.scores["oa"],
            "nmi": result.scores["nmi"],
            "kappa": result.scores["kappa"],
            "samples": len(index),
            "clusters": config.clusters,
        })
        write_run_log(out / "run.txt", result)
    return result


def write_run_log(path, result: PipelineResult):
    d = result.details
    cfg = result.config
    lines = ["[config]"] + result.config.lines() + ["", "[run]"]
    lines.append(f"samples = {d['n_samples']}")
    lines.append(f"classes = {d['n_classes']}")
    lines.append(f"explained_variance = {d['explained_variance']:.6f}")
    if "spatial_dim" in d:
        lines.append(f"spatial_dim = {d['spatial_dim']}  # patch_size^2 * pca_dims = "
                     f"{cfg.patch_size ** 2 * cfg.pca_dims}")
    if "emp_dim" in d:
        lines.append(f"emp_dim = {d['emp_dim']}  # pca_dims * (2 * len(emp_radii) + 1) = "
                     f"{cfg.pca_dims * (2 * len(cfg.emp_radii) + 1)}")
    for key in sorted(d):
        if key.endswith("_residual") or key.startswith("weight_") or key.startswith("fusion_"):
            value = d[key]
            lines.append(f"{key} = {value:.6g}" if isinstance(value, float) else f"{key} = {value}")
    lines.append(f"kmeans_inertia = {result.assignment.inertia:.6g}")
    Path(path).write_text("\n".join(lines) + "\n")
