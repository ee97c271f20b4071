"""Stage functions shared by the command-line interface and the test-suite."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from .channel import PruningConfig
from .config import RunConfig
from .dataset import Dataset, DatasetError, SplitSpec, dataset_stats, generate_dataset, read_csv, split, write_csv
from .evaluation import Report, compare_models, compute_metrics
from .ml import TrainedPredictor, load_predictor, make_model, save_predictor
from .raytracer import TraceConfig
from .scene import ScenGenConfig, Scene, generate_synthetic_scene, points_strictly_inside

log = logging.getLogger(__name__)

TARGETS = ("re", "im")


def build_scene(cfg: RunConfig) -> Scene:
    s = cfg.scene
    tx = cfg.tx_position()
    gen = ScenGenConfig(
        size=s.size,
        building_count=s.buildings,
        height_range=(s.height_min, s.height_max),
        side_range=(s.side_min, s.side_max),
        min_gap=s.min_gap,
        keep_out=((tx[0], tx[1], s.tx_clearance),) if s.tx_clearance > 0 else (),
    )
    return generate_synthetic_scene(cfg.stage_seed("scene"), gen)


def trace_config(cfg: RunConfig) -> TraceConfig:
    g = cfg.generate
    return TraceConfig(g.max_reflection_order, g.carrier_frequency_hz, g.tx_power_w)


def pruning_config(cfg: RunConfig) -> PruningConfig:
    return PruningConfig(cfg.generate.delta_th_db, cfg.generate.epsilon_tau_s)


def build_dataset(scene: Scene, cfg: RunConfig) -> Dataset:
    tx = cfg.tx_position()
    for b in scene.buildings:
        if points_strictly_inside(b.xy, [tx[0]], [tx[1]])[0] and scene.terrain_z + b.height >= tx[2]:
            raise DatasetError(f"transmitter {tx} lies inside a building")
    g = cfg.generate
    return generate_dataset(scene, tx, g.receivers, trace_config(cfg), pruning_config(cfg),
                            seed=cfg.stage_seed("generate"), rx_height=g.rx_height, workers=g.workers)


def split_spec(cfg: RunConfig) -> SplitSpec:
    sp = cfg.split
    return SplitSpec(sp.model_subset_size, sp.train_fraction, cfg.stage_seed("split"))


def train_models(d: Dataset, cfg: RunConfig) -> tuple[list[TrainedPredictor], dict, dict]:
    """Fit one predictor per (model, target) on the training split.

    Returns the predictors, the split indices and train/validation metrics.
    """
    parts = split(d, split_spec(cfg))
    train, val = d.subset(parts["train"]), d.subset(parts["validation"])
    predictors = []
    metrics = {}
    for name in cfg.model.models:
        for target in TARGETS:
            model = make_model(name, **cfg.model.hyper(name))
            p = TrainedPredictor(model=model, target=target).fit(
                train.X, train.target(target), n_train=len(train), n_validation=len(val),
                split_seed=cfg.stage_seed("split"))
            predictors.append(p)
            metrics[f"{name}_{target}"] = {
                "train": compute_metrics(train.target(target), p.predict(train.X)).to_dict(),
                "validation": compute_metrics(val.target(target), p.predict(val.X)).to_dict(),
            }
    return predictors, parts, metrics


def evaluate(d: Dataset, predictors: list[TrainedPredictor], parts: dict) -> Report:
    return compare_models(predictors, d.subset(parts["holdout"]))


# ------------------------------------------------------------ file-level stages

def write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def save_models(predictors, parts, metrics, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for p in predictors:
        path = out / f"model_{p.model_name}_{p.target}.json"
        save_predictor(p, path)
        written.append(path)
    write_json({k: v.tolist() for k, v in parts.items()}, out / "split.json")
    write_json(metrics, out / "train_metrics.json")
    return written


def load_models(models_dir) -> tuple[list[TrainedPredictor], dict]:
    d = Path(models_dir)
    predictors = [load_predictor(p) for p in sorted(d.glob("model_*.json"))]
    if not predictors:
        raise FileNotFoundError(f"no model files in {d}")
    order = {"lr": 0, "svr": 1, "dtr": 2}
    predictors.sort(key=lambda p: (order.get(p.model_name, 9), p.target != "re"))
    parts = {k: np.array(v, dtype=int) for k, v in json.loads((d / "split.json").read_text()).items()}
    return predictors, parts


def run_pipeline(cfg: RunConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene = build_scene(cfg)
    (out / "scene.json").write_text(scene.to_json(), encoding="utf-8")
    d = build_dataset(scene, cfg)
    write_csv(d, out / "dataset.csv")
    predictors, parts, metrics = train_models(d, cfg)
    save_models(predictors, parts, metrics, out / "models")
    report = evaluate(d, predictors, parts)
    report.write(out / "report")
    write_json(dataset_stats(d), out / "report" / "stats.json")
    return {"scene": scene, "dataset": d, "predictors": predictors, "parts": parts,
            "train_metrics": metrics, "report": report}


def load_dataset(path) -> Dataset:
    return read_csv(path)
