"""rtchannel command line: scene | generate | train | evaluate | pipeline.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline as pl
from .config import ConfigError, load_config
from .dataset import DatasetError, dataset_stats, read_csv, write_csv
from .evaluation import EvaluationError
from .ml import ConvergenceError
from .scene import SceneError, SceneGenerationError, load_scene, save_scene

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON run configuration (flags override it)")
    p.add_argument("--seed", type=int, help="master seed; every stage draws from a named sub-stream")
    p.add_argument("-v", "--verbose", action="store_true")


def _scene_flags(p):
    g = p.add_argument_group("scene")
    g.add_argument("--size", type=float, dest="scene.size",
                   help="side of the square area in m (table: environment size 0.3 x 0.3 km)")
    g.add_argument("--buildings", type=int, dest="scene.buildings", help="number of buildings")
    g.add_argument("--height-min", type=float, dest="scene.height_min", help="minimum building height, m")
    g.add_argument("--height-max", type=float, dest="scene.height_max", help="maximum building height, m")
    g.add_argument("--scene-seed", type=int, dest="scene.seed", help="override the scene sub-stream seed")


def _generate_flags(p):
    g = p.add_argument_group("generation")
    g.add_argument("--receivers", type=int, dest="generate.receivers",
                   help="receivers to trace (table: total receiver samples, 15000)")
    g.add_argument("--tx-x", type=float, dest="generate.tx_x", help="transmitter x, m (default: scene centre)")
    g.add_argument("--tx-y", type=float, dest="generate.tx_y", help="transmitter y, m (default: scene centre)")
    g.add_argument("--tx-height", type=float, dest="generate.tx_height",
                   help="transmitter height, m (table: transmitter height, 16 m)")
    g.add_argument("--rx-height", type=float, dest="generate.rx_height",
                   help="receiver height, m (table: receiver height, 1.5 m)")
    g.add_argument("--fc", type=float, dest="generate.carrier_frequency_hz",
                   help="carrier frequency, Hz (table: carrier frequency, 7 GHz)")
    g.add_argument("--ptx", type=float, dest="generate.tx_power_w",
                   help="transmit power, W (table: P_TH, 1 W)")
    g.add_argument("--delta-th", type=float, dest="generate.delta_th_db",
                   help="relative power pruning threshold, dB (table: Delta_th, 30 dB)")
    g.add_argument("--eps-tau", type=float, dest="generate.epsilon_tau_s",
                   help="LOS delay window, s (table: epsilon_tau, 57.76 ns)")
    g.add_argument("--max-order", type=int, dest="generate.max_reflection_order",
                   help="maximum number of specular reflections per path (default 2)")
    g.add_argument("--workers", type=int, dest="generate.workers",
                   help="parallel tracing processes; output does not depend on it")
    g.add_argument("--receiver-seed", type=int, dest="generate.seed",
                   help="override the receiver-placement sub-stream seed")


def _train_flags(p):
    g = p.add_argument_group("training")
    g.add_argument("--models", dest="model.models", help="comma list from lr,svr,dtr")
    g.add_argument("--subset", type=int, dest="split.model_subset_size",
                   help="rows used for train+validation (1000); the rest is the holdout")
    g.add_argument("--train-fraction", type=float, dest="split.train_fraction",
                   help="train share of the subset (0.8)")
    g.add_argument("--split-seed", type=int, dest="split.seed", help="override the split sub-stream seed")
    g.add_argument("--svr-c", type=float, dest="model.svr_c", help="SVR box constraint C")
    g.add_argument("--svr-epsilon", type=float, dest="model.svr_epsilon",
                   help="SVR tube half-width in standardized target units")
    g.add_argument("--svr-gamma", type=float, dest="model.svr_gamma", help="RBF gamma (default 1/n_features)")
    g.add_argument("--dtr-max-depth", type=int, dest="model.dtr_max_depth", help="tree depth limit")
    g.add_argument("--dtr-min-leaf", type=int, dest="model.dtr_min_samples_leaf", help="minimum rows per leaf")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtchannel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scene", help="generate a synthetic building scene")
    _common(p)
    _scene_flags(p)
    p.add_argument("--out", type=Path, default=Path("scene.json"))

    p = sub.add_parser("generate", help="trace receivers and write the dataset CSV")
    _common(p)
    _generate_flags(p)
    p.add_argument("--scene", type=Path, default=Path("scene.json"))
    p.add_argument("--out", type=Path, default=Path("dataset.csv"))

    p = sub.add_parser("train", help="fit the regressors for both coefficient components")
    _common(p)
    _train_flags(p)
    p.add_argument("--dataset", type=Path, default=Path("dataset.csv"))
    p.add_argument("--out-dir", type=Path, default=Path("models"))

    p = sub.add_parser("evaluate", help="score trained models on the holdout set")
    _common(p)
    p.add_argument("--dataset", type=Path, default=Path("dataset.csv"))
    p.add_argument("--models-dir", type=Path, default=Path("models"))
    p.add_argument("--out-dir", type=Path, default=Path("report"))

    p = sub.add_parser("pipeline", help="scene, generate, train and evaluate in one go")
    _common(p)
    _scene_flags(p)
    _generate_flags(p)
    _train_flags(p)
    p.add_argument("--out-dir", type=Path, default=Path("run"))
    return parser


def _overrides(args) -> dict:
    over = {k: v for k, v in vars(args).items() if "." in k}
    if args.seed is not None:
        over["seed"] = args.seed
    return over


def cmd_scene(args, cfg):
    scene = pl.build_scene(cfg)
    save_scene(scene, args.out)
    x0, x1, y0, y1 = scene.bounds
    print(f"{len(scene.buildings)} buildings, bounds x [{x0:g}, {x1:g}] y [{y0:g}, {y1:g}] -> {args.out}")


def cmd_generate(args, cfg):
    scene = load_scene(args.scene)
    d = pl.build_dataset(scene, cfg)
    write_csv(d, args.out)
    m = d.meta
    print(f"valid receivers {m['valid_count']}/{m['total_receivers']} "
          f"(ratio {m['valid_ratio']:.3f}) -> {args.out}")


def cmd_train(args, cfg):
    d = read_csv(args.dataset)
    predictors, parts, metrics = pl.train_models(d, cfg)
    written = pl.save_models(predictors, parts, metrics, args.out_dir)
    for key, m in metrics.items():
        print(f"{key:8s} train RMSE {m['train']['rmse']:.4e}  validation RMSE {m['validation']['rmse']:.4e}")
    print(f"wrote {len(written)} model files to {args.out_dir}")


def cmd_evaluate(args, cfg):
    d = read_csv(args.dataset)
    predictors, parts = pl.load_models(args.models_dir)
    report = pl.evaluate(d, predictors, parts)
    report.write(args.out_dir)
    pl.write_json(dataset_stats(d), Path(args.out_dir) / "stats.json")
    _print_report(report)


def cmd_pipeline(args, cfg):
    res = pl.run_pipeline(cfg, args.out_dir)
    m = res["dataset"].meta
    print(f"valid receivers {m['valid_count']}/{m['total_receivers']} (ratio {m['valid_ratio']:.3f})")
    _print_report(res["report"])


def _print_report(report):
    print(f"{'target':6s} {'model':5s} {'MAE':>11s} {'RMSE':>11s} {'R2':>8s}")
    for r in report.rows:
        r2 = "n/a" if r["r2"] is None else f"{r['r2']:.4f}"
        print(f"{r['target']:6s} {r['model']:5s} {r['mae']:11.4e} {r['rmse']:11.4e} {r2:>8s}")


COMMANDS = {"scene": cmd_scene, "generate": cmd_generate, "train": cmd_train,
            "evaluate": cmd_evaluate, "pipeline": cmd_pipeline}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](args, cfg)
    except (SceneError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SceneGenerationError, DatasetError, ConvergenceError, EvaluationError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
