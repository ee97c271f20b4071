"""Dataset generation, statistics, persistence and the train/val/holdout split."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._random import stream
from .channel import PruningConfig, synthesize
from .geo import LocalPoint
from .raytracer import TraceConfig, trace_many
from .scene import Scene, sample_receiver_positions

log = logging.getLogger(__name__)

COLUMNS = ("tx_x", "tx_y", "tx_z", "rx_x", "rx_y", "rx_z", "h_re", "h_im")
FEATURES = COLUMNS[:6]
# fixed so that results never depend on the worker count
CHUNK_SIZE = 1024


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSample:
    tx: LocalPoint
    rx: LocalPoint
    h: complex


@dataclass
class Dataset:
    """Rows of ``(tx_x, tx_y, tx_z, rx_x, rx_y, rx_z, h_re, h_im)`` plus metadata."""
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(COLUMNS))
        if not np.all(np.isfinite(self.data)):
            raise DatasetError("dataset contains non-finite values")

    def __len__(self):
        return len(self.data)

    @property
    def X(self) -> np.ndarray:
        return self.data[:, :6]

    @property
    def h_re(self) -> np.ndarray:
        return self.data[:, 6]

    @property
    def h_im(self) -> np.ndarray:
        return self.data[:, 7]

    def target(self, name: str) -> np.ndarray:
        if name not in ("re", "im"):
            raise DatasetError(f"unknown target {name!r}")
        return self.h_re if name == "re" else self.h_im

    @property
    def samples(self) -> list[ChannelSample]:
        return [ChannelSample(LocalPoint(*r[:3]), LocalPoint(*r[3:6]), complex(r[6], r[7])) for r in self.data]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.data[np.asarray(idx, dtype=int)], dict(self.meta))


def _trace_chunk(args):
    scene, tx, rxs, trace_cfg, prune_cfg = args
    rows = []
    for rx, paths in zip(rxs, trace_many(scene, tx, rxs, trace_cfg)):
        h = synthesize(paths, tx, rx, trace_cfg.carrier_frequency_hz, prune_cfg)
        rows.append(None if h is None else (h.re, h.im))
    return rows


def generate_dataset(scene: Scene, tx, rx_count: int, trace_cfg: TraceConfig = TraceConfig(),
                     prune_cfg: PruningConfig = PruningConfig(), seed: int = 0,
                     rx_height: float = 1.5, workers: int = 1) -> Dataset:
    """Trace ``rx_count`` uniformly placed receivers and keep those with a valid path.

    Row order follows receiver sampling order regardless of ``workers``.
    """
    tx = np.asarray(tx.as_tuple() if isinstance(tx, LocalPoint) else tx, dtype=float)
    if tx[2] <= scene.terrain_z:
        raise DatasetError("transmitter must be above the terrain")
    if rx_count <= 0:
        raise DatasetError("rx_count must be positive")
    rxs = sample_receiver_positions(scene, rx_count, rx_height, seed)
    jobs = [(scene, tx, rxs[i:i + CHUNK_SIZE], trace_cfg, prune_cfg) for i in range(0, rx_count, CHUNK_SIZE)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trace_chunk, jobs))
    else:
        results = []
        for k, job in enumerate(jobs):
            results.append(_trace_chunk(job))
            log.info("traced %d/%d receivers", min((k + 1) * CHUNK_SIZE, rx_count), rx_count)
    hs = [h for chunk in results for h in chunk]

    rows = [(*tx, *rx, h[0], h[1]) for rx, h in zip(rxs, hs) if h is not None]
    valid = len(rows)
    meta = {
        "total_receivers": int(rx_count),
        "valid_count": valid,
        "valid_ratio": valid / rx_count,
        "seed": int(seed),
        "tx": [float(v) for v in tx],
        "rx_height": float(rx_height),
        "trace_cfg": asdict(trace_cfg),
        "prune_cfg": asdict(prune_cfg),
        "scene_hash": scene.digest(),
    }
    return Dataset(np.array(rows, dtype=float).reshape(-1, len(COLUMNS)), meta)


def dataset_stats(d: Dataset) -> dict:
    """Population mean and variance of each coefficient component."""
    if len(d) < 2:
        raise DatasetError("statistics need at least 2 samples")
    return {
        "mean_re": float(np.mean(d.h_re)),
        "var_re": float(np.var(d.h_re)),
        "mean_im": float(np.mean(d.h_im)),
        "var_im": float(np.var(d.h_im)),
    }


@dataclass(frozen=True)
class SplitSpec:
    model_subset_size: int = 1000
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise DatasetError("train_fraction must lie in (0, 1)")
        if self.model_subset_size < 2:
            raise DatasetError("model_subset_size must be at least 2")


def split(d: Dataset, spec: SplitSpec = SplitSpec()) -> dict[str, np.ndarray]:
    """Seeded partition of row indices into train, validation and holdout."""
    L = len(d)
    if spec.model_subset_size > L:
        raise DatasetError(f"model subset of {spec.model_subset_size} exceeds dataset size {L}")
    perm = stream(spec.seed, "split").permutation(L)
    m = spec.model_subset_size
    n_train = int(round(spec.train_fraction * m))
    return {
        "train": np.sort(perm[:n_train]),
        "validation": np.sort(perm[n_train:m]),
        "holdout": np.sort(perm[m:]),
    }


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_csv(d: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in d.data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    meta_path(path).write_text(json.dumps(d.meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_csv(path) -> Dataset:
    path = Path(path)
    rows = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != COLUMNS:
            raise DatasetError(f"{path}: row 1: expected header {','.join(COLUMNS)}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(COLUMNS):
                raise DatasetError(f"{path}: row {lineno}: expected {len(COLUMNS)} columns, got {len(rec)}")
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise DatasetError(f"{path}: row {lineno}: {exc}") from exc
    mp = meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))
    else:
        meta = {"total_receivers": len(rows), "valid_count": len(rows), "valid_ratio": 1.0 if rows else math.nan}
    if meta.get("valid_count", len(rows)) != len(rows):
        raise DatasetError(f"{path}: sidecar valid_count {meta['valid_count']} != {len(rows)} rows")
    return Dataset(np.array(rows, dtype=float).reshape(-1, len(COLUMNS)), meta)
