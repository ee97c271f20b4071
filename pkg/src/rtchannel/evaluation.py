"""Error metrics, empirical CDFs of absolute error, and model comparison reports."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .ml import MeanRegressor, TrainedPredictor


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float
    r2: float
    n: int
    r2_note: str = ""

    def to_dict(self):
        d = asdict(self)
        if math.isnan(self.r2):
            d["r2"] = None
        return d

    @classmethod
    def from_dict(cls, d):
        r2 = d["r2"]
        return cls(float(d["mae"]), float(d["rmse"]), math.nan if r2 is None else float(r2),
                   int(d["n"]), d.get("r2_note", ""))


def compute_metrics(y, y_hat) -> Metrics:
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape or y.size == 0:
        raise EvaluationError("y and y_hat must be non-empty and of equal length")
    r = y - y_hat
    n = y.size
    sse = float(np.sum(r * r))
    mae = float(np.mean(np.abs(r)))
    rmse = math.sqrt(sse / n)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        return Metrics(mae, rmse, math.nan, n, "undefined: target is constant on the evaluation set")
    return Metrics(mae, rmse, 1.0 - sse / sst, n)


@dataclass(frozen=True)
class EcdfCurve:
    x: np.ndarray
    F: np.ndarray

    def __len__(self):
        return len(self.x)

    def quantile(self, q: float) -> float:
        """Smallest error value ``x`` with ``F(x) >= q``."""
        if not 0 < q <= 1:
            raise EvaluationError("q must lie in (0, 1]")
        # guard against F stored as k/N rounding just below q
        k = int(np.searchsorted(self.F, q - 1e-12, side="left"))
        return float(self.x[min(k, len(self.x) - 1)])

    def __call__(self, x):
        idx = np.searchsorted(self.x, x, side="right")
        return idx / len(self.x)

    def to_rows(self):
        return list(zip(self.x.tolist(), self.F.tolist()))


def ecdf(errors) -> EcdfCurve:
    e = np.abs(np.asarray(errors, dtype=float).ravel())
    if e.size == 0:
        raise EvaluationError("eCDF of an empty error set")
    x = np.sort(e)
    # F(x_i) = #{|e| <= x_i} / N, so tied values share the largest rank
    F = np.searchsorted(x, x, side="right") / x.size
    return EcdfCurve(x, F)


@dataclass
class Report:
    rows: list[dict] = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    histograms: dict = field(default_factory=dict)
    n_holdout: int = 0

    def metrics(self, model: str, target: str) -> Metrics:
        for r in self.rows:
            if r["model"] == model and r["target"] == target:
                return Metrics.from_dict(r)
        raise KeyError((model, target))

    def to_dict(self):
        return {"n_holdout": self.n_holdout, "rows": self.rows}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(rows=doc["rows"], n_holdout=doc["n_holdout"])

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.json", out / "report.csv"]
        written[0].write_text(self.to_json(), encoding="utf-8")
        cols = ["target", "model", "mae", "rmse", "r2", "mean_abs_error", "p95_abs_error", "n"]
        with written[1].open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow(["" if r[c] is None else _fmt(r[c]) for c in cols])
        for (model, target), curve in sorted(self.curves.items()):
            p = out / f"ecdf_{model}_{target}.csv"
            with p.open("w", encoding="utf-8", newline="") as fh:
                fh.write("abs_error,F\n")
                for x, F in curve.to_rows():
                    fh.write(f"{x:.17g},{F:.17g}\n")
            written.append(p)
        for target, (counts, edges) in sorted(self.histograms.items()):
            p = out / f"hist_{target}.csv"
            with p.open("w", encoding="utf-8", newline="") as fh:
                fh.write("bin_left,bin_right,count,density\n")
                width = np.diff(edges)
                dens = counts / (counts.sum() * width)
                for a, b, c, d in zip(edges[:-1], edges[1:], counts, dens):
                    fh.write(f"{a:.17g},{b:.17g},{int(c)},{d:.17g}\n")
            written.append(p)
        return written


def _fmt(v):
    return f"{v:.17g}" if isinstance(v, float) else str(v)


def histogram(values):
    """Counts and edges with Freedman-Diaconis bin width."""
    v = np.asarray(values, dtype=float)
    return np.histogram(v, bins="fd")


def compare_models(predictors: list[TrainedPredictor], holdout: Dataset, baseline: bool = True) -> Report:
    """Evaluate each predictor on its target over ``holdout``.

    With ``baseline`` a mean predictor fit on the holdout targets themselves
    is added per target; its RMSE is the holdout population std.
    """
    if len(holdout) == 0:
        raise EvaluationError("empty holdout set")
    X = holdout.X
    report = Report(n_holdout=len(holdout))
    entries = [(p.model_name, p.target, p.predict(X)) for p in predictors]
    if baseline:
        for target in ("re", "im"):
            y = holdout.target(target)
            entries.append(("mean", target, MeanRegressor().fit(X, y).predict(X)))
    for name, target, y_hat in entries:
        y = holdout.target(target)
        m = compute_metrics(y, y_hat)
        curve = ecdf(y - y_hat)
        row = {"model": name, "target": target, **m.to_dict(),
               "mean_abs_error": float(np.mean(curve.x)), "p95_abs_error": curve.quantile(0.95)}
        report.rows.append(row)
        report.curves[(name, target)] = curve
    for target in ("re", "im"):
        report.histograms[target] = histogram(holdout.target(target))
    return report
