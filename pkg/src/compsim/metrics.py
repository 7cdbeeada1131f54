"""Evaluation indices for EE stabilisation and the method comparison."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

BASELINE_WINDOW = 3.0  # s
AXIS_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class AxisStats:
    mean: float
    std: float
    mean_error: float
    baseline_mean: float
    max_error: float


@dataclass(frozen=True)
class EvalReport:
    method: str
    scenario: str
    axes: dict
    D_E: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "scenario": self.scenario,
            "axes": {k: asdict(v) for k, v in self.axes.items()},
            "D_E": self.D_E,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(d["method"], d["scenario"],
                   {k: AxisStats(**v) for k, v in d["axes"].items()}, float(d["D_E"]))


def _baseline_count(n: int, baseline_window: float, rate: float) -> int:
    # samples with t = i / rate <= window
    return min(n, int(math.floor(baseline_window * rate + 1e-9)) + 1)


def axis_stats(series, baseline_window: float = BASELINE_WINDOW, rate: float = 60.0,
               start: int = 0) -> AxisStats:
    """Mean, sample std (n-1) and mean error against the initial window.

    ``start`` selects the first sample of the evaluation window; the default
    evaluates the whole series.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("series needs at least 2 samples")
    nb = _baseline_count(len(x), baseline_window, rate)
    if nb >= len(x):
        raise ValueError("baseline window must be shorter than the series")
    window = x[start:]
    if len(window) < 2:
        raise ValueError("evaluation window needs at least 2 samples")
    mean = float(np.mean(window))
    std = float(np.std(window, ddof=1))
    baseline = float(np.mean(x[:nb]))
    err = abs(mean - baseline)
    err_max = float(np.max(np.abs(mean - window)))
    return AxisStats(mean, std, err, baseline, err_max)


def distance_index_from_stats(stats) -> float:
    stats = list(stats)
    for s in stats:
        if s.mean_error > s.max_error * (1.0 + 1e-12) + 1e-15:
            raise ValueError("mean error exceeds max deviation; baseline outside evaluation window?")
    den = math.sqrt(sum(s.max_error ** 2 for s in stats))
    if den == 0.0:
        return 0.0
    return math.sqrt(sum(s.mean_error ** 2 for s in stats)) / den


def distance_index(series_xyz, baseline_window: float = BASELINE_WINDOW, rate: float = 60.0,
                   start: int = 0) -> float:
    """Normalised 3D residual displacement; 0 for a perfectly still EE."""
    xyz = np.asarray(series_xyz, dtype=float)
    return distance_index_from_stats(
        axis_stats(xyz[:, a], baseline_window, rate, start) for a in range(3))


def evaluate(log, baseline_window: float = BASELINE_WINDOW, start: int = 0) -> EvalReport:
    axes = {name: axis_stats(log.rho_E[:, a], baseline_window, log.rate, start)
            for a, name in enumerate(AXIS_NAMES)}
    return EvalReport(log.method, log.scenario, axes, distance_index_from_stats(axes.values()))


def compare_report(log_a, log_b, baseline_window: float = BASELINE_WINDOW) -> dict:
    if log_a.scenario != log_b.scenario:
        raise ValueError(f"scenario mismatch: {log_a.scenario!r} vs {log_b.scenario!r}")
    a = evaluate(log_a, baseline_window)
    b = evaluate(log_b, baseline_window)
    deltas = {name: {key: getattr(b.axes[name], key) - getattr(a.axes[name], key)
                     for key in ("mean", "std", "mean_error")}
              for name in AXIS_NAMES}
    deltas["D_E"] = b.D_E - a.D_E
    return {"scenario": a.scenario, "a": a.to_dict(), "b": b.to_dict(), "delta": deltas}
