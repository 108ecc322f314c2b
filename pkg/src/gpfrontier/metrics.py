"""Trajectory quality metrics.

Five numbers summarize a run: total time, accumulated path length, mean
absolute rate of curvature change, time-normalized squared linear jerk, and
an obstacle-proximity risk integral. Derivatives use central finite
differences (one-sided at the ends), integrals use the trapezoid rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

CSV_HEADER = "t,x,y,heading,v,w,r_min,frontier_theta,frontier_r,cost"

# Curvature k = |w/v| is singular at stops; v is floored inside that ratio
# only, so that rotating in place counts as a curvature plateau instead of
# dominating the metric.
EPS_V = 0.05  # m/s

_EPS_R = 1e-6  # m; guards 1/r_min when a run ends in contact


@dataclass
class TrajectoryLog:
    """Uniformly sampled closed-loop run record.

    Arrays all share one length; t is strictly increasing with a constant
    step. frontier_theta/frontier_r/cost are NaN whenever the controller was
    not tracking a frontier. fit_ms/predict_ms hold one entry per scan (not
    per sample) and never enter the CSV schema.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    v: np.ndarray
    w: np.ndarray
    r_min: np.ndarray
    frontier_theta: np.ndarray
    frontier_r: np.ndarray
    cost: np.ndarray
    success: bool = False
    collided: bool = False
    timed_out: bool = False
    scenario: str = ""
    seed: int = 0
    fit_ms: np.ndarray = field(default_factory=lambda: np.empty(0))
    predict_ms: np.ndarray = field(default_factory=lambda: np.empty(0))
    train_sizes: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def __len__(self) -> int:
        return self.t.shape[0]

    def to_csv(self, path) -> None:
        cols = np.column_stack(
            [self.t, self.x, self.y, self.heading, self.v, self.w,
             self.r_min, self.frontier_theta, self.frontier_r, self.cost]
        )
        np.savetxt(path, cols, fmt="%.9g", delimiter=",",
                   header=CSV_HEADER, comments="")

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 10:
            raise ValueError(f"expected 10 columns, found {data.shape[1]}")
        return cls(*(data[:, i] for i in range(10)))


@dataclass(frozen=True)
class MetricsReport:
    """t_tot [s]; d_acc [m]; c_chg [1/(m s)]; j_acc [(m/s^3)^2];
    r_obs [s/m]; success flag."""

    t_tot: float
    d_acc: float
    c_chg: float
    j_acc: float
    r_obs: float
    success: bool

    FIELDS = ("t_tot", "d_acc", "c_chg", "j_acc", "r_obs")


def compute_metrics(log: TrajectoryLog, eps_v: float = EPS_V) -> MetricsReport:
    """Evaluate all five metrics on one log.

    Raises ValueError for logs too short to carry a second derivative or
    with a non-uniform time base.
    """
    t = np.asarray(log.t, dtype=float)
    if t.shape[0] < 4:
        raise ValueError("need at least 4 samples")
    dt = np.diff(t)
    if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
        raise ValueError("time base must be strictly increasing and uniform")

    t_tot = float(t[-1] - t[0])
    d_acc = float(np.sum(np.hypot(np.diff(log.x), np.diff(log.y))))

    k = np.abs(log.w) / np.maximum(np.abs(log.v), eps_v)
    c_chg = float(trapezoid(np.abs(np.gradient(k, t)), t) / t_tot)

    accel = np.gradient(log.v, t)
    jerk = np.gradient(accel, t)
    j_acc = float(trapezoid(jerk**2, t) / t_tot)

    r_obs = float(trapezoid(1.0 / np.maximum(log.r_min, _EPS_R), t))
    return MetricsReport(
        t_tot=t_tot, d_acc=d_acc, c_chg=c_chg, j_acc=j_acc, r_obs=r_obs,
        success=bool(log.success),
    )


def aggregate(reports: list[MetricsReport]) -> dict:
    """Per-metric mean and standard deviation plus the success rate."""
    if not reports:
        raise ValueError("nothing to aggregate")
    out = {}
    for name in MetricsReport.FIELDS:
        vals = np.array([getattr(r, name) for r in reports], dtype=float)
        out[f"{name}_mean"] = float(vals.mean())
        out[f"{name}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    out["success_rate"] = float(np.mean([r.success for r in reports]))
    out["runs"] = len(reports)
    return out


def report_table(reports: list[MetricsReport], label: str = "") -> str:
    """Aggregate as a small aligned text table (mean +/- std per metric)."""
    agg = aggregate(reports)
    lines = [f"{label or 'runs'}: {agg['runs']} runs, "
             f"success {100 * agg['success_rate']:.0f}%"]
    for name in MetricsReport.FIELDS:
        lines.append(
            f"  {name:6s} {agg[f'{name}_mean']:10.3f} +/- {agg[f'{name}_std']:.3f}"
        )
    return "\n".join(lines)


def write_metrics_csv(path, rows: list[dict]) -> None:
    """Write per-seed metric rows (plus any aggregate rows) with a stable
    column order."""
    if not rows:
        raise ValueError("no rows")
    cols = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def oscillation_stats(log: TrajectoryLog, tail_seconds: float = 60.0):
    """Turn-rate sign changes and position spread over the log's tail.

    Used to recognize the stuck-and-dithering failure signature: many sign
    flips of w while the robot stays in a small neighborhood.
    """
    t = np.asarray(log.t)
    sel = t >= (t[-1] - tail_seconds)
    w = np.asarray(log.w)[sel]
    s = np.sign(w[np.abs(w) > 1e-9])
    sign_changes = int(np.sum(s[1:] != s[:-1]))
    span = float(max(np.ptp(np.asarray(log.x)[sel]), np.ptp(np.asarray(log.y)[sel])))
    return sign_changes, span
