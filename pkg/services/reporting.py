"""
Reporting Service

Writers for everything a run leaves on disk:
1. Trace CSV (t,block,phase,reward,cum_reward,feasible)
2. JSON documents (summary, benchmark, error, demo report)
3. Log-log regret SVG with fitted slopes, plus the slope table CSV
"""

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update({
    "svg.hashsalt": "submax",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "axes.unicode_minus": False,
})
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np
import orjson
import structlog

from services.trace import RegretTrace, compute_regret

logger = structlog.get_logger("reporting")

TRACE_COLUMNS = ["t", "block", "phase", "reward", "cum_reward", "feasible"]
JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
PLOT_FLOOR = 1e-3
# points per curve after log-spaced thinning
_PLOT_POINTS = 2000

PathLike = Union[str, Path]


def dumps(data: Any) -> bytes:
    return orjson.dumps(data, option=JSON_OPTIONS)


def write_json(path: PathLike, data: Any) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(dumps(data) + b"\n")
    return target


def write_trace_csv(trace: RegretTrace, path: PathLike) -> Path:
    """Floats go through repr so that reruns are byte-identical."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    cumulative = trace.cumulative_reward
    phases = trace.phases()
    with target.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for t in range(len(trace)):
            writer.writerow([
                t + 1,
                int(trace.blocks[t]),
                phases[t],
                repr(float(trace.rewards[t])),
                repr(float(cumulative[t])),
                "true" if trace.feasible[t] else "false",
            ])
    return target


# =============================================================================
# SLOPES AND PLOTS
# =============================================================================

def fit_loglog_slope(ts: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(t) over the positive entries."""
    t_arr = np.asarray(ts, dtype=float)
    v_arr = np.asarray(values, dtype=float)
    keep = (t_arr > 0) & (v_arr > 0) & np.isfinite(v_arr)
    if np.count_nonzero(keep) < 2 or np.unique(t_arr[keep]).size < 2:
        raise ValueError("need at least two positive values at distinct t to fit a slope")
    slope, _ = np.polyfit(np.log(t_arr[keep]), np.log(v_arr[keep]), 1)
    return float(slope)


@dataclass
class SlopeRow:
    label: str
    horizon: int
    final_regret: float
    slope: Optional[float]


def regret_curve(trace: RegretTrace) -> Tuple[np.ndarray, np.ndarray]:
    if trace.benchmark is None:
        raise ValueError("trace has no benchmark attached")
    series = compute_regret(trace, trace.benchmark)
    return np.arange(1, len(trace) + 1), series.per_round


def _thin(ts: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if ts.shape[0] <= _PLOT_POINTS:
        return ts, values
    idx = np.unique(np.geomspace(1, ts.shape[0], _PLOT_POINTS).astype(int) - 1)
    return ts[idx], values[idx]


def emit_plot(traces: Sequence[Tuple[str, RegretTrace]], svg_path: PathLike,
              slope_csv_path: Optional[PathLike] = None) -> List[SlopeRow]:
    """Log-log cumulative regret against t, one curve per trace, slope in the legend."""
    if not traces:
        raise ValueError("need at least one trace to plot")

    rows: List[SlopeRow] = []
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    for label, trace in traces:
        ts, regret = regret_curve(trace)
        try:
            slope = fit_loglog_slope(ts, regret)
        except ValueError:
            slope = None
        final = float(regret[-1]) if regret.size else 0.0
        rows.append(SlopeRow(label=label, horizon=len(trace), final_regret=final, slope=slope))

        thin_t, thin_r = _thin(ts, regret)
        slope_text = "n/a" if slope is None else f"{slope:.3f}"
        ax.plot(thin_t, np.clip(thin_r, PLOT_FLOOR, None), label=f"{label} (slope {slope_text})")

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("round t")
    ax.set_ylabel("cumulative (1-1/e)-regret")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)

    target = Path(svg_path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target, format="svg", metadata={"Date": None})
    plt.close(fig)

    if slope_csv_path is not None:
        write_slope_table(rows, slope_csv_path)
    logger.debug("Plot written", path=str(target), curves=len(rows))
    return rows


def write_slope_table(rows: Sequence[SlopeRow], path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fields = ["label", "horizon", "final_regret", "slope"]
    with target.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            data = asdict(row)
            data["final_regret"] = repr(data["final_regret"])
            data["slope"] = "" if data["slope"] is None else repr(data["slope"])
            writer.writerow(data)
    return target
