import asyncio
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import structlog

# Root on the path so that config / services import when run as a script
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from logger_config import configure_logger
from schemas import ExperimentConfig, load_config
from services import reporting
from services.harness import emit_sweep_plot, median_average_regret, median_by_horizon, run_sweep, shortfall

logger = structlog.get_logger("regret_trend")


def expand(base: ExperimentConfig, horizons: Sequence[int], seeds: Sequence[int]) -> List[ExperimentConfig]:
    """One config per (horizon, seed), everything else taken from `base`."""
    return [
        base.model_copy(update={"horizon": int(T), "seed": int(s)})
        for T in horizons
        for s in seeds
    ]


def _slope(medians: Dict[int, float]) -> Optional[float]:
    """Log-log slope of the median totals against T; None when fewer than two are positive."""
    try:
        return reporting.fit_loglog_slope(list(medians), list(medians.values()))
    except ValueError:
        return None


async def regret_trend(config_path: str, horizons: Sequence[int], seeds: Sequence[int],
                       out_dir: str, workers: int) -> dict:
    """
    Horizon x seed sweep of one config.

    Writes trend_regret.svg, trend_slopes.csv and trend.json. Per horizon the json
    holds the median R_T / T, the median R_T and the median shortfall B - reward,
    with log-log slopes of the last two against T.
    """
    base = load_config(config_path)
    results = await run_sweep(expand(base, horizons, seeds), max_workers=workers)

    out = Path(out_dir)
    emit_sweep_plot(results, out / "trend_regret.svg", out / "trend_slopes.csv")

    medians = median_average_regret(results)
    regret = median_by_horizon(results, lambda r: r.summary.final_regret)
    gap = median_by_horizon(results, shortfall)
    averages = list(medians.values())
    report = {
        "algorithm": base.algorithm,
        "horizons": list(medians),
        "seeds": list(seeds),
        "median_average_regret": {str(T): v for T, v in medians.items()},
        "average_regret_decreasing": bool(all(a > b for a, b in zip(averages, averages[1:]))),
        "median_regret": {str(T): v for T, v in regret.items()},
        "regret_positive": bool(all(v > 0 for v in regret.values())),
        "loglog_slope": _slope(regret),
        "median_shortfall": {str(T): v for T, v in gap.items()},
        "shortfall_positive": bool(all(v > 0 for v in gap.values())),
        "shortfall_loglog_slope": _slope(gap),
        "benchmark_modes": sorted({r.benchmark.mode for r in results}),
    }
    reporting.write_json(out / "trend.json", report)
    logger.info("Trend finished", slope=report["loglog_slope"], shortfall_slope=report["shortfall_loglog_slope"],
                decreasing=report["average_regret_decreasing"])
    return report


if __name__ == "__main__":
    import argparse
    parser = argparse.ArgumentParser(description="Regret trend over horizons and seeds")
    parser.add_argument("config", help="base experiment config")
    parser.add_argument("--horizons", type=int, nargs="+", default=[1000, 10000, 100000])
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--out-dir", default="./out/trend")
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args()

    configure_logger(quiet=args.quiet)
    result = asyncio.run(regret_trend(args.config, args.horizons, args.seeds, args.out_dir, args.workers))
    sys.stdout.write(reporting.dumps(result).decode() + "\n")
