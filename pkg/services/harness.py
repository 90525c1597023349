"""
Harness Service

Config in, files out:
1. run_experiment - schedule, interior, oracles, adversary, run, benchmark, regret, files
2. run_benchmark_only - the benchmark half of a run, no algorithm
3. run_sweep - independent configs fanned out over worker threads
"""

import asyncio
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from config import get_settings
from exceptions import SubmaxError
from schemas import BenchmarkSummary, ExperimentConfig, RunSummary
from services import reporting
from services.adversary import AdversaryEnv, generate_adversary
from services.algorithms import (
    BlockPlan,
    bandit_fw_run,
    derive_params_bandit,
    derive_params_mono,
    mono_fw_run,
    regret_bound_bandit,
    regret_bound_general,
    regret_bound_mono,
    regret_bound_responsive,
    responsive_fw_run,
)
from services.benchmark import BenchmarkResult, compute_benchmark
from services.geometry import ConstraintSet, InteriorSet, constraint_from_spec
from services.objectives import ContinuousObjective, ObjectiveConstants, empirical_grad_variance
from services.oracles import OracleBank
from services.rng import RngStreams
from services.rounding import Matroid, matroid_from_constraint
from services.trace import RegretTrace, compute_regret

logger = structlog.get_logger("harness")

PathLike = Union[str, Path]


@dataclass
class RunResult:
    config: ExperimentConfig
    trace: RegretTrace
    benchmark: BenchmarkResult
    summary: RunSummary


@dataclass
class _Setup:
    streams: RngStreams
    constraint: ConstraintSet
    plan: BlockPlan
    interior: Optional[InteriorSet]
    matroid: Optional[Matroid]
    env: AdversaryEnv


def resolve_out_dir(config: ExperimentConfig, out_dir: Optional[PathLike] = None) -> Path:
    """CLI flag, then the config's output.dir, then SUBMAX_OUT."""
    if out_dir is not None:
        return Path(out_dir)
    if config.output.dir is not None:
        return Path(config.output.dir)
    return Path(get_settings().SUBMAX_OUT)


def _plan(config: ExperimentConfig, constraint: ConstraintSet) -> Tuple[BlockPlan, Optional[InteriorSet]]:
    o = config.overrides
    if config.algorithm == "mono_fw":
        return derive_params_mono(config.horizon, o.K), None
    return derive_params_bandit(
        config.horizon, constraint, gamma=o.gamma, c2=o.c2, delta=o.delta, K=o.K, L=o.L,
        algorithm=config.algorithm,
    )


def _setup(config: ExperimentConfig) -> _Setup:
    streams = RngStreams(config.seed)
    constraint = constraint_from_spec(config.constraint.model_dump(exclude_none=True))
    plan, interior = _plan(config, constraint)
    matroid = matroid_from_constraint(constraint) if config.algorithm == "responsive_fw" else None
    env = generate_adversary(
        config.adversary.model_dump(exclude_none=True), streams, constraint, config.algorithm,
        matroid=matroid, validate=config.validate_objectives,
    )
    logger.info(
        "Plan derived",
        Q=plan.Q, K=plan.K, L=plan.L, delta=plan.delta, alpha=plan.alpha, t_effective=plan.t_effective,
    )
    return _Setup(streams, constraint, plan, interior, matroid, env)


def _run(config: ExperimentConfig, s: _Setup) -> RegretTrace:
    feasible = s.interior if s.interior is not None else s.constraint
    bank = OracleBank.build(config.oracle.oracle, feasible, s.plan.K, s.streams, config.oracle.eta0)
    if config.algorithm == "mono_fw":
        return mono_fw_run(s.env, s.constraint, bank, s.plan, s.streams, audit=config.audit)
    if config.algorithm == "bandit_fw":
        return bandit_fw_run(s.env, s.interior, bank, s.plan, s.streams, audit=config.audit)
    return responsive_fw_run(s.env, s.interior, bank, s.plan, s.matroid, s.streams, audit=config.audit)


def theoretical_bound(config: ExperimentConfig, s: _Setup, constants: ObjectiveConstants,
                      horizon: int) -> Optional[float]:
    """Closed-form expected-regret bound at `horizon`; None when a geometric constant is unavailable."""
    try:
        if config.algorithm == "mono_fw":
            return regret_bound_mono(horizon, constants, s.constraint.bounds())
        r = s.constraint.inscribed_orthant_radius()
        d = s.constraint.dim
        if config.algorithm == "responsive_fw":
            return regret_bound_responsive(horizon, constants.value_bound, r, d)
        if config.overrides.gamma == 1.0 and config.overrides.c2 is None:
            return regret_bound_bandit(horizon, constants, s.constraint.bounds(), r, d)
        c2 = config.overrides.c2 if config.overrides.c2 is not None else r / (math.sqrt(d) + 2.0)
        c1 = s.interior.discrepancy_bound() / s.interior.delta
        return regret_bound_general(horizon, constants, s.constraint.bounds(), config.overrides.gamma, c1, c2, d)
    except SubmaxError as e:
        logger.warning("Regret bound unavailable", error=str(e))
        return None


def _geometry(s: _Setup) -> Dict[str, object]:
    bounds = s.constraint.bounds()
    data: Dict[str, object] = {
        "constraint": s.constraint.to_spec(),
        "diameter": bounds.diameter,
        "radius": bounds.radius,
    }
    try:
        data["inscribed_radius"] = s.constraint.inscribed_orthant_radius()
    except SubmaxError:
        data["inscribed_radius"] = None
    if s.interior is not None:
        data["interior"] = {
            "delta": s.interior.delta,
            "alpha": s.interior.alpha,
            "discrepancy_bound": s.interior.discrepancy_bound(),
        }
    return data


def _exploit_feasible(trace: RegretTrace) -> bool:
    exploit = ~trace.explore
    return bool(np.all(trace.feasible[exploit])) if exploit.any() else True


# =============================================================================
# ENTRY POINTS
# =============================================================================

def run_experiment(config: ExperimentConfig, out_dir: Optional[PathLike] = None,
                   write: bool = True) -> RunResult:
    """
    One full run. With `write`, leaves {stem}_trace.csv, {stem}_summary.json
    and (unless output.plot is off) {stem}_regret.svg in the output directory.
    """
    with structlog.contextvars.bound_contextvars(algorithm=config.algorithm, seed=config.seed):
        logger.info("Experiment started", horizon=config.horizon, constraint=config.constraint.family)
        started = time.perf_counter()
        s = _setup(config)
        trace = _run(config, s)

        horizon = len(trace)
        benchmark = compute_benchmark(s.env.sequence, s.constraint, horizon, s.matroid)
        trace.benchmark = benchmark.value
        trace.benchmark_mode = benchmark.mode
        regret = compute_regret(trace, benchmark.value)
        constants = s.env.sequence.constants(max(horizon, 1))
        grad_variance = None
        if config.algorithm == "mono_fw" and horizon:
            first = s.env.sequence.objective(0)
            if isinstance(first, ContinuousObjective):
                grad_variance = empirical_grad_variance(first, s.streams.generator("diagnostics", 0))

        if s.env.queries != horizon:
            raise SubmaxError(f"environment answered {s.env.queries} queries in {horizon} rounds")

        summary = RunSummary(
            algorithm=config.algorithm,
            seed=config.seed,
            rng=s.streams.describe(),
            t_requested=config.horizon,
            t_effective=s.plan.t_effective,
            rounds_executed=horizon,
            truncated=trace.truncated,
            plan=s.plan.to_dict(),
            geometry=_geometry(s),
            constants=constants.to_dict(),
            grad_variance_empirical=grad_variance,
            benchmark=benchmark.to_dict(),
            total_reward=trace.total_reward,
            final_regret=regret.final,
            average_regret=regret.final / horizon if horizon else 0.0,
            regret_bound=theoretical_bound(config, s, constants, horizon) if horizon else None,
            queries=s.env.queries,
            all_feasible=bool(np.all(trace.feasible)),
            exploit_feasible=_exploit_feasible(trace),
            wall_clock_seconds=time.perf_counter() - started,
        )

        if write:
            _write_run(config, trace, summary, resolve_out_dir(config, out_dir))

        logger.info(
            "Experiment finished",
            rounds=horizon, benchmark_mode=benchmark.mode, final_regret=round(regret.final, 6),
            seconds=round(summary.wall_clock_seconds, 3),
        )
        return RunResult(config=config, trace=trace, benchmark=benchmark, summary=summary)


def _write_run(config: ExperimentConfig, trace: RegretTrace, summary: RunSummary, out: Path) -> Dict[str, str]:
    stem = config.output.stem
    files = {
        "trace": str(out / f"{stem}_trace.csv"),
        "summary": str(out / f"{stem}_summary.json"),
    }
    reporting.write_trace_csv(trace, files["trace"])
    if config.output.plot:
        files["plot"] = str(out / f"{stem}_regret.svg")
        reporting.emit_plot([(config.algorithm, trace)], files["plot"])
    summary.files = files
    # machine-dependent, excluded from the file
    reporting.write_json(files["summary"], summary.model_dump(exclude={"wall_clock_seconds"}))
    return files


def run_benchmark_only(config: ExperimentConfig, out_dir: Optional[PathLike] = None,
                       write: bool = True) -> BenchmarkSummary:
    """Benchmark over the plan's effective horizon, without running an algorithm."""
    with structlog.contextvars.bound_contextvars(algorithm=config.algorithm, seed=config.seed):
        s = _setup(config)
        benchmark = compute_benchmark(s.env.sequence, s.constraint, s.plan.t_effective, s.matroid)
        summary = BenchmarkSummary(
            algorithm=config.algorithm,
            seed=config.seed,
            t_effective=s.plan.t_effective,
            plan=s.plan.to_dict(),
            benchmark=benchmark.to_dict(),
            constants=s.env.sequence.constants(s.plan.t_effective).to_dict(),
        )
        if write:
            out = resolve_out_dir(config, out_dir)
            reporting.write_json(out / f"{config.output.stem}_benchmark.json", summary.model_dump())
        return summary


# =============================================================================
# SWEEPS
# =============================================================================

async def run_sweep(configs: Sequence[ExperimentConfig], max_workers: int = 4,
                    out_dir: Optional[PathLike] = None, write: bool = False) -> List[RunResult]:
    """
    Run independent configs concurrently. Each run builds its own streams,
    env and bank, so results do not depend on scheduling. Order follows `configs`.
    """
    if max_workers < 1:
        raise ValueError("max_workers must be at least 1")
    gate = asyncio.Semaphore(max_workers)

    async def one(config: ExperimentConfig) -> RunResult:
        async with gate:
            return await asyncio.to_thread(run_experiment, config, out_dir, write)

    logger.info("Sweep started", runs=len(configs), workers=max_workers)
    results = await asyncio.gather(*(one(c) for c in configs))
    logger.info("Sweep finished", runs=len(results))
    return list(results)


def sweep_label(result: RunResult) -> str:
    return f"{result.config.algorithm} T={result.config.horizon} seed={result.config.seed}"


def emit_sweep_plot(results: Sequence[RunResult], svg_path: PathLike,
                    slope_csv_path: Optional[PathLike] = None) -> List[reporting.SlopeRow]:
    return reporting.emit_plot([(sweep_label(r), r.trace) for r in results], svg_path, slope_csv_path)


def median_by_horizon(results: Sequence[RunResult], metric: Callable[[RunResult], float]) -> Dict[int, float]:
    """Median over seeds of `metric`, keyed by requested horizon."""
    by_horizon: Dict[int, List[float]] = {}
    for r in results:
        by_horizon.setdefault(r.config.horizon, []).append(float(metric(r)))
    return {T: float(np.median(v)) for T, v in sorted(by_horizon.items())}


def median_average_regret(results: Sequence[RunResult]) -> Dict[int, float]:
    """Median over seeds of R_T / T."""
    return median_by_horizon(results, lambda r: r.summary.average_regret)


def shortfall(result: RunResult) -> float:
    """B - total reward: the regret without the (1 - 1/e) factor, an upper bound on R_T."""
    return result.benchmark.value - result.summary.total_reward
