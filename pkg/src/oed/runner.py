"""Dispatch a validated problem to its algorithm and persist the report."""

from __future__ import annotations

from .algorithms import AlgoReport, run_adagpr, run_vdm, run_ybt
from .config import ProblemConfig
from .report import emit_report


def run_problem(config: ProblemConfig, seed: int | None = None) -> AlgoReport:
    """Build the model, run the configured algorithm and return its report."""
    if seed is not None:
        config.seed = seed
    model = config.build_model()
    algo_cfg = config.algo_config()
    if config.algorithm == "vdm":
        return run_vdm(model, config.grid, algo_cfg)
    if config.algorithm == "ybt":
        return run_ybt(model, config.grid, algo_cfg)
    return run_adagpr(model, algo_cfg)


def run_and_emit(config: ProblemConfig, out_dir, seed: int | None = None):
    """Run the problem and write its report files; returns (report, paths)."""
    report = run_problem(config, seed=seed)
    model = config.build_model()
    echo = config.normalized()
    echo.pop("grid", None)  # no need to replay thousands of grid rows
    paths = emit_report(report, out_dir, coord_names=model.coord_names,
                        config_echo=echo)
    return report, paths
