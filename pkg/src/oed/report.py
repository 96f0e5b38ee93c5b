"""Report emission: design table, run summary and objective trace files.

The design table lists the clustered support (original units, one row per
point); the summary reports the objective as log10(det M) for the D family,
matching the usual table convention, alongside the raw criterion value.
Numeric formatting is fixed so identical runs emit byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .algorithms import AlgoReport
from .designs import Criterion
from .exceptions import InvalidInputError

_FMT = "%.12g"


def summary_objective(report: AlgoReport) -> float:
    """Headline objective: log10 det M for D/log-D, the criterion value otherwise."""
    if report.criterion in (Criterion.D, Criterion.LOGD):
        sign, logdet = np.linalg.slogdet(report.information_matrix)
        if sign <= 0:
            raise InvalidInputError("information matrix has non-positive determinant")
        return float(logdet / np.log(10.0))
    return float(report.objective)


def emit_report(report: AlgoReport, out_dir, coord_names=None,
                config_echo: dict | None = None) -> dict:
    """Write design.csv, summary.json and trace.csv; returns their paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        design_path = out / "design.csv"
        summary_path = out / "summary.json"
        trace_path = out / "trace.csv"

        design = report.clustered_design
        names = (list(coord_names) if coord_names is not None
                 else [f"x{i + 1}" for i in range(design.d_x)])
        if len(names) != design.d_x:
            raise InvalidInputError(
                f"{len(names)} coordinate names for {design.d_x} dimensions"
            )
        lines = [",".join(names + ["weight"])]
        for point, weight in zip(design.points, design.weights):
            cells = [_FMT % v for v in point] + [_FMT % weight]
            lines.append(",".join(cells))
        design_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

        trace_lines = ["iteration,objective"]
        trace_lines += [f"{i + 1},{_FMT % v}"
                        for i, v in enumerate(report.objective_trace)]
        trace_path.write_text("\n".join(trace_lines) + "\n", encoding="utf-8")

        summary = {
            "criterion": report.criterion.value,
            "objective": summary_objective(report),
            "criterion_value": report.objective,
            "iterations": report.iterations,
            "jacobian_evaluations": report.jacobian_evals,
            "termination": report.termination,
            "n_support": int(design.n_points),
            "timings": report.timings.as_dict(),
            "warnings": list(report.warnings),
        }
        if config_echo is not None:
            summary["problem"] = config_echo
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed writing report under {out}: {exc}") from exc
    return {"design": design_path, "summary": summary_path, "trace": trace_path}
