"""Sweeps over SNR or mean distance, emitted as flat tables.

Every table row has the same columns (see ``COLUMNS``); fields that do not
apply to an experiment are left empty.  Floats are written with ``repr`` so
re-reading a CSV reproduces the in-memory table exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .monte_carlo import simulate_quality
from .policy_optimizer import baseline_whole_content, waterfill
from .quality_analytics import objective

__all__ = [
    "COLUMNS",
    "NumericalFailure",
    "ExperimentResult",
    "run_alpha_profile",
    "run_quality_sweep",
    "write_result",
    "read_csv",
]

COLUMNS = (
    "experiment",
    "sweep_value",
    "content_index",
    "alpha",
    "policy_name",
    "opt_dist",
    "eval_dist",
    "analytic_objective",
    "mc_mean",
    "mc_stderr",
    "n_trials",
    "seed",
)
_INT_COLUMNS = {"content_index", "n_trials", "seed"}
_FLOAT_COLUMNS = {"sweep_value", "alpha", "analytic_objective", "mc_mean", "mc_stderr"}
QUALITY_SWEEP_KINDS = ("fixed", "uniform", "poisson")


class NumericalFailure(RuntimeError):
    """A solver or integral produced a non-finite or unconverged result."""


@dataclass
class ExperimentResult:
    experiment: str
    sweep_axis: str
    sweep_values: tuple
    rows: list = field(default_factory=list)

    def column(self, name, **match):
        return [row[name] for row in self.rows if all(row[k] == v for k, v in match.items())]

    def alpha_matrix(self):
        """Content-by-sweep-value matrix of cached fractions (alpha profiles only)."""
        values = list(self.sweep_values)
        n = max(row["content_index"] for row in self.rows)
        out = np.zeros((n, len(values)))
        for row in self.rows:
            out[row["content_index"] - 1, values.index(row["sweep_value"])] = row["alpha"]
        return out

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "sweep_axis": self.sweep_axis,
            "sweep_values": list(self.sweep_values),
            "columns": list(COLUMNS),
            "rows": self.rows,
        }


def _row(**values):
    row = dict.fromkeys(COLUMNS)
    row.update(values)
    return row


def _finite(value, what):
    if not math.isfinite(value):
        raise NumericalFailure(f"{what} is not finite")
    return value


def _solve(lib, params, dist, what):
    policy = waterfill(lib, params, dist)
    if not np.all(np.isfinite(policy.x)):
        raise NumericalFailure(f"water-filling for {what} produced non-finite allocations")
    return policy


def run_alpha_profile(config):
    """Optimal cached fraction of every content at each sweep value.

    Solves under the configured distance kind.  Rows are ordered by sweep
    value, then by content index (1-based, in the library's input order).
    """
    kind = config.distance.kind
    result = ExperimentResult("alpha_profile", config.sweep.axis, tuple(config.sweep.values))
    for value in config.sweep.values:
        lib, params, mean = config.point(value)
        dist = config.distance.build(kind, mean)
        policy = _solve(lib, params, dist, f"{config.sweep.axis}={value:g}")
        obj = _finite(objective(policy, dist, lib, params), "objective")
        alpha = lib.to_original_order(policy.alpha)
        for i, a in enumerate(alpha):
            result.rows.append(
                _row(
                    experiment="alpha_profile",
                    sweep_value=float(value),
                    content_index=i + 1,
                    alpha=float(a),
                    policy_name=policy.name,
                    opt_dist=kind,
                    eval_dist=kind,
                    analytic_objective=obj,
                )
            )
    return result


def run_quality_sweep(config, kinds=QUALITY_SWEEP_KINDS):
    """Expected quality of the fractional and whole-content policies.

    For each sweep value, each policy is optimized for every distance kind in
    ``kinds`` and evaluated, analytically and by simulation, under every kind
    (the A-B cross evaluation).  All laws share the sweep point's mean
    distance.  Every simulation uses the configured seed, so compared policies
    see common random numbers.
    """
    n_trials, seed = config.sim.n_trials, config.sim.seed
    result = ExperimentResult("quality_sweep", config.sweep.axis, tuple(config.sweep.values))
    for value in config.sweep.values:
        lib, params, mean = config.point(value)
        dists = {k: config.distance.build(k, mean) for k in kinds}
        for opt_kind in kinds:
            opt_dist = dists[opt_kind]
            policies = (
                _solve(lib, params, opt_dist, f"{opt_kind} at {config.sweep.axis}={value:g}"),
                baseline_whole_content(lib, params, opt_dist),
            )
            for policy in policies:
                for eval_kind in kinds:
                    eval_dist = dists[eval_kind]
                    obj = _finite(objective(policy, eval_dist, lib, params), "objective")
                    est = simulate_quality(policy, eval_dist, lib, params, n_trials, seed)
                    result.rows.append(
                        _row(
                            experiment="quality_sweep",
                            sweep_value=float(value),
                            policy_name=policy.name,
                            opt_dist=opt_kind,
                            eval_dist=eval_kind,
                            analytic_objective=obj,
                            mc_mean=est.mean,
                            mc_stderr=est.std_error,
                            n_trials=est.n_trials,
                            seed=est.seed,
                        )
                    )
    return result


def _format(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name, text):
    if text == "":
        return None
    if name in _INT_COLUMNS:
        return int(text)
    if name in _FLOAT_COLUMNS:
        return float(text)
    return text


def write_csv(result, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in result.rows:
            writer.writerow([_format(row[c]) for c in COLUMNS])
    return path


def write_json(result, path):
    path = Path(path)
    path.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    return path


def write_result(result, directory, formats=("csv",)):
    """Write ``<experiment>.csv`` and/or ``<experiment>.json`` under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for fmt in formats:
        target = directory / f"{result.experiment}.{fmt}"
        paths.append(write_csv(result, target) if fmt == "csv" else write_json(result, target))
    return paths


def read_csv(path, sweep_axis=""):
    """Load a table written by :func:`write_csv`."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = [{c: _parse(c, v) for c, v in zip(COLUMNS, line)} for line in reader]
    experiment = rows[0]["experiment"] if rows else ""
    values = tuple(dict.fromkeys(r["sweep_value"] for r in rows))
    return ExperimentResult(experiment, sweep_axis, values, rows)
