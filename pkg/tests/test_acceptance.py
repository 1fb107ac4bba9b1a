"""End-to-end acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are also collected into the
pytest terminal summary.
"""

import subprocess
import sys
import time

import pytest

from fraccache import validation


def _report(report, number, result):
    line = f"criterion {number} {result.line()}"
    print(line)
    report.append(line)
    assert result.passed, line


def test_criterion_1_oracle_optimality(acceptance_report):
    _report(acceptance_report, 1, validation.check_oracle_optimality())


def test_criterion_2_analytic_vs_simulation(acceptance_report):
    _report(acceptance_report, 2, validation.check_analytic_vs_simulation())


def test_criterion_3_derivative_identities(acceptance_report):
    _report(acceptance_report, 3, validation.check_derivative_identities())


def test_criterion_4_gamma_closed_form(acceptance_report):
    _report(acceptance_report, 4, validation.check_gamma_closed_form())


def test_criterion_5_water_level(acceptance_report):
    _report(acceptance_report, 5, validation.check_water_level())


def test_criterion_6_qualitative_trends(acceptance_report):
    _report(acceptance_report, 6, validation.check_trends())


def _run_cli(config, out):
    subprocess.run(
        [sys.executable, "-m", "fraccache", "quality-sweep", "--config", str(config), "--out", str(out),
         "--seed", "17", "--trials", "20000", "--format", "csv"],
        check=True,
        capture_output=True,
    )
    return (out / "quality_sweep.csv").read_bytes()


def test_criterion_7_determinism(acceptance_report, tmp_path):
    config = tmp_path / "config.json"
    config.write_text('{"sweep": {"values": [15, 25]}, "channel": {"r0_m": 1.75}}\n')
    t0 = time.perf_counter()
    first = _run_cli(config, tmp_path / "a")
    second = _run_cli(config, tmp_path / "b")
    identical = first == second
    result = validation.CheckResult(
        "determinism",
        identical and len(first) > 0,
        f"two CLI runs, {len(first)} bytes each, byte-identical={identical}",
        time.perf_counter() - t0,
    )
    _report(acceptance_report, 7, result)
