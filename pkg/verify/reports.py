"""Text and CSV reports of checker outcomes, and replayable witness files."""

from pathlib import Path
from typing import Dict, Iterable, List, Union

import pandas as pd

from core.tree_format import save_distribution, save_tree
from verify.checks import CheckReport
from verify.instances import Instance

REPORT_COLUMNS = ["check", "seed", "passed", "hard", "witness"]


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def format_report(report: CheckReport) -> str:
    """One line: status, check name, seed, details and message."""
    status = "PASS" if report.passed else ("FAIL" if report.hard else "FLAG")
    details = " ".join(f"{key}={_format_value(value)}" for key, value in sorted(report.details.items()))
    line = f"{status} {report.check} seed={report.seed} {details}".rstrip()
    if report.message:
        line += f" | {report.message}"
    if report.witness:
        line += f" | witness={report.witness}"
    return line


def write_witness(report: CheckReport, instance: Instance, directory: Union[str, Path]) -> Path:
    """
    Save the target, distribution and (when present) bare tree of a failed check.

    The files replay with `main.py verify --tree bare.json --target target.json --dist dist.json`.
    """
    path = Path(directory) / f"{report.check}_{instance.seed}"
    path.mkdir(parents=True, exist_ok=True)
    save_tree(instance.target, path / "target.json")
    save_distribution(instance.distribution, path / "dist.json")
    if report.bare is not None:
        save_tree(report.bare, path / "bare.json")
    report.witness = str(path)
    return path


def reports_frame(reports: Iterable[CheckReport]) -> pd.DataFrame:
    rows = [
        {"check": r.check, "seed": r.seed, "passed": r.passed, "hard": r.hard, "witness": r.witness or ""}
        for r in reports
    ]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_reports(
    reports: List[CheckReport],
    directory: Union[str, Path],
    summary: Dict[str, str],
) -> None:
    """Write report.txt (line per check, then a summary block) and report.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [format_report(r) for r in reports]
    lines.append("=" * 60)
    lines.extend(f"{key}: {value}" for key, value in summary.items())
    (directory / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    reports_frame(reports).to_csv(directory / "report.csv", index=False)
