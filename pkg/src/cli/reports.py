"""
Report Persistence Module

This module writes the artifacts of one CLI run: report.json (versioned,
with the timestamp isolated in a metadata block), one CSV per table with a
fixed column order, a report.xlsx workbook with a highlighted `checks`
sheet, and one ledger row per run in `<outdir>/runs.xlsx`.
"""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from openpyxl import Workbook, load_workbook
from openpyxl.worksheet.worksheet import Worksheet

SCHEMA_VERSION = "1.0"

RELATIONS = ("<=", ">=")

LEDGER_SHEET = "runs"
LEDGER_COLUMNS = ["timestamp", "command", "experiment_id", "seed", "passed", "checks", "failed", "failed_checks",
                  "report"]

# Excel limits sheet titles to 31 characters
MAX_SHEET_NAME = 31

FAIL_FORMAT = {"bg_color": "#FFC7CE", "font_color": "#9C0006"}


@dataclass
class Check:
    """One numeric assertion: the measured value, its tolerance and the outcome."""

    name: str
    measured: float
    tolerance: float
    relation: str = "<="
    passed: bool = False

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"Unknown relation: {self.relation}. Available relations: {list(RELATIONS)}")
        measured = float(self.measured)
        self.measured = measured
        self.tolerance = float(self.tolerance)
        if math.isnan(measured):
            self.passed = False
        elif self.relation == "<=":
            self.passed = measured <= self.tolerance
        else:
            self.passed = measured >= self.tolerance


def make_check(name: str, measured: float, tolerance: float, relation: str = "<=") -> Check:
    check = Check(name, measured, tolerance, relation)
    level = logging.INFO if check.passed else logging.WARNING
    logging.log(level, f"Check {name}: {check.measured:.6g} {relation} {check.tolerance:.6g} "
                       f"-> {'pass' if check.passed else 'FAIL'}")
    return check


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, tuples and non-finite floats into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return {"real": to_jsonable(value.real), "imag": to_jsonable(value.imag)}
    return value


def _excel_safe(frame: pd.DataFrame) -> pd.DataFrame:
    """Stringify cells that Excel cannot hold (lists, dicts)."""
    frame = frame.copy()
    for column in frame.columns:
        if frame[column].dtype == object and frame[column].map(lambda v: isinstance(v, (list, tuple, dict))).any():
            frame[column] = frame[column].map(lambda v: json.dumps(to_jsonable(v)) if isinstance(v, (list, tuple, dict)) else v)
    return frame


def sheet_name(name: str, used: List[str]) -> str:
    base = name[:MAX_SHEET_NAME]
    candidate, n = base, 1
    while candidate in used:
        suffix = f"_{n}"
        candidate = base[:MAX_SHEET_NAME - len(suffix)] + suffix
        n += 1
    used.append(candidate)
    return candidate


def checks_frame(checks: List[Check]) -> pd.DataFrame:
    return pd.DataFrame([asdict(c) for c in checks], columns=["name", "measured", "tolerance", "relation", "passed"])


def write_workbook(path: str, checks: List[Check], tables: Dict[str, pd.DataFrame]) -> None:
    """
    Write report.xlsx: a `checks` sheet (failing rows highlighted) and one sheet per table.

    Args:
        path (str): Destination .xlsx path
        checks (List[Check]): Checks of the run
        tables (Dict[str, pd.DataFrame]): Named tables
    """
    frame = checks_frame(checks)
    used: List[str] = []
    with pd.ExcelWriter(path, engine="xlsxwriter") as writer:
        frame.to_excel(writer, sheet_name=sheet_name("checks", used), index=False)
        workbook = writer.book
        worksheet = writer.sheets["checks"]
        fail_format = workbook.add_format(FAIL_FORMAT)
        if len(frame):
            passed_column = chr(ord("A") + list(frame.columns).index("passed"))
            worksheet.conditional_format(1, 0, len(frame), len(frame.columns) - 1, {
                "type": "formula",
                "criteria": f"=${passed_column}2=FALSE",
                "format": fail_format,
            })
        worksheet.set_column(0, 0, 40)
        for name, table in tables.items():
            _excel_safe(table).to_excel(writer, sheet_name=sheet_name(name, used), index=False)


def find_or_create_ledger_sheet(workbook: Workbook) -> Worksheet:
    """
    Find the run ledger sheet or create it with its header row.

    Args:
        workbook (Workbook): The ledger workbook

    Returns:
        Worksheet: The ledger worksheet
    """
    if LEDGER_SHEET in workbook.sheetnames:
        logging.info(f"Found existing ledger sheet: {LEDGER_SHEET}")
        return workbook[LEDGER_SHEET]
    worksheet = workbook.create_sheet(title=LEDGER_SHEET)
    worksheet.append(LEDGER_COLUMNS)
    # A fresh Workbook carries an empty default sheet
    for name in list(workbook.sheetnames):
        if name != LEDGER_SHEET and workbook[name].max_row == 1 and workbook[name]["A1"].value is None:
            del workbook[name]
    logging.info(f"Created ledger sheet: {LEDGER_SHEET}")
    return worksheet


def append_run_ledger(outdir: str, record: Dict[str, Any]) -> str:
    """
    Append one row per run to `<outdir>/runs.xlsx`.

    Args:
        outdir (str): Output root
        record (Dict[str, Any]): Values keyed by LEDGER_COLUMNS

    Returns:
        str: Path of the ledger workbook
    """
    path = os.path.join(outdir, "runs.xlsx")
    try:
        workbook = load_workbook(path) if os.path.exists(path) else Workbook()
        worksheet = find_or_create_ledger_sheet(workbook)
        worksheet.append([record.get(column) for column in LEDGER_COLUMNS])
        workbook.save(path)
        logging.info(f"Appended run to ledger {path}")
        return path
    except Exception as e:
        logging.error(f"Error updating run ledger {path}: {str(e)}")
        raise


def build_report(command: str, config: Dict[str, Any], checks: List[Check], summary: Dict[str, Any],
                 tables: Dict[str, pd.DataFrame], error: Optional[str] = None) -> Dict[str, Any]:
    """Assemble the deterministic part of report.json (everything except the metadata block)."""
    failed = [c.name for c in checks if not c.passed]
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "experiment_id": config.get("experiment_id"),
        "seed": config.get("seed"),
        "config": to_jsonable(config),
        "passed": not failed and error is None,
        "failed_checks": failed,
        "error": error,
        "checks": [to_jsonable(asdict(c)) for c in checks],
        "summary": to_jsonable(summary),
        "tables": {name: f"{name}.csv" for name in tables},
    }


def write_run(outdir: str, command: str, config: Dict[str, Any], checks: List[Check], summary: Dict[str, Any],
              tables: Dict[str, pd.DataFrame], error: Optional[str] = None,
              timestamp: Optional[str] = None) -> Dict[str, Any]:
    """
    Write every artifact of one run under `<outdir>/<command>/<experiment-id>/`.

    Args:
        outdir (str): Output root
        command (str): CLI command name
        config (Dict[str, Any]): Merged configuration
        checks (List[Check]): Checks of the run
        summary (Dict[str, Any]): Command summary
        tables (Dict[str, pd.DataFrame]): Named tables, written as CSV in column order
        error (str, optional): Error message when the command aborted
        timestamp (str, optional): Run timestamp (defaults to now)

    Returns:
        Dict[str, Any]: The report as written
    """
    run_dir = os.path.join(outdir, command, str(config.get("experiment_id")))
    try:
        os.makedirs(run_dir, exist_ok=True)
        report = build_report(command, config, checks, summary, tables, error)
        timestamp = timestamp or datetime.now().isoformat(timespec="seconds")
        report["metadata"] = {"timestamp": timestamp}
        for name, table in tables.items():
            table.to_csv(os.path.join(run_dir, f"{name}.csv"), index=False, float_format="%.12g")
        with open(os.path.join(run_dir, "report.json"), "w", encoding="utf-8") as handle:
            json.dump(report, handle, indent=2, sort_keys=True)
            handle.write("\n")
        write_workbook(os.path.join(run_dir, "report.xlsx"), checks, tables)
        append_run_ledger(outdir, {
            "timestamp": timestamp,
            "command": command,
            "experiment_id": report["experiment_id"],
            "seed": report["seed"],
            "passed": report["passed"],
            "checks": len(checks),
            "failed": len(report["failed_checks"]),
            "failed_checks": ", ".join(report["failed_checks"]),
            "report": os.path.join(run_dir, "report.json"),
        })
    except Exception as e:
        logging.error(f"Error writing run artifacts to {run_dir}: {str(e)}")
        raise
    logging.info(f"Wrote {command} report to {run_dir} ({len(tables)} tables, {len(checks)} checks)")
    return report
