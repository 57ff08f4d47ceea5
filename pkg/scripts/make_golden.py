#!/usr/bin/env python3
"""Run the full pipeline over the fixture and freeze the golden outputs.

Intentionally drives the same CLI entry points the acceptance suite uses,
so the goldens under tests/data/golden/ are exactly what a user run
produces. Rerun after changing the fixture or report formats, then review
the diff before committing it.
"""

from __future__ import annotations

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "tests" / "data" / "fixture"
GOLDEN = ROOT / "tests" / "data" / "golden"

sys.path.insert(0, str(ROOT / "src"))

from webcentral.cli import main  # noqa: E402


def run(argv: list[str]) -> None:
    code = main(argv)
    if code != 0:
        raise SystemExit(f"command failed ({code}): {' '.join(argv)}")


def main_() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        records = tmp_path / "records.jsonl"
        stats = tmp_path / "stats.json"
        run(
            [
                "annotate",
                "--toplist", str(FIXTURE / "toplist.csv"),
                "--measurements", str(FIXTURE / "measurements.jsonl"),
                "--pfx2as", str(FIXTURE / "pfx2as.txt"),
                "--as2org", str(FIXTURE / "as2org.tsv"),
                "--geo", str(FIXTURE / "geo.csv"),
                "--anycast", str(FIXTURE / "anycast.txt"),
                "--ca-owners", str(FIXTURE / "ca_owners.csv"),
                "--countries", str(FIXTURE / "countries.csv"),
                "--out", str(records),
                "--stats", str(stats),
            ]
        )
        report_csv = tmp_path / "report"
        run(
            [
                "report",
                "--records", str(records),
                "--countries", str(FIXTURE / "countries.csv"),
                "--stats", str(stats),
                "--out", str(report_csv),
                "--format", "csv",
            ]
        )
        report_json = tmp_path / "report.json"
        run(
            [
                "report",
                "--records", str(records),
                "--countries", str(FIXTURE / "countries.csv"),
                "--stats", str(stats),
                "--out", str(report_json),
                "--format", "json",
            ]
        )
        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        GOLDEN.mkdir(parents=True)
        shutil.copy(records, GOLDEN / "records.jsonl")
        shutil.copy(stats, GOLDEN / "stats.json")
        shutil.copy(report_json, GOLDEN / "report.json")
        shutil.copytree(report_csv, GOLDEN / "report")
    print(f"golden outputs written to {GOLDEN}")


if __name__ == "__main__":
    main_()
