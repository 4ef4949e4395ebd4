"""
Excel Report — per-seed summary spreadsheet for multi-trial runs.
"""

import logging
from pathlib import Path
from typing import Dict, List

import pandas as pd

logger = logging.getLogger(__name__)

COLUMNS = [
    "Seed",
    "Pass",
    "Mismatched",
    "Measurements",
    "SwitchEvents",
    "Pulses",
    "Ancillas",
    "FeedForward",
    "TagViolations",
    "Report",
]


def save_trials_to_excel(trials: List[Dict], output_path: Path) -> None:
    """
    Save one row per trial, ordered by seed.

    Each trial dict carries the serialised RunReport under "report" and the
    JSON path it was written to under "path".
    """
    if not trials:
        logger.warning("No trials to save to Excel.")
        return

    logger.info("Saving %d trials to Excel: %s", len(trials), output_path)

    data = []
    for trial in sorted(trials, key=lambda t: t["report"]["seed"]):
        report = trial["report"]
        resources = report.get("resources", {})
        data.append({
            "Seed": report["seed"],
            "Pass": report.get("pass", False),
            "Mismatched": len(report.get("mismatched_generators", [])),
            "Measurements": resources.get("measurement_count", 0),
            "SwitchEvents": resources.get("switch_event_count", 0),
            "Pulses": resources.get("pulse_count", 0),
            "Ancillas": resources.get("ancilla_count", 0),
            "FeedForward": resources.get("feed_forward_count", 0),
            "TagViolations": resources.get("tag_violations", 0),
            "Report": str(trial.get("path", "")),
        })

    df = pd.DataFrame(data)[COLUMNS]

    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    if output_path.exists():
        logger.info("Existing summary found. Overwriting: %s", output_path)

    try:
        df.to_excel(output_path, index=False, engine="openpyxl")
        logger.info("Trial summary generated successfully.")
    except Exception as exc:
        logger.error("Failed to save trial summary: %s", exc)
        raise


def load_trials_from_excel(input_path: Path) -> pd.DataFrame:
    """Read a trial summary back; an empty frame when the file is missing."""
    input_path = Path(input_path)
    if not input_path.exists():
        logger.warning("Trial summary not found: %s", input_path)
        return pd.DataFrame(columns=COLUMNS)
    return pd.read_excel(input_path, engine="openpyxl")
