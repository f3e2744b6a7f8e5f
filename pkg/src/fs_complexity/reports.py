"""
Ausgabedateien (CSV) mit Herkunftsangaben.

Jede Datei beginnt mit '#'-Zeilen (Version, Konfigurations-Hash,
Bandbreitenverfahren, Seed), danach folgt die Kopfzeile. Gleitkommazahlen
werden mit 6 signifikanten Stellen geschrieben.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import pandas as pd

from . import __version__

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6g"
TOOL_NAME = "fs-complexity"

SUMMARY_COLUMNS = ["channel", "min", "q1", "median", "mean", "q3", "max", "count"]
METRIC_COLUMNS = [
    "channel", "scope", "window_start", "window_end", "sample_count",
    "bandwidth", "H", "N", "I", "C", "status",
]
CORRELATION_COLUMNS = ["channel", "r", "p_value", "R", "seed", "n_pairs", "status"]
DENSITY_COLUMNS = ["bin_center", "hist_density", "kde_density"]
MOMENT_COLUMNS = ["channel", "window_start", "window_end", "sample_count", "mean", "variance", "status"]


class ReportError(Exception):
    """Fehler beim Lesen einer Ausgabedatei."""
    pass


@dataclass(frozen=True)
class Provenance:
    """Herkunftsangaben einer Ausgabedatei."""

    command: str
    config_hash: str
    bandwidth_method: str
    seed: Optional[int] = None
    quantiles: Optional[str] = None

    def lines(self) -> list[str]:
        entries = [
            ("tool", f"{TOOL_NAME} {__version__}"),
            ("command", self.command),
            ("config_hash", self.config_hash),
            ("bandwidth_method", self.bandwidth_method),
            ("seed", "" if self.seed is None else str(self.seed)),
        ]
        if self.quantiles:
            entries.append(("quantiles", self.quantiles))
        return [f"# {key}: {value}" for key, value in entries]


def write_table(
    path: Path,
    columns: list[str],
    rows: Iterable[dict],
    provenance: Provenance,
) -> Path:
    """
    Schreibt eine Tabelle als CSV mit Herkunftsangaben.

    Args:
        path: Zieldatei
        columns: Spaltenreihenfolge
        rows: Zeilen als Dicts
        provenance: Herkunftsangaben

    Returns:
        Pfad der geschriebenen Datei
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=columns)

    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in provenance.lines():
            f.write(line + "\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")

    logger.info(f"Geschrieben: {path} ({len(frame)} Zeilen)")
    return path


def read_table(path: Path, required: Iterable[str] = ()) -> pd.DataFrame:
    """
    Liest eine mit write_table geschriebene Datei (ohne Herkunftszeilen).

    Args:
        path: Quelldatei
        required: Spalten, die vorhanden sein müssen

    Raises:
        ReportError: Datei fehlt, ist nicht lesbar oder Spalten fehlen
    """
    try:
        frame = pd.read_csv(path, comment="#", keep_default_na=True)
    except FileNotFoundError:
        raise ReportError(f"Datei nicht gefunden: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ReportError(f"Datei {path} nicht lesbar: {e}")

    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ReportError(
            f"Spalten {missing} fehlen in {path} (vorhanden: {list(frame.columns)})"
        )
    return frame
