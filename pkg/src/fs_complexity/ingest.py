"""
Import von Zeitreihen aus CSV-Dateien und Zerlegung in Kalenderfenster.
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .config import IngestSettings
from .models import IngestDiagnostics, TimeSeries, Window

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
DEFAULT_MIN_SAMPLES = 1000

# Tokens, die als fehlender oder nicht-endlicher Wert gelten (nicht als Lesefehler)
_NONFINITE_TOKENS = {
    "", "nan", "-nan", "na", "n/a", "null", "none",
    "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity",
}


class IngestError(Exception):
    """Fehler beim Import einer Zeitreihe."""
    pass


def _parse_timestamps(raw: pd.Series, timestamp_format: str) -> np.ndarray:
    """
    Wandelt Zeitstempel-Texte in Epoch-Sekunden um.

    Args:
        raw: Zeitstempel als Text
        timestamp_format: 'epoch' oder 'iso8601'

    Returns:
        float64 Array, NaN für nicht lesbare Einträge
    """
    if timestamp_format == "epoch":
        return pd.to_numeric(raw.str.strip(), errors="coerce").to_numpy(dtype=np.float64)

    # Zeitstempel ohne Zone werden als UTC interpretiert
    parsed = pd.to_datetime(raw.str.strip(), utc=True, format="ISO8601", errors="coerce")
    seconds = (parsed - pd.Timestamp("1970-01-01", tz="UTC")) / pd.Timedelta(seconds=1)
    return seconds.to_numpy(dtype=np.float64, na_value=np.nan)


def read_csv(
    path: Path,
    settings: IngestSettings,
    channel_id: Optional[str] = None,
    units: str = "",
) -> tuple[TimeSeries, IngestDiagnostics]:
    """
    Liest eine Zeitreihe aus einer CSV-Datei.

    Zeilen mit fehlenden oder nicht-endlichen Werten werden verworfen und gezählt.
    Nicht lesbare Zeilen werden bis zur konfigurierten Toleranz ebenfalls verworfen.

    Args:
        path: Pfad zur CSV-Datei (UTF-8, mit Kopfzeile)
        settings: Spalten, Trenner, Zeitstempelformat, Toleranz
        channel_id: Kanal-ID (Standard: Dateiname ohne Endung)
        units: Einheit der Werte (nur Metadaten)

    Returns:
        Tuple (Zeitreihe, Diagnose)

    Raises:
        IngestError: Datei nicht lesbar, zu viele fehlerhafte Zeilen,
            nicht steigende Zeitstempel oder leeres Ergebnis
    """
    path = Path(path)
    channel_id = channel_id or path.stem

    try:
        frame = pd.read_csv(
            path,
            sep=settings.delimiter,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
        )
    except FileNotFoundError:
        raise IngestError(f"Datei nicht gefunden: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestError(f"Datei {path} nicht lesbar: {e}")

    for column in (settings.timestamp_column, settings.value_column):
        if column not in frame.columns:
            raise IngestError(
                f"Spalte '{column}' fehlt in {path} (vorhanden: {list(frame.columns)})"
            )

    rows_total = len(frame)
    if rows_total == 0:
        raise IngestError(f"Keine Datenzeilen in {path}")

    timestamps = _parse_timestamps(frame[settings.timestamp_column], settings.timestamp_format)

    raw_values = frame[settings.value_column].str.strip()
    values = pd.to_numeric(raw_values, errors="coerce").to_numpy(dtype=np.float64)
    is_token = raw_values.str.lower().isin(_NONFINITE_TOKENS).to_numpy()

    unparseable = np.isnan(timestamps) | (np.isnan(values) & ~is_token)
    nonfinite = ~unparseable & ~np.isfinite(values)

    n_unparseable = int(unparseable.sum())
    if n_unparseable / rows_total > settings.unparseable_tolerance:
        first_bad = int(np.flatnonzero(unparseable)[0]) + 2  # Kopfzeile + 1-basiert
        raise IngestError(
            f"{n_unparseable} von {rows_total} Zeilen in {path} nicht lesbar "
            f"(Toleranz {settings.unparseable_tolerance:.2%}, erste fehlerhafte Zeile {first_bad})"
        )

    diagnostics = IngestDiagnostics(
        rows_total=rows_total,
        dropped_nonfinite=int(nonfinite.sum()),
        dropped_unparseable=n_unparseable,
    )

    keep = ~(unparseable | nonfinite)
    timestamps = timestamps[keep]
    values = values[keep]

    if timestamps.size == 0:
        raise IngestError(f"Nach der Bereinigung keine Werte in {path}")

    steps = np.diff(timestamps)
    if np.any(steps <= 0):
        position = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise IngestError(
            f"Zeitstempel in {path} nicht streng steigend "
            f"(bereinigte Zeile {position + 1}: {timestamps[position]!r})"
        )

    if diagnostics.rows_dropped:
        logger.warning(f"Kanal '{channel_id}': {diagnostics.describe()}")
    else:
        logger.debug(f"Kanal '{channel_id}': {diagnostics.describe()}")

    series = TimeSeries(channel_id=channel_id, timestamps=timestamps, values=values, units=units)
    return series, diagnostics


def partition_windows(
    series: TimeSeries,
    window_seconds: float,
    offset_seconds: float = 0.0,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> list[Window]:
    """
    Zerlegt eine Zeitreihe in Fenster fester Länge auf einem verschobenen Raster.

    Ein Wert mit Zeitstempel t gehört zum Fenster floor((t + offset) / window_seconds).
    Fenster ohne Werte (Lücken) werden nicht erzeugt.

    Args:
        series: Zeitreihe
        window_seconds: Fensterlänge in Sekunden
        offset_seconds: Versatz des Rasters (z.B. UTC-Versatz der Ortszeit)
        min_samples: Fenster mit weniger Werten werden als 'insufficient' markiert

    Returns:
        Liste der Fenster in zeitlicher Reihenfolge
    """
    if len(series) == 0:
        raise IngestError("Leere Zeitreihe kann nicht zerlegt werden")
    if window_seconds <= 0:
        raise IngestError("Fensterlänge muss positiv sein")

    keys = np.floor((series.timestamps + offset_seconds) / window_seconds).astype(np.int64)
    boundaries = np.flatnonzero(np.diff(keys)) + 1
    starts = np.concatenate(([0], boundaries))
    stops = np.concatenate((boundaries, [keys.size]))

    windows = []
    for start, stop in zip(starts, stops):
        window_start = float(keys[start]) * window_seconds - offset_seconds
        count = int(stop - start)
        windows.append(
            Window(
                start=window_start,
                end=window_start + window_seconds,
                start_index=int(start),
                stop_index=int(stop),
                insufficient=count < min_samples,
            )
        )

    flagged = sum(1 for w in windows if w.insufficient)
    if flagged:
        logger.info(
            f"Kanal '{series.channel_id}': {flagged} von {len(windows)} Fenster(n) "
            f"mit weniger als {min_samples} Werten"
        )
    return windows


def partition_daily(
    series: TimeSeries,
    timezone_offset: float = 0.0,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> list[Window]:
    """
    Zerlegt eine Zeitreihe in Kalendertage [00:00, 24:00) der verschobenen Uhr.

    Args:
        series: Zeitreihe
        timezone_offset: Fester UTC-Versatz in Sekunden (z.B. 3600 für MEZ)
        min_samples: Mindestanzahl Werte pro Tag

    Returns:
        Ein Fenster pro Tag mit Werten
    """
    return partition_windows(series, SECONDS_PER_DAY, timezone_offset, min_samples)


def partition_fixed(
    series: TimeSeries,
    window_seconds: float,
    origin: float = 0.0,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> list[Window]:
    """Fenster fester Länge, ausgerichtet an `origin` (Epoch-Sekunden)."""
    return partition_windows(series, window_seconds, -origin, min_samples)


def window_values(series: TimeSeries, window: Window) -> np.ndarray:
    """Werte eines Fensters."""
    return series.values[window.indices]


def missing_windows(windows: list[Window]) -> list[tuple[float, float]]:
    """
    Findet Lücken im Fensterraster (z.B. Tage ohne Daten).

    Returns:
        Liste (start, end) der fehlenden Bereiche
    """
    gaps = []
    for previous, current in zip(windows, windows[1:]):
        if current.start > previous.end:
            gaps.append((previous.end, current.start))
    return gaps
