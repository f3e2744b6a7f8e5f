"""
Datenmodelle für FS Complexity.
"""

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np


def _frozen_array(values) -> np.ndarray:
    """Kopiert Werte in ein schreibgeschütztes float64 Array."""
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


def format_timestamp(seconds: float) -> str:
    """Formatiert Epoch-Sekunden als ISO-8601 (UTC) für Ausgabedateien."""
    moment = datetime.fromtimestamp(seconds, tz=timezone.utc)
    if moment.microsecond:
        return moment.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TimeSeries:
    """Zeitgestempelte Messwerte eines Kanals (Windgeschwindigkeit, Temperatur, Druck)."""

    channel_id: str
    timestamps: np.ndarray  # Sekunden seit Epoch (UTC), streng steigend
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        """Prüft die Invarianten und friert die Arrays ein."""
        timestamps = _frozen_array(self.timestamps)
        values = _frozen_array(self.values)

        if timestamps.ndim != 1 or values.ndim != 1:
            raise ValueError("Zeitreihen müssen eindimensional sein")
        if timestamps.size != values.size:
            raise ValueError(
                f"Länge der Zeitstempel ({timestamps.size}) passt nicht zu den Werten ({values.size})"
            )
        if timestamps.size == 0:
            raise ValueError(f"Zeitreihe '{self.channel_id}' ist leer")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"Zeitreihe '{self.channel_id}' enthält nicht-endliche Werte")
        if not np.all(np.isfinite(timestamps)):
            raise ValueError(f"Zeitreihe '{self.channel_id}' enthält ungültige Zeitstempel")
        if np.any(np.diff(timestamps) <= 0):
            raise ValueError(f"Zeitstempel von '{self.channel_id}' sind nicht streng steigend")

        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def start(self) -> float:
        return float(self.timestamps[0])

    @property
    def end(self) -> float:
        return float(self.timestamps[-1])


@dataclass(frozen=True)
class Window:
    """Zusammenhängender Ausschnitt einer Zeitreihe, begrenzt durch Kalenderzeiten."""

    start: float  # inklusive
    end: float  # exklusive
    start_index: int
    stop_index: int  # halb-offen
    insufficient: bool = False

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"Ungültiges Fenster: start {self.start} >= end {self.end}")
        if self.stop_index < self.start_index:
            raise ValueError("Ungültiger Indexbereich im Fenster")

    @property
    def indices(self) -> slice:
        return slice(self.start_index, self.stop_index)

    @property
    def sample_count(self) -> int:
        return self.stop_index - self.start_index

    @property
    def label(self) -> str:
        """Fensterschlüssel für Ausgabedateien und Joins."""
        return format_timestamp(self.start)


@dataclass(frozen=True)
class IngestDiagnostics:
    """Diagnose eines CSV-Imports."""

    rows_total: int
    dropped_nonfinite: int = 0
    dropped_unparseable: int = 0

    @property
    def rows_kept(self) -> int:
        return self.rows_total - self.dropped_nonfinite - self.dropped_unparseable

    @property
    def rows_dropped(self) -> int:
        return self.dropped_nonfinite + self.dropped_unparseable

    def describe(self) -> str:
        """Deterministische Textform für Logs."""
        return (
            f"{self.rows_total} Zeilen gelesen, {self.rows_kept} übernommen, "
            f"{self.dropped_nonfinite} nicht-endlich/fehlend, "
            f"{self.dropped_unparseable} nicht lesbar"
        )


class BandwidthMethod(Enum):
    """Verfahren zur Bandbreitenwahl."""

    SILVERMAN = "silverman"
    PLUGIN = "plugin"
    FIXED = "fixed"


@dataclass(frozen=True)
class Bandwidth:
    """Bandbreite b der Kerndichteschätzung (in Dateneinheiten)."""

    b: float
    method: BandwidthMethod

    def __post_init__(self):
        if not np.isfinite(self.b) or self.b <= 0:
            raise ValueError(f"Bandbreite muss positiv und endlich sein, nicht {self.b}")

    def scaled(self, factor: float) -> "Bandwidth":
        """Bandbreite für mit `factor` skalierte Daten."""
        return Bandwidth(b=self.b * abs(factor), method=self.method)


class EvaluationPath(Enum):
    """Auswertungsweg der Dichte auf dem Gitter."""

    DIRECT = "direct"
    BINNED = "binned"


@dataclass(frozen=True)
class DensityEstimate:
    """Angepasste Gauß-KDE: Stichprobe, Bandbreite, Gitter, Dichte und Ableitung."""

    samples: np.ndarray
    bandwidth: Bandwidth
    grid: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    path: EvaluationPath = EvaluationPath.DIRECT

    def __post_init__(self):
        for name in ("samples", "grid", "f", "f_prime"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))

    @property
    def sample_count(self) -> int:
        return int(self.samples.size)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def mass(self) -> float:
        """Trapez-Integral der Dichte über das Gitter."""
        return float(np.sum(self.f[1:] + self.f[:-1]) * 0.5 * self.spacing)


@dataclass(frozen=True)
class FsMetrics:
    """Fisher-Shannon Kennzahlen eines Fensters."""

    H: float  # Nats
    N: float  # Dateneinheiten²
    I: float  # 1 / Dateneinheiten²
    C: float  # dimensionslos
    bandwidth: Bandwidth
    sample_count: int


class WindowStatus(Enum):
    """Status einer Fensteranalyse."""

    OK = "ok"
    INSUFFICIENT = "insufficient"
    FAILED = "failed"


class AnalysisScope(Enum):
    """Ganze Reihe oder einzelnes Fenster."""

    SERIES = "series"
    WINDOW = "window"


@dataclass
class WindowMetrics:
    """Ergebniszeile der Analyse für ein (Kanal, Fenster) Paar."""

    channel_id: str
    scope: AnalysisScope
    window_start: float
    window_end: float
    sample_count: int
    status: WindowStatus = WindowStatus.OK
    metrics: Optional[FsMetrics] = None
    message: Optional[str] = None

    def as_row(self) -> dict:
        """Zeile für die Metrikdatei."""
        metrics = self.metrics
        return {
            "channel": self.channel_id,
            "scope": self.scope.value,
            "window_start": format_timestamp(self.window_start),
            "window_end": format_timestamp(self.window_end),
            "sample_count": self.sample_count,
            "bandwidth": metrics.bandwidth.b if metrics else None,
            "H": metrics.H if metrics else None,
            "N": metrics.N if metrics else None,
            "I": metrics.I if metrics else None,
            "C": metrics.C if metrics else None,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class SummaryStats:
    """Kennzahlen einer Reihe (Min, Quartile, Mittel, Max)."""

    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float
    count: int


@dataclass(frozen=True)
class WindowMoments:
    """Mittelwert und Stichprobenvarianz eines Fensters."""

    window: Window
    mean: float
    variance: Optional[float] = None  # fehlt bei weniger als 2 Werten


@dataclass(frozen=True)
class DensityTable:
    """Histogramm und KDE an den Klassenmitten (für externe Plots)."""

    bin_centers: np.ndarray
    hist_density: np.ndarray
    kde_density: np.ndarray

    def __len__(self) -> int:
        return int(self.bin_centers.size)


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson-Korrelation und Permutations-p-Wert eines Kanals."""

    channel_id: str
    r: float
    p_value: float
    permutations: int
    seed: int
    n_pairs: int
    exhaustive: bool = False


@dataclass
class CommandResult:
    """Ergebnis eines CLI-Kommandos."""

    output_path: Optional[Path] = None
    failed_channels: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed_channels
