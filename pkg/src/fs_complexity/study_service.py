"""
Study Service - orchestriert Import, Fensteranalyse, Korrelationen und Ausgaben.

Kommandos:
1. summary - Kennzahlen pro Kanal (min, Quartile, Mittel, max)
2. analyze - FS Komplexität der ganzen Reihe und pro Fenster
3. correlate - Pearson-Korrelation der Fenster-Komplexität mit einer Kovariate
4. moments - Tagesmittel und Tagesvarianz eines Kanals für externe Plots
5. density - Histogramm und KDE eines Kanals für externe Plots
6. synthetic - komplette synthetische Studie erzeugen
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .config import ChannelSettings, ConfigError, KdeSettings, Settings, config_hash
from .fisher_shannon import EstimationError, analyze_samples, analyze_window
from .ingest import IngestError, missing_windows, partition_daily, partition_fixed, read_csv
from .kde import BandwidthError, DensityError, fit, select_bandwidth
from .models import (
    AnalysisScope,
    CommandResult,
    TimeSeries,
    Window,
    WindowMetrics,
    WindowStatus,
    format_timestamp,
)
from .reports import (
    CORRELATION_COLUMNS,
    DENSITY_COLUMNS,
    METRIC_COLUMNS,
    MOMENT_COLUMNS,
    SUMMARY_COLUMNS,
    Provenance,
    read_table,
    write_table,
)
from .stats import (
    QUANTILE_METHOD,
    StatsError,
    daily_moments,
    density_export,
    permutation_test,
    summarize,
)
from .synthetic import CAMPAIGN_DAYS, generate_study

logger = logging.getLogger(__name__)

MOMENTS = ("mean", "variance")
DEFAULT_HISTOGRAM_BINS = 50
MIN_CORRELATION_PAIRS = 3
SUMMARY_QUANTILES = f"{QUANTILE_METHOD} (Hyndman-Fan Typ 7)"
CORRELATION_INPUT_COLUMNS = ("channel", "scope", "window_start", "C")

_ANALYSIS_ERRORS = (EstimationError, BandwidthError, DensityError)


@dataclass(frozen=True)
class AnalysisTask:
    """Eine Einheit der Fensteranalyse (picklebar für den Prozess-Pool)."""

    channel_id: str
    scope: AnalysisScope
    start: float
    end: float
    values: np.ndarray
    kde: KdeSettings
    min_samples: int
    skip: bool = False


def run_analysis_task(task: AnalysisTask) -> WindowMetrics:
    """
    Berechnet die FS Kennzahlen einer Analyseeinheit.

    Fehler werden als Status zurückgegeben, nicht geworfen.
    """
    row = WindowMetrics(
        channel_id=task.channel_id,
        scope=task.scope,
        window_start=task.start,
        window_end=task.end,
        sample_count=int(task.values.size),
    )
    if task.skip:
        row.status = WindowStatus.INSUFFICIENT
        return row

    try:
        if task.scope is AnalysisScope.SERIES:
            row.metrics = analyze_samples(task.values, task.kde)
        else:
            row.metrics = analyze_window(task.values, task.kde, task.min_samples)
    except _ANALYSIS_ERRORS as e:
        row.status = WindowStatus.FAILED
        row.message = str(e)
    return row


class StudyService:
    """Service für die Auswertung einer Messkampagne."""

    def __init__(self, settings: Settings):
        """
        Initialisiert den Study Service.

        Args:
            settings: Konfiguration (bereits mit CLI-Überschreibungen)
        """
        self.settings = settings
        self.config_hash = config_hash(settings)

    def provenance(self, command: str, quantiles: Optional[str] = None) -> Provenance:
        """Herkunftsangaben für eine Ausgabedatei."""
        return Provenance(
            command=command,
            config_hash=self.config_hash,
            bandwidth_method=self.settings.kde.bandwidth_method,
            seed=self.settings.permutation.seed,
            quantiles=quantiles,
        )

    def _output_path(self, output: Optional[Path], default_name: str) -> Path:
        if output is not None:
            return Path(output)
        return self.settings.output_dir / default_name

    def _load_channel(self, channel: ChannelSettings) -> TimeSeries:
        """
        Liest einen Kanal.

        Raises:
            IngestError: Datei fehlt oder ist fehlerhaft
        """
        ingest = channel.ingest_settings(self.settings.ingest)
        series, diagnostics = read_csv(
            channel.path, ingest, channel_id=channel.channel_id, units=channel.units
        )
        logger.info(f"Kanal '{channel.channel_id}': {diagnostics.describe()}")
        return series

    def _partition(self, series: TimeSeries) -> list[Window]:
        """Zerlegt eine Reihe nach der konfigurierten Fensterpolitik."""
        window = self.settings.window
        if window.policy == "daily":
            windows = partition_daily(series, window.utc_offset_seconds, window.min_samples)
        else:
            windows = partition_fixed(
                series, window.window_seconds, window.origin, window.min_samples
            )

        for gap_start, gap_end in missing_windows(windows):
            logger.warning(
                f"Kanal '{series.channel_id}': keine Daten von {format_timestamp(gap_start)} "
                f"bis {format_timestamp(gap_end)}"
            )
        return windows

    def cmd_summary(self, output: Optional[Path] = None) -> CommandResult:
        """
        Kennzahlen aller Kanäle (eine Zeile pro Kanal).

        Returns:
            CommandResult mit Ausgabedatei und fehlgeschlagenen Kanälen
        """
        result = CommandResult()
        rows = []
        for channel in self.settings.channels:
            try:
                series = self._load_channel(channel)
            except IngestError as e:
                logger.error(f"Kanal '{channel.channel_id}' fehlgeschlagen: {e}")
                result.failed_channels.append(channel.channel_id)
                continue

            stats = summarize(series.values)
            rows.append(
                {
                    "channel": channel.channel_id,
                    "min": stats.min,
                    "q1": stats.q1,
                    "median": stats.median,
                    "mean": stats.mean,
                    "q3": stats.q3,
                    "max": stats.max,
                    "count": stats.count,
                }
            )

        result.output_path = write_table(
            self._output_path(output, "summary.csv"),
            SUMMARY_COLUMNS,
            rows,
            self.provenance("summary", quantiles=SUMMARY_QUANTILES),
        )
        return result

    def _analysis_tasks(self, series: TimeSeries) -> list[AnalysisTask]:
        """Ganze Reihe plus ein Task pro Fenster."""
        window_settings = self.settings.window
        kde = self.settings.kde
        min_samples = 1 if window_settings.include_insufficient else window_settings.min_samples

        tasks = [
            AnalysisTask(
                channel_id=series.channel_id,
                scope=AnalysisScope.SERIES,
                start=series.start,
                end=series.end,
                values=series.values,
                kde=kde,
                min_samples=min_samples,
            )
        ]
        for window in self._partition(series):
            tasks.append(
                AnalysisTask(
                    channel_id=series.channel_id,
                    scope=AnalysisScope.WINDOW,
                    start=window.start,
                    end=window.end,
                    values=series.values[window.indices],
                    kde=kde,
                    min_samples=min_samples,
                    skip=window.insufficient and not window_settings.include_insufficient,
                )
            )
        return tasks

    def _run_tasks(self, tasks: list[AnalysisTask]) -> list[WindowMetrics]:
        """Führt die Tasks seriell oder im Prozess-Pool aus (Reihenfolge bleibt erhalten)."""
        workers = self.settings.workers
        if workers <= 1 or len(tasks) <= 1:
            return [run_analysis_task(task) for task in tasks]

        logger.info(f"Starte {len(tasks)} Analysen mit {workers} Prozessen")
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(run_analysis_task, tasks))

    def cmd_analyze(self, output: Optional[Path] = None) -> CommandResult:
        """
        FS Komplexität jedes Kanals: eine Zeile für die ganze Reihe, eine pro Fenster.

        Fehlgeschlagene Fenster erscheinen mit Status 'failed', zu kleine mit
        'insufficient' und leeren Kennzahlen. Ein Kanal gilt als fehlgeschlagen,
        wenn er nicht gelesen werden kann oder die Analyse der ganzen Reihe scheitert.
        """
        result = CommandResult()
        tasks: list[AnalysisTask] = []
        for channel in self.settings.channels:
            try:
                series = self._load_channel(channel)
            except IngestError as e:
                logger.error(f"Kanal '{channel.channel_id}' fehlgeschlagen: {e}")
                result.failed_channels.append(channel.channel_id)
                continue
            channel_tasks = self._analysis_tasks(series)
            logger.info(
                f"Kanal '{channel.channel_id}': {len(channel_tasks) - 1} Fenster"
            )
            tasks.extend(channel_tasks)

        rows = self._run_tasks(tasks)

        for row in rows:
            if row.status is WindowStatus.FAILED:
                logger.warning(
                    f"Analyse fehlgeschlagen ({row.channel_id}, "
                    f"{format_timestamp(row.window_start)}): {row.message}"
                )
                if row.scope is AnalysisScope.SERIES:
                    result.failed_channels.append(row.channel_id)

        ok = sum(1 for r in rows if r.status is WindowStatus.OK)
        logger.info(f"Analysen: {ok} ok, {len(rows) - ok} ohne Ergebnis")

        result.output_path = write_table(
            self._output_path(output, "metrics.csv"),
            METRIC_COLUMNS,
            [row.as_row() for row in rows],
            self.provenance("analyze"),
        )
        return result

    def _covariate_moments(self, covariate_channel: Optional[str], moment: str) -> dict[str, float]:
        """
        Tagesmoment der Kovariate pro Fensterschlüssel.

        Zu kleine Kovariaten-Fenster werden ausgelassen.
        """
        if covariate_channel:
            channel = self.settings.find_channel(covariate_channel)
        elif self.settings.covariate:
            channel = self.settings.covariate
        else:
            raise ConfigError("Keine Kovariate angegeben (--covariate oder 'covariate' in config.yaml)")

        series = self._load_channel(channel)
        windows = [w for w in self._partition(series) if not w.insufficient]
        moments = {}
        for item in daily_moments(series, windows):
            value = item.mean if moment == "mean" else item.variance
            moments[item.window.label] = np.nan if value is None else value
        logger.info(
            f"Kovariate '{channel.channel_id}': {len(moments)} Fenster mit Tages-{moment}"
        )
        return moments

    def cmd_correlate(
        self,
        metric_file: Path,
        covariate_channel: Optional[str] = None,
        moment: str = "variance",
        output: Optional[Path] = None,
    ) -> CommandResult:
        """
        Korreliert die Fenster-Komplexität jedes Kanals mit einem Tagesmoment der Kovariate.

        Args:
            metric_file: Ausgabe von analyze
            covariate_channel: Kanal-ID der Kovariate (Standard: 'covariate' der Konfiguration)
            moment: 'mean' oder 'variance'
            output: Zieldatei (Standard: correlation_<moment>.csv)

        Returns:
            CommandResult

        Raises:
            ConfigError: unbekannter Kanal oder ungültiges Moment
            IngestError: Kovariate nicht lesbar
            ReportError: Metrikdatei fehlt oder ist unvollständig
        """
        if moment not in MOMENTS:
            raise ConfigError(f"Ungültiges Moment '{moment}'. Erlaubt: {MOMENTS}")

        metrics = read_table(metric_file, required=CORRELATION_INPUT_COLUMNS)
        moments = self._covariate_moments(covariate_channel, moment)
        windows = metrics[metrics["scope"] == AnalysisScope.WINDOW.value]

        permutation = self.settings.permutation
        result = CommandResult()
        rows = []
        for channel_id in windows["channel"].drop_duplicates():
            channel_rows = windows[windows["channel"] == channel_id]
            complexity = pd.to_numeric(channel_rows["C"], errors="coerce").to_numpy(
                dtype=np.float64
            )
            covariate = np.array(
                [moments.get(label, np.nan) for label in channel_rows["window_start"]],
                dtype=np.float64,
            )
            n_pairs = int(np.sum(np.isfinite(complexity) & np.isfinite(covariate)))

            row = {
                "channel": channel_id,
                "r": None,
                "p_value": None,
                "R": permutation.permutations,
                "seed": permutation.seed,
                "n_pairs": n_pairs,
                "status": WindowStatus.OK.value,
            }
            if n_pairs < MIN_CORRELATION_PAIRS:
                logger.warning(
                    f"Kanal '{channel_id}': nur {n_pairs} vollständige Paare, keine Korrelation"
                )
                row["status"] = WindowStatus.INSUFFICIENT.value
                rows.append(row)
                continue

            try:
                report = permutation_test(
                    complexity,
                    covariate,
                    permutations=permutation.permutations,
                    seed=permutation.seed,
                    exhaustive=permutation.exhaustive,
                    channel_id=str(channel_id),
                )
            except StatsError as e:
                logger.error(f"Korrelation für '{channel_id}' fehlgeschlagen: {e}")
                row["status"] = WindowStatus.FAILED.value
                result.failed_channels.append(str(channel_id))
                rows.append(row)
                continue

            row.update(r=report.r, p_value=report.p_value, R=report.permutations)
            logger.info(
                f"Kanal '{channel_id}': r={report.r:.3f}, p={report.p_value:.3g} "
                f"({report.n_pairs} Paare)"
            )
            rows.append(row)

        result.output_path = write_table(
            self._output_path(output, f"correlation_{moment}.csv"),
            CORRELATION_COLUMNS,
            rows,
            self.provenance("correlate"),
        )
        return result

    def cmd_moments(self, channel_id: str, output: Optional[Path] = None) -> CommandResult:
        """
        Tagesmittel und Tagesvarianz eines Kanals als Tabelle für externe Plots.

        Zu kleine Fenster erscheinen mit Status 'insufficient', ihre Momente
        werden trotzdem ausgegeben.

        Args:
            channel_id: Kanal-ID (Analysekanal oder Kovariate)
            output: Zieldatei (Standard: moments_<kanal>.csv)

        Raises:
            ConfigError: unbekannter Kanal
            IngestError: Kanal nicht lesbar
        """
        channel = self.settings.find_channel(channel_id)
        series = self._load_channel(channel)
        windows = self._partition(series)

        rows = [
            {
                "channel": channel_id,
                "window_start": item.window.label,
                "window_end": format_timestamp(item.window.end),
                "sample_count": item.window.sample_count,
                "mean": item.mean,
                "variance": item.variance,
                "status": (
                    WindowStatus.INSUFFICIENT.value
                    if item.window.insufficient
                    else WindowStatus.OK.value
                ),
            }
            for item in daily_moments(series, windows)
        ]
        logger.info(f"Kanal '{channel_id}': Momente für {len(rows)} Fenster")
        output_path = write_table(
            self._output_path(output, f"moments_{channel_id}.csv"),
            MOMENT_COLUMNS,
            rows,
            self.provenance("moments"),
        )
        return CommandResult(output_path=output_path)

    def cmd_density(
        self,
        channel_id: str,
        bins: int = DEFAULT_HISTOGRAM_BINS,
        output: Optional[Path] = None,
    ) -> CommandResult:
        """
        Histogramm und KDE der ganzen Reihe eines Kanals.

        Raises:
            ConfigError: unbekannter Kanal
            IngestError, BandwidthError, DensityError, StatsError
        """
        channel = self.settings.find_channel(channel_id)
        series = self._load_channel(channel)
        kde = self.settings.kde
        bandwidth = select_bandwidth(series.values, kde.bandwidth_method, kde.fixed_bandwidth)
        estimate = fit(
            series.values,
            bandwidth,
            grid_size=kde.grid_size,
            binned_threshold=kde.binned_threshold,
        )
        table = density_export(estimate, bins)

        rows = [
            {"bin_center": c, "hist_density": h, "kde_density": k}
            for c, h, k in zip(table.bin_centers, table.hist_density, table.kde_density)
        ]
        output_path = write_table(
            self._output_path(output, f"density_{channel_id}.csv"),
            DENSITY_COLUMNS,
            rows,
            self.provenance("density"),
        )
        return CommandResult(output_path=output_path)


def cmd_synthetic(
    output_dir: Path,
    seed: int = 12345,
    days: int = CAMPAIGN_DAYS,
    rate_hz: float = 1.0,
    channels: int = 7,
    min_samples: Optional[int] = None,
    kind: Optional[str] = None,
) -> CommandResult:
    """Erzeugt eine synthetische Studie (Kanäle, Kovariaten, config.yaml)."""
    config_path = generate_study(
        output_dir,
        seed=seed,
        days=days,
        rate_hz=rate_hz,
        channels=channels,
        min_samples=min_samples,
        kind=kind,
    )
    return CommandResult(output_path=config_path)
