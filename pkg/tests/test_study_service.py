"""
Tests für den Study Service (Ende-zu-Ende auf kleinen synthetischen Studien).
"""

import logging

import numpy as np
import pytest

from fs_complexity.config import ChannelSettings, ConfigError, KdeSettings, load_settings
from fs_complexity.models import AnalysisScope, TimeSeries, WindowStatus
from fs_complexity.reports import MOMENT_COLUMNS, ReportError, read_table
from fs_complexity.study_service import AnalysisTask, StudyService, run_analysis_task
from fs_complexity.synthetic import (
    CAMPAIGN_START,
    SECONDS_PER_DAY,
    generate_channel,
    generate_study,
    write_series_csv,
)


@pytest.fixture
def study(tmp_path):
    """Zwei Kanäle, drei Tage, 4320 Werte pro Tag."""
    config_path = generate_study(tmp_path / "studie", seed=7, days=3, rate_hz=0.05, channels=2)
    return load_settings(config_path)


def with_window(settings, **update):
    """Kopie der Einstellungen mit geänderten Fenster-Werten."""
    return settings.model_copy(update={"window": settings.window.model_copy(update=update)})


class TestRunAnalysisTask:
    """Tests für run_analysis_task."""

    def test_failure_becomes_status(self):
        """Konstante Werte scheitern an der Bandbreite, ohne zu werfen."""
        task = AnalysisTask(
            channel_id="an1",
            scope=AnalysisScope.WINDOW,
            start=0.0,
            end=86400.0,
            values=np.full(2000, 3.0),
            kde=KdeSettings(),
            min_samples=1000,
        )

        row = run_analysis_task(task)

        assert row.status is WindowStatus.FAILED
        assert row.metrics is None
        assert "Varianz" in row.message

    def test_skip(self):
        """Übersprungene Fenster sind 'insufficient'."""
        task = AnalysisTask(
            channel_id="an1",
            scope=AnalysisScope.WINDOW,
            start=0.0,
            end=86400.0,
            values=np.arange(10.0),
            kde=KdeSettings(),
            min_samples=1000,
            skip=True,
        )

        row = run_analysis_task(task)

        assert row.status is WindowStatus.INSUFFICIENT
        assert row.sample_count == 10


class TestSummary:
    """Tests für cmd_summary."""

    def test_one_row_per_channel(self, study):
        """Eine Zeile pro Kanal mit allen Werten."""
        result = StudyService(study).cmd_summary()

        assert result.ok
        frame = read_table(result.output_path)
        assert list(frame["channel"]) == ["an1", "an2"]
        assert list(frame["count"]) == [12_960, 12_960]
        assert (frame["min"] <= frame["median"]).all()

    def test_quantile_convention_in_header(self, study):
        """Die Quartilsdefinition steht in den Herkunftszeilen."""
        path = StudyService(study).cmd_summary().output_path

        lines = path.read_text(encoding="utf-8").splitlines()
        assert "# quantiles: linear (Hyndman-Fan Typ 7)" in lines
        assert lines[6] == "channel,min,q1,median,mean,q3,max,count"

    def test_unreadable_channel(self, study, tmp_path):
        """Nicht lesbarer Kanal: Datei wird trotzdem geschrieben, Kanal gemeldet."""
        channels = study.channels + [ChannelSettings(channel_id="fehlt", path=tmp_path / "fehlt.csv")]
        settings = study.model_copy(update={"channels": channels})

        result = StudyService(settings).cmd_summary()

        assert not result.ok
        assert result.failed_channels == ["fehlt"]
        assert len(read_table(result.output_path)) == 2


class TestAnalyze:
    """Tests für cmd_analyze."""

    def test_rows(self, study):
        """Pro Kanal eine Reihen-Zeile und drei Tageszeilen."""
        result = StudyService(study).cmd_analyze()

        assert result.ok
        assert result.output_path.name == "metrics.csv"
        frame = read_table(result.output_path)
        assert len(frame) == 8
        assert list(frame["scope"]).count("series") == 2
        assert (frame["status"] == "ok").all()
        assert (frame["C"] > 0.9).all()
        days = frame[(frame["channel"] == "an1") & (frame["scope"] == "window")]
        assert list(days["window_start"]) == [
            "2016-12-28T00:00:00Z",
            "2016-12-29T00:00:00Z",
            "2016-12-30T00:00:00Z",
        ]
        assert list(days["sample_count"]) == [4320, 4320, 4320]

    def test_provenance_header(self, study):
        """Die Datei beginnt mit den Herkunftsangaben."""
        service = StudyService(study)
        path = service.cmd_analyze().output_path

        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("# tool: fs-complexity")
        assert f"# config_hash: {service.config_hash}" in lines
        assert "# bandwidth_method: silverman" in lines

    def test_gap_day(self, study, tmp_path, caplog):
        """Ein Tag ohne Daten fehlt in der Ausgabe und wird gemeldet."""
        series = generate_channel("luecke", "gaussian", 3, np.random.default_rng(1), rate_hz=0.05)
        keep = (series.timestamps < CAMPAIGN_START + SECONDS_PER_DAY) | (
            series.timestamps >= CAMPAIGN_START + 2 * SECONDS_PER_DAY
        )
        gap = TimeSeries("luecke", series.timestamps[keep], series.values[keep])
        path = write_series_csv(gap, tmp_path / "luecke.csv")
        settings = study.model_copy(
            update={"channels": [ChannelSettings(channel_id="luecke", path=path)]}
        )

        with caplog.at_level(logging.WARNING):
            frame = read_table(StudyService(settings).cmd_analyze().output_path)

        days = frame[frame["scope"] == "window"]
        assert list(days["window_start"]) == ["2016-12-28T00:00:00Z", "2016-12-30T00:00:00Z"]
        assert "keine Daten von 2016-12-29T00:00:00Z bis 2016-12-30T00:00:00Z" in caplog.text

    def test_insufficient_windows(self, study):
        """Zu kleine Fenster: Status 'insufficient', leere Kennzahlen."""
        settings = with_window(study, min_samples=5000)

        result = StudyService(settings).cmd_analyze()
        frame = read_table(result.output_path)

        assert result.ok
        days = frame[frame["scope"] == "window"]
        assert (days["status"] == "insufficient").all()
        assert days["C"].isna().all()
        assert (frame[frame["scope"] == "series"]["status"] == "ok").all()

    def test_include_insufficient(self, study):
        """include_insufficient wertet zu kleine Fenster trotzdem aus."""
        settings = with_window(study, min_samples=5000, include_insufficient=True)

        frame = read_table(StudyService(settings).cmd_analyze().output_path)

        assert (frame["status"] == "ok").all()
        assert frame["C"].notna().all()

    def test_serial_equals_parallel(self, study, tmp_path):
        """Seriell und mit 2 Prozessen entstehen byte-gleiche Metrik- und Korrelationsdateien."""
        serial_service = StudyService(study)
        parallel_service = StudyService(study.model_copy(update={"workers": 2}))

        serial = serial_service.cmd_analyze(tmp_path / "seriell.csv")
        parallel = parallel_service.cmd_analyze(tmp_path / "parallel.csv")

        assert serial.output_path.read_bytes() == parallel.output_path.read_bytes()

        serial_correlation = serial_service.cmd_correlate(
            serial.output_path, output=tmp_path / "korrelation_seriell.csv"
        )
        parallel_correlation = parallel_service.cmd_correlate(
            parallel.output_path, output=tmp_path / "korrelation_parallel.csv"
        )

        assert (
            serial_correlation.output_path.read_bytes()
            == parallel_correlation.output_path.read_bytes()
        )


class TestCorrelate:
    """Tests für cmd_correlate."""

    def test_rows(self, study):
        """Eine Zeile pro Kanal mit r, p, R, Seed und Paaren."""
        service = StudyService(study)
        metrics = service.cmd_analyze().output_path

        result = service.cmd_correlate(metrics)

        assert result.ok
        assert result.output_path.name == "correlation_variance.csv"
        frame = read_table(result.output_path)
        assert list(frame["channel"]) == ["an1", "an2"]
        assert (frame["n_pairs"] == 3).all()
        assert (frame["R"] == 999).all()
        assert (frame["seed"] == 7).all()
        assert frame["r"].between(-1.0, 1.0).all()
        assert frame["p_value"].between(0.001, 1.0).all()

    def test_mean_moment(self, study):
        """Tagesmittel als Kovariate."""
        service = StudyService(study)
        metrics = service.cmd_analyze().output_path

        result = service.cmd_correlate(metrics, moment="mean")

        assert result.output_path.name == "correlation_mean.csv"

    def test_too_few_pairs(self, study):
        """Ohne vollständige Paare: Status 'insufficient', kein Fehler."""
        service = StudyService(with_window(study, min_samples=5000))
        metrics = service.cmd_analyze().output_path

        result = service.cmd_correlate(metrics)
        frame = read_table(result.output_path)

        assert result.ok
        assert (frame["status"] == "insufficient").all()
        assert frame["r"].isna().all()

    def test_unknown_covariate(self, study):
        """Unbekannte Kovariate ist ein Konfigurationsfehler."""
        service = StudyService(study)
        metrics = service.cmd_analyze().output_path

        with pytest.raises(ConfigError, match="Unbekannter Kanal"):
            service.cmd_correlate(metrics, covariate_channel="druck")

    def test_invalid_moment(self, study, tmp_path):
        """Nur 'mean' und 'variance'."""
        with pytest.raises(ConfigError):
            StudyService(study).cmd_correlate(tmp_path / "metrics.csv", moment="skewness")

    def test_missing_metric_file(self, study, tmp_path):
        """Fehlende Metrikdatei ist ein ReportError."""
        with pytest.raises(ReportError, match="nicht gefunden"):
            StudyService(study).cmd_correlate(tmp_path / "fehlt.csv")

    def test_incomplete_metric_file(self, study, tmp_path):
        """Metrikdatei ohne Spalte C ist ein ReportError."""
        path = tmp_path / "metrics.csv"
        path.write_text(
            "channel,scope,window_start\nan1,window,2016-12-28T00:00:00Z\n", encoding="utf-8"
        )

        with pytest.raises(ReportError, match="fehlen"):
            StudyService(study).cmd_correlate(path)

    def test_pressure_as_covariate(self, study):
        """Weitere Kovariaten werden über die Kanal-ID gewählt."""
        service = StudyService(study)
        metrics = service.cmd_analyze().output_path

        result = service.cmd_correlate(metrics, covariate_channel="pressure", moment="mean")

        frame = read_table(result.output_path)
        assert (frame["n_pairs"] == 3).all()
        assert (frame["status"] == "ok").all()

    @pytest.mark.slow
    def test_campaign_correlation(self, tmp_path):
        """33 Tage: Komplexität des untersten Kanals folgt der Kovariaten-Varianz."""
        settings = load_settings(
            generate_study(tmp_path / "kampagne", seed=12345, days=33, rate_hz=0.25, channels=2)
        )
        service = StudyService(settings)
        metrics = service.cmd_analyze().output_path

        frame = read_table(service.cmd_correlate(metrics).output_path)
        lowest = frame[frame["channel"] == "an1"].iloc[0]

        assert lowest["n_pairs"] == 33
        assert lowest["r"] > 0.9
        assert lowest["p_value"] == pytest.approx(0.001)

    @pytest.mark.slow
    def test_independent_channel(self, tmp_path):
        """Ohne Zusammenhang mit der Kovariate ist p in mindestens 18 von 20 Studien > 0.05."""
        p_values = []
        for trial in range(20):
            settings = load_settings(
                generate_study(
                    tmp_path / f"studie_{trial}",
                    seed=trial,
                    days=33,
                    rate_hz=0.02,
                    channels=1,
                    min_samples=1000,
                    kind="gaussian",
                )
            )
            service = StudyService(settings)
            metrics = service.cmd_analyze().output_path

            frame = read_table(service.cmd_correlate(metrics).output_path)
            assert frame["n_pairs"].iloc[0] == 33
            p_values.append(frame["p_value"].iloc[0])

        assert sum(p > 0.05 for p in p_values) >= 18


class TestDensity:
    """Tests für cmd_density."""

    def test_fifty_bins(self, study):
        """50 Klassen ergeben 50 Zeilen."""
        result = StudyService(study).cmd_density("an1")

        frame = read_table(result.output_path)
        assert result.output_path.name == "density_an1.csv"
        assert len(frame) == 50
        assert (frame["kde_density"] >= 0).all()

    def test_covariate_channel(self, study):
        """Die Kovariate kann ebenfalls exportiert werden."""
        result = StudyService(study).cmd_density("sonic_temperature", bins=20)

        assert len(read_table(result.output_path)) == 20

    def test_unknown_channel(self, study):
        """Unbekannter Kanal."""
        with pytest.raises(ConfigError):
            StudyService(study).cmd_density("an9")


class TestMoments:
    """Tests für cmd_moments."""

    def test_pressure_table(self, study):
        """Eine Zeile pro Tag mit Mittel und Varianz des Luftdrucks."""
        result = StudyService(study).cmd_moments("pressure")

        assert result.output_path.name == "moments_pressure.csv"
        frame = read_table(result.output_path, required=MOMENT_COLUMNS)
        assert list(frame.columns) == MOMENT_COLUMNS
        assert list(frame["window_start"]) == [
            "2016-12-28T00:00:00Z",
            "2016-12-29T00:00:00Z",
            "2016-12-30T00:00:00Z",
        ]
        assert list(frame["sample_count"]) == [4320, 4320, 4320]
        assert frame["mean"].between(1004.0, 1022.0).all()
        assert frame["variance"].between(0.2, 0.3).all()
        assert (frame["status"] == "ok").all()

    def test_matches_numpy(self, study):
        """Tagesmittel und Tagesvarianz (Divisor n-1) der Kovariate."""
        path = StudyService(study).cmd_moments("sonic_temperature").output_path
        frame = read_table(path)

        values = read_table(study.covariate.path)["value"].to_numpy()
        first_day = values[:4320]
        assert frame["variance"].iloc[0] == pytest.approx(np.var(first_day, ddof=1), rel=1e-5)
        assert frame["mean"].iloc[0] == pytest.approx(np.mean(first_day), rel=1e-5)

    def test_insufficient_windows_keep_moments(self, study):
        """Zu kleine Fenster sind markiert, ihre Momente bleiben erhalten."""
        settings = with_window(study, min_samples=5000)

        frame = read_table(StudyService(settings).cmd_moments("an1").output_path)

        assert (frame["status"] == "insufficient").all()
        assert frame["variance"].notna().all()

    def test_unknown_channel(self, study):
        """Unbekannter Kanal."""
        with pytest.raises(ConfigError):
            StudyService(study).cmd_moments("an9")
