"""
Tests für die synthetischen Kanäle.
"""

import numpy as np
import pytest
import yaml

from fs_complexity.config import load_settings
from fs_complexity.ingest import read_csv
from fs_complexity.synthetic import (
    CAMPAIGN_START,
    KINDS,
    generate_channel,
    generate_samples,
    generate_study,
    write_series_csv,
)


class TestGenerateSamples:
    """Tests für generate_samples."""

    @pytest.mark.parametrize("kind", KINDS)
    def test_kinds(self, kind):
        """Alle Verteilungen liefern n endliche Werte."""
        values = generate_samples(kind, 1000, np.random.default_rng(0))

        assert values.shape == (1000,)
        assert np.all(np.isfinite(values))

    def test_unknown_kind(self):
        """Unbekannte Verteilung."""
        with pytest.raises(ValueError, match="Unbekannte Verteilung"):
            generate_samples("cauchy", 10, np.random.default_rng(0))

    def test_laplace_gaussian_unit_variance(self):
        """Beide Komponenten haben Varianz 1."""
        rng = np.random.default_rng(1)
        for weight in (0.0, 0.5, 1.0):
            values = generate_samples("laplace_gaussian", 200_000, rng, weight=weight)
            assert np.var(values) == pytest.approx(1.0, rel=0.03)

    def test_seeded(self):
        """Gleicher Seed, gleiche Werte."""
        first = generate_samples("logistic", 50, np.random.default_rng(9), scale=2.0)
        second = generate_samples("logistic", 50, np.random.default_rng(9), scale=2.0)

        np.testing.assert_array_equal(first, second)


class TestGenerateChannel:
    """Tests für generate_channel und write_series_csv."""

    def test_clock(self):
        """Konstante Abtastrate ab dem Startzeitpunkt."""
        series = generate_channel("an1", "gaussian", 1, np.random.default_rng(2), rate_hz=0.5)

        assert len(series) == 43_200
        assert series.start == CAMPAIGN_START
        assert series.timestamps[1] - series.timestamps[0] == 2.0

    def test_csv_readable(self, tmp_path):
        """Geschriebene Kanäle lassen sich wieder einlesen."""
        from fs_complexity.config import IngestSettings

        series = generate_channel(
            "an1", "laplace", 1, np.random.default_rng(3), rate_hz=0.01, offset=2.0
        )
        path = write_series_csv(series, tmp_path / "an1.csv")
        loaded, diagnostics = read_csv(path, IngestSettings())

        assert diagnostics.rows_dropped == 0
        np.testing.assert_array_equal(loaded.timestamps, series.timestamps)
        np.testing.assert_allclose(loaded.values, series.values, rtol=1e-14)


class TestGenerateStudy:
    """Tests für generate_study."""

    def test_study_layout(self, tmp_path):
        """Kanäle, Kovariate und config.yaml werden geschrieben."""
        config_path = generate_study(tmp_path, seed=5, days=2, rate_hz=0.02, channels=3, min_samples=100)

        config = yaml.safe_load(config_path.read_text(encoding="utf-8"))
        assert [c["channel_id"] for c in config["channels"]] == ["an1", "an2", "an3"]
        assert config["covariate"]["channel_id"] == "sonic_temperature"
        assert config["permutation"]["seed"] == 5
        assert config["window"]["min_samples"] == 100

        settings = load_settings(config_path)
        assert settings.channels[0].path.exists()
        assert settings.covariate.path.exists()
        assert settings.output_dir == (tmp_path / "results").resolve()

    def test_study_reproducible(self, tmp_path):
        """Gleicher Seed, identische Dateien."""
        first = generate_study(tmp_path / "a", seed=8, days=1, rate_hz=0.02, channels=2)
        second = generate_study(tmp_path / "b", seed=8, days=1, rate_hz=0.02, channels=2)

        for name in ("an1.csv", "an2.csv", "sonic_temperature.csv", "pressure.csv"):
            assert (first.parent / name).read_bytes() == (second.parent / name).read_bytes()

    def test_pressure_channel(self, tmp_path):
        """Der Luftdruck liegt als weitere Kovariate in hPa vor."""
        config_path = generate_study(tmp_path, seed=5, days=2, rate_hz=0.02, channels=2)

        settings = load_settings(config_path)
        pressure = settings.find_channel("pressure")
        series, _ = read_csv(pressure.path, settings.ingest, channel_id="pressure")

        assert pressure.units == "hPa"
        assert len(series) == 2 * 1728
        assert series.values.min() > 1000.0
        assert series.values.max() < 1026.0

    def test_single_kind(self, tmp_path):
        """Mit kind ziehen alle Kanäle aus derselben Verteilung, Skala 1 + Höhe."""
        config_path = generate_study(
            tmp_path, seed=11, days=2, rate_hz=0.05, channels=2, kind="gaussian"
        )

        settings = load_settings(config_path)
        lowest, _ = read_csv(settings.channels[0].path, settings.ingest)
        highest, _ = read_csv(settings.channels[1].path, settings.ingest)

        assert np.mean(lowest.values) == pytest.approx(2.0, abs=0.1)
        assert np.var(lowest.values) == pytest.approx(1.0, rel=0.1)
        assert np.var(highest.values) == pytest.approx(4.0, rel=0.1)

    def test_unknown_study_kind(self, tmp_path):
        """Unbekannte Verteilung wird vor dem Schreiben abgelehnt."""
        with pytest.raises(ValueError, match="Unbekannte Verteilung"):
            generate_study(tmp_path / "x", days=1, rate_hz=0.02, channels=2, kind="cauchy")

        assert not (tmp_path / "x").exists()
