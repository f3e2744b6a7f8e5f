"""
Synthetische Kanäle für Tests und Reproduktion ohne Messdaten.

Verteilungen:
- gaussian: Normalverteilung (C = 1)
- laplace: Laplace-Verteilung (C = 2e/π)
- logistic: logistische Verteilung (C = e³/(6π))
- mixture: zwei Normalverteilungen mit Abstand `separation`
- laplace_gaussian: mit Wahrscheinlichkeit `weight` Normalverteilung, sonst
  Laplace mit Varianz 1 (weight = 1 ist rein Gaussisch)
"""

import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import yaml

from .models import TimeSeries

logger = logging.getLogger(__name__)

KINDS = ("gaussian", "laplace", "logistic", "mixture", "laplace_gaussian")

# 28.12.2016 00:00 UTC, Beginn der Kampagne
CAMPAIGN_START = datetime(2016, 12, 28, tzinfo=timezone.utc).timestamp()
CAMPAIGN_DAYS = 33
SECONDS_PER_DAY = 86400


def generate_samples(
    kind: str,
    n: int,
    rng: np.random.Generator,
    scale: float = 1.0,
    weight: float = 0.5,
    separation: float = 3.0,
) -> np.ndarray:
    """
    Zieht n Werte der angegebenen Verteilung.

    Args:
        kind: Verteilung (siehe KINDS)
        n: Anzahl Werte
        rng: Zufallsgenerator
        scale: Skalenfaktor
        weight: Gewicht der ersten (Normal-)Komponente bei Mischungen
        separation: Abstand der Mischungskomponenten

    Returns:
        Array mit n Werten
    """
    if kind == "gaussian":
        values = rng.standard_normal(n)
    elif kind == "laplace":
        values = rng.laplace(0.0, 1.0, n)
    elif kind == "logistic":
        values = rng.logistic(0.0, 1.0, n)
    elif kind == "mixture":
        second = rng.random(n) >= weight
        values = rng.standard_normal(n) + separation * second
    elif kind == "laplace_gaussian":
        gaussian = rng.random(n) < weight
        values = np.where(
            gaussian,
            rng.standard_normal(n),
            rng.laplace(0.0, 1.0 / math.sqrt(2.0), n),
        )
    else:
        raise ValueError(f"Unbekannte Verteilung '{kind}'. Erlaubt: {KINDS}")
    return scale * values


def generate_channel(
    channel_id: str,
    kind: str,
    days: int,
    rng: np.random.Generator,
    start: float = CAMPAIGN_START,
    rate_hz: float = 1.0,
    offset: float = 0.0,
    **params,
) -> TimeSeries:
    """
    Erzeugt einen Kanal mit konstanter Abtastrate.

    Args:
        channel_id: Kanal-ID
        kind: Verteilung
        days: Anzahl Tage
        rng: Zufallsgenerator
        start: Startzeit (Epoch-Sekunden)
        rate_hz: Abtastrate in Hz
        offset: additive Verschiebung der Werte
        **params: weitere Parameter für generate_samples

    Returns:
        TimeSeries
    """
    n = int(round(days * SECONDS_PER_DAY * rate_hz))
    timestamps = start + np.arange(n) / rate_hz
    values = offset + generate_samples(kind, n, rng, **params)
    return TimeSeries(channel_id=channel_id, timestamps=timestamps, values=values)


def write_series_csv(series: TimeSeries, path: Path) -> Path:
    """Schreibt eine Zeitreihe als CSV (timestamp,value)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"timestamp": series.timestamps, "value": series.values})
    frame.to_csv(path, index=False, float_format="%.15g", lineterminator="\n")
    return path


def _daily_series(
    channel_id: str,
    day_params: list[dict],
    rng: np.random.Generator,
    start: float,
    rate_hz: float,
) -> TimeSeries:
    """Setzt einen Kanal aus Tagen mit jeweils eigenen Verteilungsparametern zusammen."""
    per_day = int(round(SECONDS_PER_DAY * rate_hz))
    values = []
    for params in day_params:
        params = dict(params)
        kind = params.pop("kind")
        offset = params.pop("offset", 0.0)
        values.append(offset + generate_samples(kind, per_day, rng, **params))
    timestamps = start + np.arange(per_day * len(day_params)) / rate_hz
    return TimeSeries(channel_id=channel_id, timestamps=timestamps, values=np.concatenate(values))


def generate_study(
    output_dir: Path,
    seed: int = 12345,
    days: int = CAMPAIGN_DAYS,
    rate_hz: float = 1.0,
    channels: int = 7,
    start: float = CAMPAIGN_START,
    min_samples: Optional[int] = None,
    kind: Optional[str] = None,
) -> Path:
    """
    Erzeugt eine komplette synthetische Studie mit Konfiguration.

    Ohne `kind` mischt Kanal k (1 = unten) Laplace- und Normalanteile; der
    Laplace-Anteil nimmt mit der Höhe ab und folgt täglich linear der Varianz
    der Kovariate (sonic temperature). Die FS Komplexität nimmt damit mit der
    Höhe ab und korreliert täglich positiv mit der Kovariaten-Varianz.

    Mit `kind` ziehen alle Kanäle an allen Tagen aus dieser Verteilung
    (Skala 1 + Höhe), z.B. für Kalibrierung mit Normalverteilungen.

    Zusätzlich wird ein Druckkanal (pressure) mit schwankendem Tagesmittel
    geschrieben, der als weitere Kovariate eingetragen ist.

    Args:
        output_dir: Zielverzeichnis
        seed: Seed (SeedSequence)
        days: Anzahl Tage
        rate_hz: Abtastrate
        channels: Anzahl Windkanäle
        start: Startzeit
        min_samples: Mindestgröße der Fenster in der erzeugten Konfiguration
        kind: Verteilung aller Windkanäle (siehe KINDS), sonst Windprofil

    Returns:
        Pfad der erzeugten config.yaml
    """
    if kind is not None and kind not in KINDS:
        raise ValueError(f"Unbekannte Verteilung '{kind}'. Erlaubt: {KINDS}")

    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    streams = np.random.SeedSequence(seed).spawn(channels + 3)
    driver_rng = np.random.default_rng(streams[0])

    # Tägliche Treiber in [0, 1]: Temperatur-Varianz und Druck
    drive = driver_rng.random(days)
    pressure_drive = driver_rng.random(days)

    covariate_days = [
        {"kind": "gaussian", "scale": math.sqrt(0.5 + 2.5 * d), "offset": 5.0} for d in drive
    ]
    covariate = _daily_series(
        "sonic_temperature", covariate_days, np.random.default_rng(streams[1]), start, rate_hz
    )
    write_series_csv(covariate, output_dir / "sonic_temperature.csv")

    pressure_days = [
        {"kind": "gaussian", "scale": 0.5, "offset": 1005.0 + 16.0 * p} for p in pressure_drive
    ]
    pressure = _daily_series(
        "pressure", pressure_days, np.random.default_rng(streams[2]), start, rate_hz
    )
    write_series_csv(pressure, output_dir / "pressure.csv")

    channel_entries = []
    for k in range(channels):
        level = k / max(channels - 1, 1)
        if kind is None:
            day_params = [
                {
                    "kind": "laplace_gaussian",
                    "weight": 1.0 - (1.0 - level) * d,
                    "scale": 1.0 + level,
                    "offset": 2.0,
                }
                for d in drive
            ]
        else:
            day_params = [{"kind": kind, "scale": 1.0 + level, "offset": 2.0}] * days
        channel_id = f"an{k + 1}"
        series = _daily_series(
            channel_id, day_params, np.random.default_rng(streams[k + 3]), start, rate_hz
        )
        write_series_csv(series, output_dir / f"{channel_id}.csv")
        channel_entries.append({"channel_id": channel_id, "path": f"{channel_id}.csv", "units": "m/s"})
        logger.info(f"Synthetischer Kanal '{channel_id}': {len(series)} Werte")

    config = {
        "channels": channel_entries,
        "covariate": {
            "channel_id": "sonic_temperature",
            "path": "sonic_temperature.csv",
            "units": "degC",
        },
        "auxiliary": [{"channel_id": "pressure", "path": "pressure.csv", "units": "hPa"}],
        "ingest": {"timestamp_column": "timestamp", "value_column": "value"},
        "window": {"policy": "daily", "utc_offset_seconds": 0},
        "permutation": {"permutations": 999, "seed": seed},
        "output_dir": "results",
    }
    if min_samples is not None:
        config["window"]["min_samples"] = min_samples

    config_path = output_dir / "config.yaml"
    with open(config_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config, f, sort_keys=False, allow_unicode=True)

    logger.info(f"Synthetische Studie geschrieben: {config_path}")
    return config_path
