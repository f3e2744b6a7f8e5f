"""
Konfigurationsmanagement für FS Complexity.

Unterstützt Konfiguration via Umgebungsvariablen, .env Datei oder config.yaml.
Kommandozeilen-Flags überschreiben die Datei (siehe main.py).
"""

import hashlib
import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class ConfigError(Exception):
    """Fehler in der Konfiguration."""
    pass


class IngestSettings(BaseSettings):
    """CSV Import Konfiguration."""

    timestamp_column: str = Field(
        default="timestamp",
        description="Name der Zeitstempel-Spalte",
    )
    value_column: str = Field(
        default="value",
        description="Name der Werte-Spalte",
    )
    delimiter: str = Field(
        default=",",
        description="Spaltentrenner der CSV-Dateien",
    )
    timestamp_format: str = Field(
        default="epoch",
        description="Zeitstempelformat: 'epoch' (Sekunden) oder 'iso8601'",
    )
    unparseable_tolerance: float = Field(
        default=0.01,
        description="Maximaler Anteil nicht lesbarer Zeilen",
    )

    @field_validator("timestamp_format")
    @classmethod
    def validate_timestamp_format(cls, v: str) -> str:
        valid_formats = ["epoch", "iso8601"]
        # Alias
        if v == "iso":
            v = "iso8601"
        if v not in valid_formats:
            raise ValueError(f"Ungültiges Zeitstempelformat. Erlaubt: {valid_formats}")
        return v

    @field_validator("unparseable_tolerance")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        if not 0 <= v < 1:
            raise ValueError("Toleranz muss in [0, 1) liegen")
        return v

    model_config = SettingsConfigDict(
        env_prefix="INGEST_",
        extra="ignore",
    )


class WindowSettings(BaseSettings):
    """Fensterbildung (Tage oder feste Länge)."""

    policy: str = Field(
        default="daily",
        description="Fensterpolitik: 'daily' oder 'fixed'",
    )
    utc_offset_seconds: int = Field(
        default=0,
        description="Fester UTC-Versatz der Tagesgrenzen in Sekunden (ohne Sommerzeit)",
    )
    window_seconds: float = Field(
        default=86400.0,
        description="Fensterlänge in Sekunden (nur bei 'fixed')",
    )
    origin: float = Field(
        default=0.0,
        description="Startzeitpunkt des Fensterrasters (Epoch-Sekunden, nur bei 'fixed')",
    )
    min_samples: int = Field(
        default=1000,
        description="Minimale Anzahl Werte pro Fenster",
    )
    include_insufficient: bool = Field(
        default=False,
        description="Zu kleine Fenster trotzdem auswerten",
    )

    @field_validator("policy")
    @classmethod
    def validate_policy(cls, v: str) -> str:
        valid_policies = ["daily", "fixed"]
        if v not in valid_policies:
            raise ValueError(f"Ungültige Fensterpolitik. Erlaubt: {valid_policies}")
        return v

    @field_validator("window_seconds")
    @classmethod
    def validate_window_seconds(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Fensterlänge muss positiv sein")
        return v

    @field_validator("min_samples")
    @classmethod
    def validate_min_samples(cls, v: int) -> int:
        if v < 1:
            raise ValueError("min_samples muss mindestens 1 sein")
        return v

    model_config = SettingsConfigDict(
        env_prefix="WINDOW_",
        extra="ignore",
    )


class KdeSettings(BaseSettings):
    """Kerndichteschätzung."""

    bandwidth_method: str = Field(
        default="silverman",
        description="Bandbreitenwahl: 'silverman', 'plugin' oder 'fixed'",
    )
    fixed_bandwidth: Optional[float] = Field(
        default=None,
        description="Bandbreite in Dateneinheiten (nur bei 'fixed')",
    )
    grid_size: int = Field(
        default=4096,
        description="Anzahl Gitterpunkte",
    )
    binned_threshold: int = Field(
        default=10_000,
        description="Ab dieser Stichprobengröße wird die gebinnte Auswertung verwendet",
    )

    @field_validator("bandwidth_method")
    @classmethod
    def validate_method(cls, v: str) -> str:
        valid_methods = ["silverman", "plugin", "fixed"]
        if v not in valid_methods:
            raise ValueError(f"Ungültige Bandbreitenwahl. Erlaubt: {valid_methods}")
        return v

    @field_validator("grid_size")
    @classmethod
    def validate_grid_size(cls, v: int) -> int:
        if v < 16:
            raise ValueError("grid_size muss mindestens 16 sein")
        return v

    @model_validator(mode="after")
    def check_fixed_bandwidth(self) -> "KdeSettings":
        if self.bandwidth_method == "fixed":
            if self.fixed_bandwidth is None or self.fixed_bandwidth <= 0:
                raise ValueError("Methode 'fixed' braucht eine positive fixed_bandwidth")
        return self

    model_config = SettingsConfigDict(
        env_prefix="KDE_",
        extra="ignore",
    )


class PermutationSettings(BaseSettings):
    """Permutationstest."""

    permutations: int = Field(
        default=999,
        description="Anzahl Permutationen R",
    )
    seed: int = Field(
        default=12345,
        description="Seed des Zufallsgenerators",
    )
    exhaustive: bool = Field(
        default=False,
        description="Alle n! Permutationen aufzählen (nur kleine n)",
    )

    @field_validator("permutations")
    @classmethod
    def validate_permutations(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Es wird mindestens eine Permutation benötigt")
        return v

    model_config = SettingsConfigDict(
        env_prefix="PERMUTATION_",
        extra="ignore",
    )


class ChannelSettings(BaseModel):
    """Ein Eingangskanal."""

    channel_id: str
    path: Path
    units: str = ""

    # Optionale Spalten-Überschreibungen pro Kanal
    timestamp_column: Optional[str] = None
    value_column: Optional[str] = None

    def ingest_settings(self, base: IngestSettings) -> IngestSettings:
        """Import-Einstellungen mit den Spalten dieses Kanals."""
        update = {}
        if self.timestamp_column:
            update["timestamp_column"] = self.timestamp_column
        if self.value_column:
            update["value_column"] = self.value_column
        return base.model_copy(update=update) if update else base


class Settings(BaseSettings):
    """Hauptkonfiguration (RunConfig) - kombiniert alle Einstellungen."""

    channels: list[ChannelSettings] = Field(default_factory=list)
    covariate: Optional[ChannelSettings] = None
    # weitere Kovariaten (z.B. Luftdruck), nur über die Kanal-ID angesprochen
    auxiliary: list[ChannelSettings] = Field(default_factory=list)

    ingest: IngestSettings = Field(default_factory=IngestSettings)
    window: WindowSettings = Field(default_factory=WindowSettings)
    kde: KdeSettings = Field(default_factory=KdeSettings)
    permutation: PermutationSettings = Field(default_factory=PermutationSettings)

    output_dir: Path = Field(
        default=Path("results"),
        description="Ausgabeverzeichnis",
    )
    workers: int = Field(
        default=1,
        description="Anzahl paralleler Prozesse für die Fensteranalyse",
    )

    # Logging
    log_level: str = Field(
        default="INFO",
        description="Log Level (DEBUG, INFO, WARNING, ERROR)",
    )
    log_file: Optional[str] = Field(
        default=None,
        description="Pfad zur Log-Datei (optional)",
    )

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("workers muss mindestens 1 sein")
        return v

    @model_validator(mode="after")
    def check_channels(self) -> "Settings":
        ids = [c.channel_id for c in self.channels]
        if len(ids) != len(set(ids)):
            raise ValueError(f"Doppelte Kanal-IDs: {ids}")
        paths = [c.path.resolve() for c in self.channels]
        if len(paths) != len(set(paths)):
            raise ValueError("Mehrere Kanäle verweisen auf dieselbe Datei")
        return self

    def find_channel(self, channel_id: str) -> ChannelSettings:
        """Sucht einen Kanal (inkl. Kovariaten) anhand der ID."""
        candidates = list(self.channels)
        if self.covariate:
            candidates.append(self.covariate)
        candidates.extend(self.auxiliary)
        for channel in candidates:
            if channel.channel_id == channel_id:
                return channel
        raise ConfigError(f"Unbekannter Kanal '{channel_id}'")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


# Felder ohne Einfluss auf die Ergebnisse (seriell/parallel teilen den Hash)
_HASH_EXCLUDE = {"workers", "log_level", "log_file", "output_dir"}


def config_hash(settings: Settings) -> str:
    """
    Berechnet einen stabilen Hash der ergebnisrelevanten Einstellungen.

    Args:
        settings: Konfiguration

    Returns:
        Die ersten 16 Hex-Zeichen des SHA-256
    """
    payload = settings.model_dump(mode="json", exclude=_HASH_EXCLUDE)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _resolve_channel(raw: dict, base_dir: Path) -> dict:
    """Relative Kanalpfade beziehen sich auf das Verzeichnis der config.yaml."""
    resolved = dict(raw)
    path = Path(resolved["path"])
    if not path.is_absolute():
        resolved["path"] = base_dir / path
    return resolved


def load_settings(config_path: Optional[Path] = None) -> Settings:
    """
    Lädt die Konfiguration aus verschiedenen Quellen.

    Priorität:
    1. config.yaml (wenn angegeben)
    2. Umgebungsvariablen
    3. .env Datei
    4. Standardwerte

    Relative Pfade (Kanäle, output_dir) beziehen sich auf das Verzeichnis der Datei.

    Raises:
        ConfigError: Datei nicht lesbar oder Werte ungültig
    """
    import yaml
    from pydantic import ValidationError

    settings_dict: dict = {}
    base_dir = Path.cwd()

    # Lade config.yaml wenn vorhanden
    if config_path and config_path.exists():
        base_dir = config_path.resolve().parent
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                yaml_config = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Konnte Konfiguration nicht laden: {e}")
        if yaml_config:
            settings_dict = yaml_config

    try:
        channels = [
            ChannelSettings(**_resolve_channel(c, base_dir))
            for c in settings_dict.get("channels", [])
        ]
        covariate_raw = settings_dict.get("covariate")
        covariate = (
            ChannelSettings(**_resolve_channel(covariate_raw, base_dir)) if covariate_raw else None
        )
        auxiliary = [
            ChannelSettings(**_resolve_channel(c, base_dir))
            for c in settings_dict.get("auxiliary", [])
        ]
        extras = {
            key: settings_dict[key]
            for key in ("output_dir", "workers", "log_level", "log_file")
            if key in settings_dict
        }
        if "output_dir" in extras and not Path(extras["output_dir"]).is_absolute():
            extras["output_dir"] = base_dir / extras["output_dir"]
        return Settings(
            channels=channels,
            covariate=covariate,
            auxiliary=auxiliary,
            ingest=IngestSettings(**settings_dict.get("ingest", {})),
            window=WindowSettings(**settings_dict.get("window", {})),
            kde=KdeSettings(**settings_dict.get("kde", {})),
            permutation=PermutationSettings(**settings_dict.get("permutation", {})),
            **extras,
        )
    except (ValidationError, KeyError, TypeError) as e:
        raise ConfigError(f"Ungültige Konfiguration: {e}")
