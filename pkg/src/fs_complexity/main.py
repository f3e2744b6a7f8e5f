"""
Hauptmodul - Kommandozeile für FS Complexity.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from . import __version__
from .config import ConfigError, Settings, load_settings
from .fisher_shannon import EstimationError
from .ingest import IngestError
from .kde import BandwidthError, DensityError
from .models import CommandResult
from .reports import ReportError
from .stats import StatsError
from .study_service import DEFAULT_HISTOGRAM_BINS, MOMENTS, StudyService, cmd_synthetic
from .synthetic import CAMPAIGN_DAYS, KINDS

logger = logging.getLogger("fs_complexity")

_COMMAND_ERRORS = (
    ConfigError,
    IngestError,
    BandwidthError,
    DensityError,
    EstimationError,
    StatsError,
    ReportError,
)


def setup_logging(log_level: str, log_file: Optional[str] = None):
    """
    Konfiguriert das Logging.

    Args:
        log_level: Log Level (DEBUG, INFO, WARNING, ERROR)
        log_file: Optionaler Pfad zur Log-Datei
    """
    level = getattr(logging, log_level.upper(), logging.INFO)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    # Logs nach stderr, Daten nach stdout
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)

    # Handler hängen am Paket-Logger; ein erneuter Aufruf ersetzt sie
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(level)
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)


def apply_overrides(settings: Settings, args: argparse.Namespace) -> Settings:
    """
    Überschreibt Werte der Konfiguration mit Kommandozeilen-Flags und validiert neu.

    Raises:
        ConfigError: ungültige Werte
    """
    data = settings.model_dump()

    if args.output_dir is not None:
        data["output_dir"] = args.output_dir
    if args.workers is not None:
        data["workers"] = args.workers
    if args.verbose:
        data["log_level"] = "DEBUG"
    if args.seed is not None:
        data["permutation"]["seed"] = args.seed
    if args.permutations is not None:
        data["permutation"]["permutations"] = args.permutations
    if getattr(args, "exhaustive", False):
        data["permutation"]["exhaustive"] = True
    if args.bandwidth is not None:
        data["kde"]["bandwidth_method"] = args.bandwidth
    if args.fixed_bandwidth is not None:
        data["kde"]["fixed_bandwidth"] = args.fixed_bandwidth
    if args.grid_size is not None:
        data["kde"]["grid_size"] = args.grid_size
    if args.min_samples is not None:
        data["window"]["min_samples"] = args.min_samples
    if args.utc_offset is not None:
        data["window"]["utc_offset_seconds"] = args.utc_offset
    if args.include_insufficient:
        data["window"]["include_insufficient"] = True

    try:
        return Settings.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Ungültige Kommandozeilen-Werte: {e}")


def build_parser() -> argparse.ArgumentParser:
    """Erstellt den Argument-Parser mit allen Unterkommandos."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", "-c",
        type=Path,
        default=Path("config.yaml"),
        help="Pfad zur Konfigurationsdatei (Standard: config.yaml)"
    )
    common.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Debug-Ausgabe aktivieren"
    )
    common.add_argument("--output-dir", type=Path, help="Ausgabeverzeichnis")
    common.add_argument("--workers", type=int, help="Anzahl paralleler Prozesse")
    common.add_argument("--seed", type=int, help="Seed für Permutationen und synthetische Daten")
    common.add_argument("--permutations", type=int, help="Anzahl Permutationen R")
    common.add_argument(
        "--bandwidth",
        choices=["silverman", "plugin", "fixed"],
        help="Bandbreitenwahl"
    )
    common.add_argument("--fixed-bandwidth", type=float, help="Bandbreite für --bandwidth fixed")
    common.add_argument("--grid-size", type=int, help="Anzahl Gitterpunkte der KDE")
    common.add_argument("--min-samples", type=int, help="Mindestanzahl Werte pro Fenster")
    common.add_argument("--utc-offset", type=int, help="UTC-Versatz der Tagesgrenzen in Sekunden")
    common.add_argument(
        "--include-insufficient",
        action="store_true",
        help="Zu kleine Fenster trotzdem auswerten"
    )

    parser = argparse.ArgumentParser(
        prog="fs-complexity",
        description="FS Complexity - Fisher-Shannon Analyse von Zeitreihen",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Beispiele:
  fs-complexity synthetic studie/                Synthetische Studie erzeugen
  fs-complexity summary -c studie/config.yaml    Kennzahlen pro Kanal
  fs-complexity analyze -c studie/config.yaml    Tägliche FS Komplexität
  fs-complexity correlate -c studie/config.yaml  Korrelation mit der Kovariate
  fs-complexity moments pressure -c studie/config.yaml  Tagesmomente des Luftdrucks
  fs-complexity density an1 -c studie/config.yaml --bins 50
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    subparsers = parser.add_subparsers(dest="command", required=True)

    summary = subparsers.add_parser("summary", parents=[common], help="Kennzahlen pro Kanal")
    summary.add_argument("--output", "-o", type=Path, help="Zieldatei")

    analyze = subparsers.add_parser("analyze", parents=[common], help="FS Komplexität pro Fenster")
    analyze.add_argument("--output", "-o", type=Path, help="Zieldatei")

    correlate = subparsers.add_parser(
        "correlate", parents=[common], help="Korrelation mit einer Kovariate"
    )
    correlate.add_argument(
        "--metrics", type=Path, help="Metrikdatei von analyze (Standard: <output-dir>/metrics.csv)"
    )
    correlate.add_argument("--covariate", help="Kanal-ID der Kovariate")
    correlate.add_argument("--moment", choices=list(MOMENTS), default="variance")
    correlate.add_argument(
        "--exhaustive",
        action="store_true",
        help="Alle Permutationen aufzählen (höchstens 9 Paare)"
    )
    correlate.add_argument("--output", "-o", type=Path, help="Zieldatei")

    moments = subparsers.add_parser(
        "moments", parents=[common], help="Tagesmittel und Tagesvarianz eines Kanals"
    )
    moments.add_argument("channel", help="Kanal-ID")
    moments.add_argument("--output", "-o", type=Path, help="Zieldatei")

    density = subparsers.add_parser("density", parents=[common], help="Histogramm und KDE")
    density.add_argument("channel", help="Kanal-ID")
    density.add_argument("--bins", type=int, default=DEFAULT_HISTOGRAM_BINS)
    density.add_argument("--output", "-o", type=Path, help="Zieldatei")

    synthetic = subparsers.add_parser(
        "synthetic", parents=[common], help="Synthetische Studie erzeugen"
    )
    synthetic.add_argument("directory", type=Path, help="Zielverzeichnis")
    synthetic.add_argument("--days", type=int, default=CAMPAIGN_DAYS)
    synthetic.add_argument("--rate-hz", type=float, default=1.0)
    synthetic.add_argument("--channels", type=int, default=7)
    synthetic.add_argument(
        "--kind",
        choices=list(KINDS),
        help="Verteilung aller Windkanäle (Standard: Windprofil mit Tagesgang)"
    )

    return parser


def run_command(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """Führt das gewählte Unterkommando aus."""
    if args.command == "synthetic":
        return cmd_synthetic(
            args.directory,
            seed=settings.permutation.seed,
            days=args.days,
            rate_hz=args.rate_hz,
            channels=args.channels,
            min_samples=args.min_samples,
            kind=args.kind,
        )

    service = StudyService(settings)
    if args.command == "summary":
        return service.cmd_summary(args.output)
    if args.command == "analyze":
        return service.cmd_analyze(args.output)
    if args.command == "correlate":
        metric_file = args.metrics or settings.output_dir / "metrics.csv"
        return service.cmd_correlate(metric_file, args.covariate, args.moment, args.output)
    if args.command == "moments":
        return service.cmd_moments(args.channel, args.output)
    return service.cmd_density(args.channel, args.bins, args.output)


def main(argv: Optional[list[str]] = None) -> int:
    """Haupteinstiegspunkt."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config_path = args.config if args.config.exists() else None
        settings = apply_overrides(load_settings(config_path), args)
    except ConfigError as e:
        setup_logging("INFO")
        logger.error(str(e))
        return 1

    setup_logging(settings.log_level, settings.log_file)

    logger.info("=" * 50)
    logger.info(f"  FS Complexity {__version__}")
    logger.info(f"  Kommando: {args.command}")
    logger.info(f"  Bandbreite: {settings.kde.bandwidth_method}")
    logger.info("=" * 50)

    try:
        result = run_command(args, settings)
    except _COMMAND_ERRORS as e:
        logger.error(f"{args.command} fehlgeschlagen: {e}")
        return 1

    if result.output_path:
        print(result.output_path)
    if not result.ok:
        logger.error(f"Fehlgeschlagene Kanäle: {', '.join(result.failed_channels)}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
