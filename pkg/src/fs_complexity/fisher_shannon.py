"""
Differentielle Entropie, Shannon Entropy Power (SEP), Fisher Information (FIM)
und Fisher-Shannon Komplexität aus einer Kerndichteschätzung.

Alle Integrale werden per Trapezregel auf dem gleichmäßigen KDE-Gitter berechnet;
Gitterpunkte mit f < 1e-12 * max(f) tragen nichts bei. Logarithmen sind natürlich.
"""

import logging
import math

import numpy as np
from scipy.integrate import trapezoid

from .config import KdeSettings
from .kde import fit, select_bandwidth
from .models import Bandwidth, DensityEstimate, FsMetrics

logger = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-12  # relativ zu max(f)
MAX_ENTROPY = 350.0  # Nats, darüber läuft exp(2H) über
DEFAULT_MIN_SAMPLES = 1000


class EstimationError(Exception):
    """Fehler bei der Berechnung der Fisher-Shannon Größen."""
    pass


def _support_mask(estimate: DensityEstimate) -> np.ndarray:
    f = estimate.f
    return f >= DENSITY_FLOOR * float(f.max())


def differential_entropy(estimate: DensityEstimate) -> float:
    """
    H = -∫ f log f dx (Nats).

    Args:
        estimate: angepasste KDE

    Returns:
        Differentielle Entropie
    """
    mask = _support_mask(estimate)
    f = estimate.f
    integrand = np.zeros_like(f)
    # 0 * log 0 = 0
    integrand[mask] = -f[mask] * np.log(f[mask])
    return float(trapezoid(integrand, dx=estimate.spacing))


def entropy_power(H: float) -> float:
    """
    N = exp(2H) / (2πe).

    Args:
        H: Entropie in Nats

    Returns:
        Shannon Entropy Power in Dateneinheiten²

    Raises:
        EstimationError: H nicht endlich oder Über-/Unterlauf
    """
    if not math.isfinite(H):
        raise EstimationError(f"Entropie nicht endlich: {H}")
    if H > MAX_ENTROPY:
        raise EstimationError(f"Entropie {H:.6g} Nats zu groß - exp(2H) läuft über")
    power = math.exp(2.0 * H) / (2.0 * math.pi * math.e)
    if power <= 0:
        raise EstimationError(f"Entropy Power unterläuft für H = {H:.6g}")
    return power


def fisher_information(estimate: DensityEstimate) -> float:
    """
    I = ∫ f'² / f dx mit der analytischen Kernableitung.

    Args:
        estimate: angepasste KDE

    Returns:
        Fisher Information in 1/Dateneinheiten²
    """
    mask = _support_mask(estimate)
    integrand = np.zeros_like(estimate.f)
    integrand[mask] = estimate.f_prime[mask] ** 2 / estimate.f[mask]
    return float(trapezoid(integrand, dx=estimate.spacing))


def fs_complexity(N: float, I: float) -> float:
    """
    C = N · I (dimensionslos, C >= 1 mit Gleichheit nur für Normalverteilungen).

    Raises:
        EstimationError: N oder I nicht positiv
    """
    if not N > 0 or not I > 0:
        raise EstimationError(f"SEP und FIM müssen positiv sein (N={N}, I={I})")
    return N * I


def metrics_from_estimate(estimate: DensityEstimate) -> FsMetrics:
    """Berechnet H, N, I und C aus einer angepassten KDE."""
    H = differential_entropy(estimate)
    N = entropy_power(H)
    I = fisher_information(estimate)
    C = fs_complexity(N, I)
    return FsMetrics(
        H=H,
        N=N,
        I=I,
        C=C,
        bandwidth=estimate.bandwidth,
        sample_count=estimate.sample_count,
    )


def analyze_samples(samples, settings: KdeSettings) -> FsMetrics:
    """
    Komplette Kette ohne Mindestgröße: Bandbreite → KDE → H → N → I → C.

    Args:
        samples: Werte
        settings: Bandbreitenverfahren und Gittergröße

    Returns:
        FsMetrics
    """
    bandwidth: Bandwidth = select_bandwidth(
        samples, settings.bandwidth_method, settings.fixed_bandwidth
    )
    estimate = fit(
        samples,
        bandwidth,
        grid_size=settings.grid_size,
        binned_threshold=settings.binned_threshold,
    )
    metrics = metrics_from_estimate(estimate)
    logger.debug(
        f"L={metrics.sample_count} b={bandwidth.b:.4g} ({estimate.path.value}): "
        f"H={metrics.H:.4g} N={metrics.N:.4g} I={metrics.I:.4g} C={metrics.C:.4g}"
    )
    return metrics


def analyze_window(
    samples,
    settings: KdeSettings,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> FsMetrics:
    """
    Fisher-Shannon Analyse eines Fensters.

    Args:
        samples: Werte des Fensters
        settings: KDE-Einstellungen
        min_samples: Mindestgröße des Fensters

    Returns:
        FsMetrics mit Bandbreite und Stichprobengröße

    Raises:
        EstimationError: Fenster kleiner als min_samples
        BandwidthError, DensityError: aus der KDE
    """
    count = int(np.size(samples))
    if count < min_samples:
        raise EstimationError(f"Fenster mit {count} Werten unter der Mindestgröße {min_samples}")
    return analyze_samples(samples, settings)
