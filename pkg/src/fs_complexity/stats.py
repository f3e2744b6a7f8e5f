"""
Kennzahlen, Tagesmomente, Pearson-Korrelation und Permutationstest.
"""

import itertools
import logging
import math
from typing import Optional

import numpy as np

from .models import (
    CorrelationReport,
    DensityEstimate,
    DensityTable,
    SummaryStats,
    TimeSeries,
    Window,
    WindowMoments,
)

logger = logging.getLogger(__name__)

DEFAULT_PERMUTATIONS = 999
MAX_EXHAUSTIVE_SIZE = 9
# Permutationen, deren |r| nur in Rundungsfehlern unter |r_obs| liegt, zählen mit
TIE_TOLERANCE = 1e-12
QUANTILE_METHOD = "linear"


class StatsError(Exception):
    """Fehler bei statistischen Auswertungen."""
    pass


def summarize(values) -> SummaryStats:
    """
    Min, Quartile, Median, Mittel und Max.

    Quartile per linearer Interpolation der Ordnungsstatistiken (Position (n-1)·q).

    Raises:
        StatsError: leere Eingabe
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise StatsError("Kennzahlen einer leeren Liste sind nicht definiert")

    q1, median, q3 = np.quantile(x, [0.25, 0.5, 0.75], method=QUANTILE_METHOD)
    lo = float(x.min())
    hi = float(x.max())
    # Mittelwert numerisch auf [min, max] begrenzen
    mean = min(max(float(np.mean(x)), lo), hi)
    return SummaryStats(
        min=lo,
        q1=float(q1),
        median=float(median),
        mean=mean,
        q3=float(q3),
        max=hi,
        count=int(x.size),
    )


def daily_moments(series: TimeSeries, windows: list[Window]) -> list[WindowMoments]:
    """
    Mittelwert und Stichprobenvarianz (Divisor n-1) pro Fenster.

    Fenster mit weniger als 2 Werten erhalten keine Varianz (None, nicht 0).
    """
    moments = []
    for window in windows:
        values = series.values[window.indices]
        if values.size == 0:
            continue
        variance: Optional[float] = None
        if values.size >= 2:
            variance = float(np.var(values, ddof=1))
        moments.append(WindowMoments(window=window, mean=float(np.mean(values)), variance=variance))
    return moments


def _complete_pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Entfernt Paare mit fehlendem Wert (None/NaN)."""
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.size != ya.size:
        raise StatsError(f"Unterschiedliche Längen: {xa.size} und {ya.size}")
    keep = np.isfinite(xa) & np.isfinite(ya)
    return xa[keep], ya[keep]


def _centered(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Zentrierte Vektoren und Normierung sqrt(Sxx·Syy)."""
    if x.size < 3:
        raise StatsError(f"Mindestens 3 vollständige Paare benötigt, nicht {x.size}")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx <= 0 or syy <= 0:
        raise StatsError("Varianz null in einer der Reihen")
    return xc, yc, math.sqrt(sxx * syy)


def pearson(x, y) -> float:
    """
    Pearson-Korrelationskoeffizient der vollständigen Paare.

    Raises:
        StatsError: weniger als 3 Paare oder Varianz null
    """
    xa, ya = _complete_pairs(x, y)
    xc, yc, norm = _centered(xa, ya)
    r = float(xc @ yc) / norm
    return min(1.0, max(-1.0, r))


def _random_permutations(n: int, permutations: int, seed: int) -> np.ndarray:
    """
    Permutationen aus (seed, Replikat-Index).

    Jede Permutation hat ihren eigenen Generator aus SeedSequence.spawn, damit
    serielle und parallele Ausführung identisch sind.
    """
    children = np.random.SeedSequence(seed).spawn(permutations)
    return np.stack([np.random.default_rng(child).permutation(n) for child in children])


def permutation_test(
    x,
    y,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
    exhaustive: bool = False,
    channel_id: str = "",
) -> CorrelationReport:
    """
    Zweiseitiger Permutationstest für die Pearson-Korrelation.

    Im Zufallsmodus werden R Permutationen von y gezogen und
    p = (1 + #{|r_perm| >= |r_obs|}) / (R + 1) berechnet. Im erschöpfenden
    Modus werden alle n! Permutationen aufgezählt, p ist dann der exakte Anteil.

    Args:
        x: erste Reihe
        y: zweite Reihe (wird permutiert)
        permutations: Anzahl R (Zufallsmodus)
        seed: Seed des Generators
        exhaustive: alle Permutationen aufzählen (n <= 9)
        channel_id: Kanal für den Bericht

    Returns:
        CorrelationReport

    Raises:
        StatsError: Vorbedingungen von pearson verletzt, R < 1 oder n zu groß
    """
    if permutations < 1:
        raise StatsError("Es wird mindestens eine Permutation benötigt")

    xa, ya = _complete_pairs(x, y)
    xc, yc, norm = _centered(xa, ya)
    r_obs = min(1.0, max(-1.0, float(xc @ yc) / norm))
    n = xa.size
    threshold = abs(r_obs) - TIE_TOLERANCE

    if exhaustive:
        if n > MAX_EXHAUSTIVE_SIZE:
            raise StatsError(
                f"Erschöpfende Permutation nur bis n={MAX_EXHAUSTIVE_SIZE} (n={n})"
            )
        orders = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
        r_perm = (yc[orders] @ xc) / norm
        count = int(np.sum(np.abs(r_perm) >= threshold))
        p_value = count / len(orders)
        total = len(orders)
    else:
        orders = _random_permutations(n, permutations, seed)
        r_perm = (yc[orders] @ xc) / norm
        count = int(np.sum(np.abs(r_perm) >= threshold))
        p_value = (1 + count) / (permutations + 1)
        total = permutations

    logger.debug(
        f"Permutationstest {channel_id or '-'}: r={r_obs:.4g}, {count}/{total} "
        f"Permutationen mindestens so extrem, p={p_value:.4g}"
    )
    return CorrelationReport(
        channel_id=channel_id,
        r=r_obs,
        p_value=p_value,
        permutations=total,
        seed=seed,
        n_pairs=n,
        exhaustive=exhaustive,
    )


def histogram_density(values, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Dichte-normiertes Histogramm (Fläche 1).

    Returns:
        Tuple (Klassenmitten, Dichten)
    """
    density, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, density


def density_export(estimate: DensityEstimate, histogram_bins: int) -> DensityTable:
    """
    Histogramm und KDE an den Klassenmitten für externe Plots.

    Args:
        estimate: angepasste KDE
        histogram_bins: Anzahl Klassen (mindestens 2)

    Returns:
        DensityTable
    """
    if histogram_bins < 2:
        raise StatsError(f"Mindestens 2 Klassen benötigt, nicht {histogram_bins}")
    centers, hist = histogram_density(estimate.samples, histogram_bins)
    kde_values = np.interp(centers, estimate.grid, estimate.f)
    return DensityTable(bin_centers=centers, hist_density=hist, kde_density=kde_values)
