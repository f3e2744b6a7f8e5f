"""
FS Complexity - Fisher-Shannon Analyse von Zeitreihen

Schätzt Fisher Information (FIM), Shannon Entropy Power (SEP) und die
Fisher-Shannon Komplexität gesampelter Zeitreihen über eine Gauß-Kerndichteschätzung
und reproduziert die komplette Auswertung: Tagesprofile, Kennzahlen und
permutationsgetestete Korrelationen gegen Kovariaten.
"""

__version__ = "1.0.0"
__author__ = "FS Complexity Contributors"
