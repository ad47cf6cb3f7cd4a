"""tblocality: locality experiments for self-consistent tight binding."""

__version__ = "0.1.0"
