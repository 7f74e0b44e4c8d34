"""rsl: a numerical laboratory for asymptotic operators along closed Reeb orbits."""

__version__ = "0.1.0"
