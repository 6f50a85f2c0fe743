"""Buffer-aided relaying with adjustable space-time codes: simulation and analysis."""

__version__ = "0.1.0"
