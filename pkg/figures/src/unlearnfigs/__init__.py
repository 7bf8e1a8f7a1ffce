"""Render deletion-experiment diagnostics from rounds.csv into figure files."""

__version__ = "0.1.0"
