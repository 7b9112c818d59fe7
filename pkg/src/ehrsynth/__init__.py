"""ehrsynth: synthetic EHR cohorts, validation gates, and SQL loading."""

__version__ = "0.1.0"
