"""Dynamic state estimation lab for a single-machine infinite-bus system."""

__version__ = "0.1.0"
