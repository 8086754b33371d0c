"""Stochastic-localization sampling for the Sherrington-Kirkpatrick model."""

__version__ = "0.1.0"
