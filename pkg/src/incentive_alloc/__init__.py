"""Budgeted incentive allocation on social networks with hidden topology."""

__version__ = "0.1.0"
