"""Verification toolkit for differential Riccati equations over function fields."""

__version__ = "0.1.0"
