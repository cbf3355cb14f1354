"""Reproducible figures from IrollanValley run exports."""

__version__ = "0.1.0"
