"""Deterministic multi-agent social simulation engine for the
IrollanValley sandbox world."""

__version__ = "0.1.0"
