"""Simulated disclosure conversations with rubric-based feedback."""

__version__ = "0.1.0"
