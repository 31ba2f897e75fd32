"""Antisocial-post annotation pipeline."""

__version__ = "0.1.0"
