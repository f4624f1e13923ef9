"""Multiscale tests for local increases and decreases of a time trend."""

__version__ = "0.1.0"
