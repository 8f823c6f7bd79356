"""Digit recognition from force/moment time series drawn on a flange-mounted touchpad."""

__version__ = "0.1.0"
