"""Spectral layer: channel grid, crosstalk and optics design."""
