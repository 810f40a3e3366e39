"""Equations with rational constraints over trace monoids and right-angled Artin groups."""

__version__ = "0.1.0"
