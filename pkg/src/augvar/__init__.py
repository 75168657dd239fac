"""Augmented variational principles: Noether currents, superpotentials and
relative conserved quantities for a catalog of field theories."""

__version__ = "0.1.0"
