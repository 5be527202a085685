"""Workbench for sketches, their models, and diagrammatic proofs."""

__version__ = "0.1.0"
