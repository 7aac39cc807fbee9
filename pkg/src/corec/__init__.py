"""Corecursion up-to for codatatypes, with a certificate checker for coinductive proofs."""

__version__ = "0.1.0"
