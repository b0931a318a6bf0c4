"""Strain-driven spin resonance of SiC divacancies in surface acoustic wave cavities."""

__version__ = "0.1.0"
