"""Time-symmetric Fokker-Planck dynamics for Husimi functions."""

__version__ = "0.1.0"
