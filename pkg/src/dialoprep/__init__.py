"""Dialogue corpus construction, denoising pair generation, and evaluation."""

__version__ = "0.1.0"
