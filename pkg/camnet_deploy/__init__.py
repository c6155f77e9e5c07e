"""Camera network deployment: radial coverage evaluation and placement optimization."""

__version__ = "0.1.0"
