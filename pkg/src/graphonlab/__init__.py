"""graphonlab: step graphons, cut metrics and hereditary graph classes."""

__version__ = "0.1.0"
