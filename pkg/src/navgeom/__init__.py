"""Navigation (Zermelo) geometry on a coordinate chart."""

__version__ = "0.1.0"
