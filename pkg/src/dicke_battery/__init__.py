"""Collective charging of a Dicke quantum battery in a thermal environment."""

__version__ = "0.1.0"
