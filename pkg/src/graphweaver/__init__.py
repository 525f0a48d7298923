"""graphweaver: weave independent photons into graph states with cascade CZ operations."""

__version__ = "0.1.0"
