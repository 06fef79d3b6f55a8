"""Change-focused GUI test generation over declarative app models."""

__version__ = "0.1.0"
