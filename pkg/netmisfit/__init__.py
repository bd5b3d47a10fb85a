"""Information-matrix misspecification tests for random graph models."""

__version__ = "0.1.0"
