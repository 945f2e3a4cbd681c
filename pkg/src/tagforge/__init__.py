"""tagforge: hash-tag vector spaces and cross-modal tag suggestion."""

__version__ = "0.1.0"
