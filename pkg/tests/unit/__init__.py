"""Unit tests for rpf-cocycle."""
