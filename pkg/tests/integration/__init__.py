"""Integration tests for rpf-cocycle."""
