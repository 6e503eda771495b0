"""Tests for rpf-cocycle."""
