"""Core module for RPF Cocycle."""
