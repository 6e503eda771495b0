"""CLI entry point for rpf_cocycle module execution."""

from rpf_cocycle.cli import app

if __name__ == "__main__":
    app(prog_name="rpf-cocycle")
