"""RPF Cocycle - transfer operator cocycles over sofic factors of shifts of finite type."""

__version__ = "0.1.0"
__author__ = "RPF Cocycle Contributors"
