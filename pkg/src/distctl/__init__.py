"""Distributed control of multi-channel LTI systems over directed graphs."""

__version__ = "0.1.0"
