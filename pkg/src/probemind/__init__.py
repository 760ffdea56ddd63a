"""probemind: interactive agent modeling via imitation plus learned probing."""

__version__ = "0.1.0"
