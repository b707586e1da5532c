"""ssdlab - Asymmetric sequential social dilemma lab."""

__version__ = "0.1.0"
__author__ = "ssdlab Team"
