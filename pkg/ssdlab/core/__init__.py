"""Core functionality for ssdlab."""
