"""Tests for ssdlab."""
