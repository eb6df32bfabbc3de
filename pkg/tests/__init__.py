"""Tests for tabsynth."""
