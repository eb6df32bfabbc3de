"""Conditional edges of the pipeline graph."""
