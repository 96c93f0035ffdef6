"""Planners module initialization."""
