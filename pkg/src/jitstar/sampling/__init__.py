"""Sampling module initialization."""
