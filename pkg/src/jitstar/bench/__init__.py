"""Benchmark module initialization."""
