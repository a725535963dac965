"""Executor package for orchestrating experiments and persisting runs."""
