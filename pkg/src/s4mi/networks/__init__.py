"""Micro network zoo: segmenters, classifiers, heads and checkpoints."""
