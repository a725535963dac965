"""Evaluation package: metrics, seed aggregation, saliency and cluster matching."""
