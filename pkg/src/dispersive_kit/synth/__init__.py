"""Synthetic data generators with known ground truth."""
