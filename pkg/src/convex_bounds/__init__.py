"""Certified two-sided bounds for convex functions."""
