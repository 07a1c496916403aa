"""Seed set selection strategies and precision-at-recall evaluation
for predictive document review."""

__version__ = "0.1.0"
