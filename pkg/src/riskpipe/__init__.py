"""Organizational risk-vector pipeline: attribution, aggregation, statistics, models."""

__version__ = "0.1.0"
