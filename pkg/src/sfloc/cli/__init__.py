"""Orchestration, metrics and reports."""
